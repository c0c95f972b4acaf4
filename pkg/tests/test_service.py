"""HTTP surface of the benchmark service."""

import pytest
from fastapi.testclient import TestClient

from immkl.service import app

client = TestClient(app)

TINY = {
    "truth": {"horizon": 8},
    "experiment": {"n_runs": 2, "base_seed": 5},
}


class TestHealthAndDefaults:
    def test_health(self):
        response = client.get("/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok" and body["version"]

    def test_defaults_echo_parses(self):
        from immkl.config import build_experiment, parse_ini

        response = client.get("/api/defaults")
        assert response.status_code == 200
        cfg = build_experiment(parse_ini(response.json()["config_ini"]))
        assert cfg.n_runs == 1000 and cfg.truth.r == 200.0


class TestRunEndpoint:
    def test_tiny_run(self):
        response = client.post("/api/run", json=TINY)
        assert response.status_code == 200
        body = response.json()
        lines = body["metrics_csv"].strip().split("\n")
        assert lines[0] == "step,variant,rmse_pos,cov_err"
        assert len(lines) == 1 + 8 * 3
        assert body["excluded_runs"] == 0 and body["n_runs_used"] == 2
        assert {row["variant"] for row in body["summary"]} == {"kl", "mm", "known_r"}
        assert "horizon = 8" in body["effective_config"]

    def test_identical_requests_identical_csv(self):
        a = client.post("/api/run", json=TINY).json()["metrics_csv"]
        b = client.post("/api/run", json=TINY).json()["metrics_csv"]
        assert a == b

    def test_invalid_config_is_422(self):
        bad = {"filters": {"nc": 0}, "truth": {"horizon": 5}, "experiment": {"n_runs": 1}}
        response = client.post("/api/run", json=bad)
        assert response.status_code == 422
        assert "filters.nc" in str(response.json()["detail"])

    def test_unknown_key_is_422(self):
        response = client.post("/api/run", json={"truth": {"warp": 9}})
        assert response.status_code == 422


class TestSweepEndpoint:
    def test_tiny_sweep(self):
        payload = {
            "truth": {"horizon": 6},
            "experiment": {"n_runs": 1, "r_sweep": [50.0, 100.0]},
        }
        response = client.post("/api/sweep", json=payload)
        assert response.status_code == 200
        body = response.json()
        assert len(body["rows"]) == 2 * 3
        assert body["sweep_csv"].startswith("r,variant,avg_rmse_pos,avg_cov_err\n")


class TestValidateEndpoint:
    def test_all_checks_pass(self):
        response = client.post("/api/validate")
        assert response.status_code == 200
        body = response.json()
        assert body["passed"] is True
        names = {c["name"] for c in body["checks"]}
        assert {"kl-fusion-grid-optimality", "iw-normalization", "fusion-coincidence"} <= names
