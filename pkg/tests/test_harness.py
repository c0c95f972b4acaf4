"""Monte Carlo engine: metric arithmetic, fairness, determinism, exclusion."""

import math

import numpy as np
import pytest

from immkl.config import default_experiment
from immkl.errors import ConfigError, DimensionError
from immkl.harness import (
    ExperimentConfig,
    config_for_noise_level,
    cov_error,
    metrics_csv_text,
    rmse_position,
    run_monte_carlo,
    sweep_csv_text,
    sweep_noise_levels,
)
from immkl.filters import Variant


def desk_config(**overrides):
    base = {
        "experiment.n_runs": 2,
        "truth.horizon": 10,
    }
    base.update(overrides)
    return default_experiment(**base)


class TestRmsePosition:
    def test_perfect_estimates(self):
        truth = np.random.default_rng(0).standard_normal((3, 5, 4))
        np.testing.assert_array_equal(rmse_position(truth, truth), np.zeros(5))

    def test_constant_offset(self):
        truth = np.zeros((1, 4, 4))
        est = truth.copy()
        est[..., 0] += 1.0  # px offset only
        np.testing.assert_allclose(rmse_position(est, truth), np.ones(4))

    def test_two_run_rms(self):
        truth = np.zeros((2, 1, 4))
        est = np.zeros((2, 1, 4))
        est[0, 0, 0] = 3.0                 # error norm 3
        est[1, 0, 0], est[1, 0, 2] = 0.0, 4.0  # error norm 4
        expected = 5.0 / math.sqrt(2.0)
        assert rmse_position(est, truth)[0] == pytest.approx(expected, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            rmse_position(np.zeros((2, 3, 4)), np.zeros((2, 4, 4)))


class TestCovError:
    def test_exact_estimates(self):
        r = np.array([[200.0, 10.0], [10.0, 200.0]])
        est = np.broadcast_to(r, (4, 6, 2, 2))
        np.testing.assert_array_equal(cov_error(est, r), np.zeros(6))

    def test_doubled_estimate_normalizes_to_one(self):
        r = np.array([[200.0, 10.0], [10.0, 200.0]])
        est = np.broadcast_to(2.0 * r, (1, 3, 2, 2))
        np.testing.assert_allclose(cov_error(est, r), np.ones(3), rtol=1e-14)

    def test_frobenius_arithmetic(self):
        r = np.array([[200.0, 10.0], [10.0, 200.0]])
        est = np.array([[[210.0, 10.0], [10.0, 190.0]]])[None]
        expected = math.sqrt(200.0) / math.sqrt(80200.0)
        assert cov_error(est, r)[0] == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.04994, abs=5e-6)


class TestRunMonteCarlo:
    def test_variants_share_measurements_by_hash(self):
        result = run_monte_carlo(desk_config(**{"experiment.n_runs": 1}))
        assert len(result.measurement_digests) == 1
        assert result.excluded_runs == 0

    def test_deterministic_given_seed(self):
        cfg = desk_config()
        a, b = run_monte_carlo(cfg), run_monte_carlo(cfg)
        for v in cfg.variant_labels:
            np.testing.assert_array_equal(a.metrics[v].rmse_pos, b.metrics[v].rmse_pos)
            np.testing.assert_array_equal(a.metrics[v].cov_err, b.metrics[v].cov_err)

    def test_seed_changes_results(self):
        a = run_monte_carlo(desk_config())
        b = run_monte_carlo(desk_config(**{"experiment.base_seed": 999}))
        assert np.abs(a.metrics["kl"].rmse_pos - b.metrics["kl"].rmse_pos).max() > 0

    def test_metrics_finite_and_known_r_exact(self):
        result = run_monte_carlo(desk_config(**{"experiment.n_runs": 3}))
        for v, m in result.metrics.items():
            assert np.isfinite(m.rmse_pos).all() and np.isfinite(m.cov_err).all()
        np.testing.assert_array_equal(result.metrics["known_r"].cov_err, 0.0)

    def test_csv_shape_and_format(self):
        cfg = desk_config()
        result = run_monte_carlo(cfg)
        text = metrics_csv_text(result, cfg.variant_labels)
        lines = text.strip().split("\n")
        assert lines[0] == "step,variant,rmse_pos,cov_err"
        assert len(lines) == 1 + cfg.truth.horizon * len(cfg.filters)
        first = lines[1].split(",")
        assert first[0] == "1" and first[1] == "kl"
        assert float(first[2]) == result.metrics["kl"].rmse_pos[0]  # repr round-trip
        assert "\r" not in text and text.endswith("\n")


class TestDivergenceHandling:
    def test_diverged_runs_are_excluded_and_counted(self, monkeypatch):
        import immkl.harness as harness
        from immkl.errors import NumericsError

        real = harness._filter_run
        calls = {"runs": set()}

        def flaky(meas, model, fc, x0_hat):
            digest = float(meas[0, 0])
            calls["runs"].add(digest)
            if len(calls["runs"]) == 2 and fc.variant is Variant.KL:
                raise NumericsError("innovation covariance is singular")
            return real(meas, model, fc, x0_hat)

        monkeypatch.setattr(harness, "_filter_run", flaky)
        cfg = desk_config(**{"experiment.n_runs": 3})
        result = run_monte_carlo(cfg)
        assert result.excluded_runs == 1
        assert result.n_runs_used == 2
        for m in result.metrics.values():
            assert np.isfinite(m.rmse_pos).all()

    def test_non_finite_outputs_excluded(self, monkeypatch):
        import immkl.harness as harness

        real = harness._filter_run
        state = {"count": 0}

        def poisoned(meas, model, fc, x0_hat):
            states, r_hats = real(meas, model, fc, x0_hat)
            state["count"] += 1
            if state["count"] == 1:
                states = states.copy()
                states[0, 0] = np.nan
            return states, r_hats

        monkeypatch.setattr(harness, "_filter_run", poisoned)
        result = run_monte_carlo(desk_config(**{"experiment.n_runs": 2}))
        assert result.excluded_runs == 1
        assert result.n_runs_used == 1

    def test_all_runs_diverging_is_an_error(self, monkeypatch):
        import immkl.harness as harness
        from immkl.errors import NumericsError

        def always_fails(meas, model, fc, x0_hat):
            raise NumericsError("boom")

        monkeypatch.setattr(harness, "_filter_run", always_fails)
        with pytest.raises(NumericsError):
            run_monte_carlo(desk_config(**{"experiment.n_runs": 2}))


class TestSweep:
    def test_single_value_reduces_to_run(self):
        cfg = desk_config(**{"experiment.r_sweep": "200"})
        sweep = sweep_noise_levels(cfg)
        run = run_monte_carlo(config_for_noise_level(cfg, 200.0))
        for row in sweep.rows:
            m = run.metrics[row.variant]
            assert row.avg_rmse_pos == pytest.approx(float(m.rmse_pos.mean()), abs=1e-14)
            assert row.avg_cov_err == pytest.approx(float(m.cov_err.mean()), abs=1e-14)

    def test_known_r_tracks_swept_level(self):
        cfg = desk_config()
        rebound = config_for_noise_level(cfg, 50.0)
        for fc in rebound.filters:
            if fc.variant is Variant.KNOWN_R:
                np.testing.assert_array_equal(
                    fc.known_r, np.array([[50.0, 2.5], [2.5, 50.0]])
                )
        assert rebound.truth.r == 50.0

    def test_rmse_nondecreasing_in_noise_level(self):
        cfg = desk_config(
            **{
                "experiment.r_sweep": "20, 200, 2000",
                "experiment.n_runs": 4,
                "truth.horizon": 30,
            }
        )
        sweep = sweep_noise_levels(cfg)
        by_variant = {}
        for row in sweep.rows:
            by_variant.setdefault(row.variant, []).append((row.r, row.avg_rmse_pos))
        for rows in by_variant.values():
            values = [v for _, v in sorted(rows)]
            assert values == sorted(values)

    def test_sweep_csv_format(self):
        cfg = desk_config(**{"experiment.r_sweep": "100, 200"})
        text = sweep_csv_text(sweep_noise_levels(cfg))
        lines = text.strip().split("\n")
        assert lines[0] == "r,variant,avg_rmse_pos,avg_cov_err"
        assert len(lines) == 1 + 2 * len(cfg.filters)
        assert lines[1].startswith("100.0,kl,")

    def test_empty_sweep_rejected(self):
        cfg = desk_config()
        object.__setattr__(cfg, "r_sweep", ())
        with pytest.raises(ConfigError):
            sweep_noise_levels(cfg)


class TestExperimentConfig:
    def test_window_defaults_to_final_half(self):
        cfg = desk_config(**{"truth.horizon": 100})
        assert cfg.window == (50, 100)

    def test_explicit_window(self):
        cfg = desk_config(**{"truth.horizon": 100, "experiment.steady_state_window": "61:90"})
        assert cfg.window == (60, 90)

    def test_requires_filters(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(filters=())

    def test_rejects_bad_window(self):
        with pytest.raises(ConfigError):
            desk_config(**{"truth.horizon": 10, "experiment.steady_state_window": "9:20"})
