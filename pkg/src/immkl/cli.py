"""Command-line client for the benchmark service.

Subcommands:

* ``run``      -- one Monte Carlo experiment; writes metrics.csv and the
  effective_config echo into --out and prints a summary table.
* ``sweep``    -- experiment per noise level; writes sweep.csv.
* ``validate`` -- the built-in numerical self-checks.

By default the service handlers run in process, so no server is needed;
``--server URL`` sends the same request to a remote instance instead.

Exit codes: 0 success, 2 configuration error, 3 runtime or numerical
failure (including failed validation), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, NumericsError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="immkl",
        description="Monte Carlo benchmark for adaptive-noise IMM filters",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="INI config file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key, e.g. --set truth.r=100 (repeatable)",
        )
        p.add_argument("--seed", type=int, default=None, help="override experiment.base_seed")
        p.add_argument("--runs", type=int, default=None, help="override experiment.n_runs")
        p.add_argument("--server", default=None, help="POST to a running service instead")

    p_run = sub.add_parser("run", help="run one experiment and write metrics.csv")
    common(p_run)
    p_sweep = sub.add_parser("sweep", help="run the noise-level sweep and write sweep.csv")
    common(p_sweep)
    p_val = sub.add_parser("validate", help="run the numerical self-checks")
    p_val.add_argument("--server", default=None, help="validate on a running service")
    return parser


def _request_payload(args) -> dict:
    """Read the config file and fold in the CLI overrides."""
    from .config import apply_overrides, parse_ini

    sections: dict = {}
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"config file {args.config}: {exc}")
        sections = parse_ini(text)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"experiment.base_seed={args.seed}")
    if args.runs is not None:
        overrides.append(f"experiment.n_runs={args.runs}")
    return apply_overrides(sections, overrides)


def _post(server: str, path: str, payload: dict | None) -> dict:
    import httpx

    url = server.rstrip("/") + path
    response = httpx.post(url, json=payload if payload is not None else {}, timeout=None)
    if response.status_code == 422:
        detail = response.json().get("detail", response.text)
        raise ConfigError(str(detail))
    if response.status_code >= 500:
        detail = response.json().get("detail", response.text)
        raise NumericsError(str(detail))
    response.raise_for_status()
    return response.json()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))


def _local_request(sections: dict):
    from .service import ExperimentRequest

    return ExperimentRequest.model_validate(sections)


def _cmd_run(args) -> int:
    sections = _typed_sections(_request_payload(args))
    if args.server:
        data = _post(args.server, "/api/run", sections)
    else:
        from .service import perform_run

        data = perform_run(_local_request(sections)).model_dump()
    _write(args.out / "metrics.csv", data["metrics_csv"])
    _write(args.out / "effective_config", data["effective_config"])
    print(f"wrote {args.out / 'metrics.csv'} ({data['n_runs_used']} runs used, "
          f"{data['excluded_runs']} excluded)")
    print(f"{'variant':10s} {'ss rmse_pos':>12s} {'ss cov_err':>12s} "
          f"{'avg rmse_pos':>13s} {'avg cov_err':>12s}")
    for row in data["summary"]:
        print(
            f"{row['variant']:10s} {row['steady_state_rmse_pos']:12.4f} "
            f"{row['steady_state_cov_err']:12.5f} {row['avg_rmse_pos']:13.4f} "
            f"{row['avg_cov_err']:12.5f}"
        )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    sections = _typed_sections(_request_payload(args))
    if args.server:
        data = _post(args.server, "/api/sweep", sections)
    else:
        from .service import perform_sweep

        data = perform_sweep(_local_request(sections)).model_dump()
    _write(args.out / "sweep.csv", data["sweep_csv"])
    _write(args.out / "effective_config", data["effective_config"])
    print(f"wrote {args.out / 'sweep.csv'} ({data['excluded_runs']} runs excluded)")
    print(f"{'r':>8s} {'variant':10s} {'avg rmse_pos':>13s} {'avg cov_err':>12s}")
    for row in data["rows"]:
        print(f"{row['r']:8.1f} {row['variant']:10s} {row['avg_rmse_pos']:13.4f} "
              f"{row['avg_cov_err']:12.5f}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    if getattr(args, "server", None):
        data = _post(args.server, "/api/validate", {})
    else:
        from .service import perform_validate

        data = perform_validate().model_dump()
    for check in data["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"[{status}] {check['name']}: {check['detail']}")
    if not data["passed"]:
        print("validation FAILED")
        return EXIT_RUNTIME
    print("all checks passed")
    return EXIT_OK


def _typed_sections(sections: dict) -> dict:
    """Coerce raw strings to the types the request models expect."""
    from .config import _normalize  # shares the single source of key typing

    merged = _normalize(sections)
    # only forward keys the user actually set; defaults are applied server-side
    out: dict = {}
    for sec_name, content in sections.items():
        out[sec_name] = {k: merged[sec_name][k] for k in content}
    return out


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
