"""Experiment configuration: defaults, INI files, overrides, echo.

The file format is flat INI with three sections.  Every key is optional;
unspecified keys take the benchmark defaults below, so an empty (or
absent) config reproduces the standard experiment.  ``--set section.key=
value`` overrides are applied on top of the file.

[truth]        q, r, T, turn_rates_deg, horizon, x0, r0_mode
[filters]      variants, nc, rho, nu0, sigma0_diag, p0_diag, prob_floor
[experiment]   n_runs, base_seed, r_sweep, steady_state_window

``steady_state_window`` is "start:stop" in 1-based step numbers (empty
means the final half of the horizon).  The effective configuration is
serialized back to the same INI dialect with full-precision floats, so
re-parsing the echo reproduces the identical experiment.
"""

from __future__ import annotations

import configparser
import io
import math

import numpy as np

from .errors import ConfigError
from .filters import FilterConfig, Variant
from .harness import ExperimentConfig
from .models import TruthConfig, true_measurement_cov

__all__ = [
    "DEFAULT_SECTIONS",
    "parse_ini",
    "apply_overrides",
    "build_experiment",
    "effective_sections",
    "sections_to_ini",
    "default_experiment",
]

DEFAULT_SECTIONS: dict[str, dict[str, object]] = {
    "truth": {
        "q": 0.09,
        "r": 200.0,
        "T": 1.0,
        "turn_rates_deg": [-4.0, 0.0, 4.0],
        "horizon": 100,
        "x0": [0.0, 10.0, 0.0, 10.0],
        "r0_mode": 1,
    },
    "filters": {
        "variants": ["kl", "mm", "known_r"],
        "nc": 2,
        "rho": 1.0,
        "nu0": 20.0,
        "sigma0_diag": [50.0, 50.0],
        "p0_diag": [100.0, 10.0, 100.0, 10.0],
        "prob_floor": 0.0,
    },
    "experiment": {
        "n_runs": 1000,
        "base_seed": 0,
        "r_sweep": [50.0, 100.0, 200.0, 400.0],
        "steady_state_window": "",
    },
}

_LIST_KEYS = {"turn_rates_deg", "x0", "sigma0_diag", "p0_diag", "r_sweep", "variants"}
_INT_KEYS = {"horizon", "r0_mode", "nc", "n_runs", "base_seed"}
_FLOAT_KEYS = {"q", "r", "T", "rho", "nu0", "prob_floor"}


def _parse_scalar(key: str, raw: object, kind: str):
    qualified = key
    try:
        if kind == "int":
            if isinstance(raw, bool):
                raise ValueError("boolean is not an integer")
            if isinstance(raw, float) and raw != int(raw):
                raise ValueError("not an integer")
            return int(raw)
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{qualified}: expected {kind}, got {raw!r}")


def _parse_list(key: str, raw: object) -> list:
    if isinstance(raw, str):
        items = [s.strip() for s in raw.split(",") if s.strip()]
    elif isinstance(raw, (list, tuple)):
        items = list(raw)
    else:
        raise ConfigError(f"{key}: expected a comma-separated list, got {raw!r}")
    if key.rsplit(".", 1)[-1] == "variants":
        return [str(s).strip().lower() for s in items]
    try:
        return [float(s) for s in items]
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected numbers, got {raw!r}")


def _normalize(sections: dict) -> dict:
    """Fill defaults, reject unknown keys, coerce types. Keys are section.key."""
    merged: dict[str, dict[str, object]] = {
        name: dict(defaults) for name, defaults in DEFAULT_SECTIONS.items()
    }
    for sec_name, content in sections.items():
        if sec_name not in merged:
            raise ConfigError(f"{sec_name}: unknown section")
        for key, raw in content.items():
            if key not in DEFAULT_SECTIONS[sec_name]:
                raise ConfigError(f"{sec_name}.{key}: unknown key")
            qualified = f"{sec_name}.{key}"
            if key in _LIST_KEYS:
                merged[sec_name][key] = _parse_list(qualified, raw)
            elif key in _INT_KEYS:
                merged[sec_name][key] = _parse_scalar(qualified, raw, "int")
            elif key in _FLOAT_KEYS:
                merged[sec_name][key] = _parse_scalar(qualified, raw, "float")
            else:  # steady_state_window keeps its raw string form
                merged[sec_name][key] = "" if raw is None else str(raw).strip()
    return merged


def parse_ini(text: str) -> dict:
    """Parse INI text into raw {section: {key: string}} (no defaults applied)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case (the sampling period key is "T")
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config file does not parse: {exc}")
    return {name: dict(parser.items(name)) for name in parser.sections()}


def apply_overrides(sections: dict, overrides: list[str]) -> dict:
    """Apply repeatable ``section.key=value`` strings over parsed sections."""
    out = {name: dict(content) for name, content in sections.items()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected section.key=value")
        key, value = item.split("=", 1)
        key = key.strip()
        if key.count(".") != 1:
            raise ConfigError(f"override {key!r}: expected section.key=value")
        sec_name, field_name = key.split(".")
        out.setdefault(sec_name, {})[field_name] = value.strip()
    return out


def _window_from_string(raw: str, horizon: int) -> tuple[int, int] | None:
    if not raw:
        return None
    parts = raw.split(":")
    if len(parts) != 2:
        raise ConfigError(
            f"experiment.steady_state_window: expected 'start:stop', got {raw!r}"
        )
    try:
        start, stop = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(
            f"experiment.steady_state_window: expected integers, got {raw!r}"
        )
    if not 1 <= start < stop <= horizon:
        raise ConfigError(
            "experiment.steady_state_window: need 1 <= start < stop <= horizon, "
            f"got {raw!r} with horizon {horizon}"
        )
    return start - 1, stop  # store as 0-based half-open


def build_experiment(sections: dict | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Construct a validated ExperimentConfig from raw sections plus overrides."""
    sections = apply_overrides(sections or {}, overrides or [])
    merged = _normalize(sections)
    truth_raw = merged["truth"]
    filt_raw = merged["filters"]
    exp_raw = merged["experiment"]

    truth = TruthConfig(
        q=truth_raw["q"],
        r=truth_raw["r"],
        T=truth_raw["T"],
        turn_rates=tuple(math.radians(w) for w in truth_raw["turn_rates_deg"]),
        horizon=truth_raw["horizon"],
        x0=np.asarray(truth_raw["x0"], dtype=float),
        r0_mode=truth_raw["r0_mode"],
    )

    variants = filt_raw["variants"]
    if not variants:
        raise ConfigError("filters.variants: at least one variant is required")
    known = {v.value for v in Variant}
    for label in variants:
        if label not in known:
            raise ConfigError(
                f"filters.variants: unknown variant {label!r}, expected one of {sorted(known)}"
            )
    if int(filt_raw["nc"]) < 1:
        raise ConfigError(f"filters.nc: must be an integer >= 1, got {filt_raw['nc']}")
    filters = tuple(
        FilterConfig(
            variant=Variant(label),
            nc=filt_raw["nc"],
            rho=filt_raw["rho"],
            nu0=filt_raw["nu0"],
            sigma0=np.diag(filt_raw["sigma0_diag"]),
            p0=np.diag(filt_raw["p0_diag"]),
            known_r=true_measurement_cov(truth.r) if label == "known_r" else None,
            prob_floor=filt_raw["prob_floor"],
        )
        for label in variants
    )

    window = _window_from_string(str(exp_raw["steady_state_window"]), truth.horizon)
    return ExperimentConfig(
        truth=truth,
        filters=filters,
        n_runs=exp_raw["n_runs"],
        base_seed=exp_raw["base_seed"],
        r_sweep=tuple(exp_raw["r_sweep"]),
        steady_state_window=window,
    )


def default_experiment(**overrides_kw) -> ExperimentConfig:
    """The benchmark defaults, optionally with section.key=value overrides."""
    overrides = [f"{k}={v}" for k, v in overrides_kw.items()]
    return build_experiment({}, overrides)


def effective_sections(cfg: ExperimentConfig) -> dict:
    """Serialize an ExperimentConfig back to raw sections (inverse of build)."""
    window = ""
    if cfg.steady_state_window is not None:
        start, stop = cfg.steady_state_window
        window = f"{start + 1}:{stop}"
    first = cfg.filters[0]
    return {
        "truth": {
            "q": repr(cfg.truth.q),
            "r": repr(cfg.truth.r),
            "T": repr(cfg.truth.T),
            "turn_rates_deg": ", ".join(repr(math.degrees(w)) for w in cfg.truth.turn_rates),
            "horizon": str(cfg.truth.horizon),
            "x0": ", ".join(repr(float(x)) for x in cfg.truth.x0),
            "r0_mode": str(cfg.truth.r0_mode),
        },
        "filters": {
            "variants": ", ".join(cfg.variant_labels),
            "nc": str(first.nc),
            "rho": repr(first.rho),
            "nu0": repr(first.nu0),
            "sigma0_diag": ", ".join(repr(float(x)) for x in np.diag(first.sigma0)),
            "p0_diag": ", ".join(repr(float(x)) for x in np.diag(first.p0)),
            "prob_floor": repr(first.prob_floor),
        },
        "experiment": {
            "n_runs": str(cfg.n_runs),
            "base_seed": str(cfg.base_seed),
            "r_sweep": ", ".join(repr(r) for r in cfg.r_sweep),
            "steady_state_window": window,
        },
    }


def sections_to_ini(sections: dict) -> str:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for name, content in sections.items():
        parser[name] = {k: str(v) for k, v in content.items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
