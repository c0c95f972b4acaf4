"""Monte Carlo benchmark engine.

Each run draws one truth/measurement realization (generator seeded with
base_seed + run index) and feeds the identical measurement sequence to
every configured filter variant.  Per-step position RMSE and normalized
noise-covariance error are aggregated across runs; a run is excluded (and
counted) if any variant diverges numerically or produces a non-finite
metric.  Aggregation is reduced in run-index order, so results are
deterministic for a fixed configuration.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DimensionError, NumericsError
from .filters import FilterConfig, Variant, imm_step, initial_bank
from .models import (
    TruthConfig,
    build_ct_scenario,
    psd_sqrt,
    simulate_truth,
    true_measurement_cov,
)

__all__ = [
    "ExperimentConfig",
    "RunMetrics",
    "MonteCarloResult",
    "SweepRow",
    "SweepResult",
    "rmse_position",
    "cov_error",
    "run_monte_carlo",
    "sweep_noise_levels",
    "metrics_csv_text",
    "sweep_csv_text",
]

# position components inside the (px, vx, py, vy) state
_POS = (0, 2)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one benchmark invocation needs."""

    truth: TruthConfig = field(default_factory=TruthConfig)
    filters: tuple = ()
    n_runs: int = 1000
    base_seed: int = 0
    r_sweep: tuple = (50.0, 100.0, 200.0, 400.0)
    steady_state_window: tuple | None = None  # (start, stop) step indices, 0-based

    def __post_init__(self) -> None:
        filters = tuple(self.filters)
        if not filters:
            raise ConfigError("filters.variants: at least one filter variant is required")
        labels = [f.variant.value for f in filters]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"filters.variants: duplicate variants in {labels}")
        if int(self.n_runs) < 1:
            raise ConfigError(f"experiment.n_runs: must be >= 1, got {self.n_runs}")
        sweep = tuple(float(r) for r in self.r_sweep)
        if any(r <= 0 for r in sweep):
            raise ConfigError(f"experiment.r_sweep: all values must be > 0, got {sweep}")
        window = self.steady_state_window
        if window is not None:
            start, stop = int(window[0]), int(window[1])
            if not 0 <= start < stop <= self.truth.horizon:
                raise ConfigError(
                    "experiment.steady_state_window: need 0 <= start < stop <= horizon, "
                    f"got {window} with horizon {self.truth.horizon}"
                )
            window = (start, stop)
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "n_runs", int(self.n_runs))
        object.__setattr__(self, "base_seed", int(self.base_seed))
        object.__setattr__(self, "r_sweep", sweep)
        object.__setattr__(self, "steady_state_window", window)

    @property
    def window(self) -> tuple[int, int]:
        """Steady-state step range; defaults to the final half of the horizon."""
        if self.steady_state_window is not None:
            return self.steady_state_window
        return self.truth.horizon // 2, self.truth.horizon

    @property
    def variant_labels(self) -> tuple[str, ...]:
        return tuple(f.variant.value for f in self.filters)


@dataclass(frozen=True)
class RunMetrics:
    """Per-step aggregates of one variant over all healthy runs."""

    variant: str
    rmse_pos: np.ndarray
    cov_err: np.ndarray


@dataclass(frozen=True)
class MonteCarloResult:
    metrics: dict
    excluded_runs: int
    n_runs_used: int
    measurement_digests: tuple


@dataclass(frozen=True)
class SweepRow:
    r: float
    variant: str
    avg_rmse_pos: float
    avg_cov_err: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    excluded_runs: int


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def rmse_position(estimates: np.ndarray, truths: np.ndarray) -> np.ndarray:
    """Per-step RMS of the planar position error across runs.

    Both arrays have shape (runs, steps, state_dim); positions are the
    (px, py) components of the state.
    """
    estimates = np.asarray(estimates, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if estimates.shape != truths.shape:
        raise DimensionError(
            f"estimate shape {estimates.shape} != truth shape {truths.shape}"
        )
    err = estimates[..., _POS] - truths[..., _POS]
    return np.sqrt(np.mean(np.sum(err**2, axis=-1), axis=0))


def cov_error(r_estimates: np.ndarray, r_true: np.ndarray) -> np.ndarray:
    """Per-step normalized Frobenius RMS error of the noise-covariance estimate."""
    r_estimates = np.asarray(r_estimates, dtype=float)
    r_true = np.asarray(r_true, dtype=float)
    if r_estimates.shape[-2:] != r_true.shape:
        raise DimensionError(
            f"estimate blocks {r_estimates.shape[-2:]} != truth shape {r_true.shape}"
        )
    sq = np.sum((r_estimates - r_true) ** 2, axis=(-2, -1))
    return np.sqrt(np.mean(sq, axis=0)) / np.sqrt(np.sum(r_true**2))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def _filter_run(meas, model, cfg: FilterConfig, x0_hat):
    """Run one variant over one measurement sequence; returns (states, Rs)."""
    bank = initial_bank(model, cfg, x0_hat)
    horizon = meas.shape[0]
    states = np.empty((horizon, model.state_dim))
    r_hats = np.empty((horizon, model.meas_dim, model.meas_dim))
    for k in range(horizon):
        bank, out = imm_step(bank, model, meas[k], cfg)
        states[k] = out.fused_state.mean
        r_hats[k] = out.fused_R
    return states, r_hats


def run_monte_carlo(cfg: ExperimentConfig) -> MonteCarloResult:
    """Run every variant over n_runs shared realizations and aggregate."""
    model = build_ct_scenario(cfg.truth)
    r_true = true_measurement_cov(cfg.truth.r)
    labels = cfg.variant_labels
    horizon = cfg.truth.horizon

    sq_pos = {v: np.zeros(horizon) for v in labels}
    sq_cov = {v: np.zeros(horizon) for v in labels}
    used = 0
    excluded = 0
    digests = []

    p0_sqrt = psd_sqrt(cfg.filters[0].p0)
    for run in range(cfg.n_runs):
        rng = np.random.default_rng(cfg.base_seed + run)
        truth_states, _, meas = simulate_truth(model, cfg.truth, rng)
        x0_hat = cfg.truth.x0 + p0_sqrt @ rng.standard_normal(model.state_dim)
        meas.setflags(write=False)

        per_variant = {}
        seen = set()
        try:
            for fc in cfg.filters:
                seen.add(hashlib.sha256(meas.tobytes()).hexdigest())
                per_variant[fc.variant.value] = _filter_run(meas, model, fc, x0_hat)
        except NumericsError:
            excluded += 1
            continue
        if len(seen) != 1:
            raise AssertionError("variants consumed different measurement sequences")
        digests.append(seen.pop())

        healthy = True
        for v, (states, r_hats) in per_variant.items():
            if not (np.isfinite(states).all() and np.isfinite(r_hats).all()):
                healthy = False
                break
        if not healthy:
            excluded += 1
            continue

        for v, (states, r_hats) in per_variant.items():
            err = states[:, _POS] - truth_states[:, _POS]
            sq_pos[v] += np.sum(err**2, axis=-1)
            sq_cov[v] += np.sum((r_hats - r_true) ** 2, axis=(-2, -1))
        used += 1

    if used == 0:
        raise NumericsError(f"all {cfg.n_runs} runs diverged; nothing to aggregate")

    norm = np.sqrt(np.sum(r_true**2))
    metrics = {
        v: RunMetrics(
            variant=v,
            rmse_pos=np.sqrt(sq_pos[v] / used),
            cov_err=np.sqrt(sq_cov[v] / used) / norm,
        )
        for v in labels
    }
    return MonteCarloResult(
        metrics=metrics,
        excluded_runs=excluded,
        n_runs_used=used,
        measurement_digests=tuple(digests),
    )


def config_for_noise_level(cfg: ExperimentConfig, r: float) -> ExperimentConfig:
    """Rebind the experiment to noise level r.

    The known-covariance baseline tracks the true covariance, so its
    known_r is re-derived from the new level.
    """
    truth = replace(cfg.truth, r=float(r))
    filters = tuple(
        replace(fc, known_r=true_measurement_cov(float(r)))
        if fc.variant is Variant.KNOWN_R
        else fc
        for fc in cfg.filters
    )
    return replace(cfg, truth=truth, filters=filters)


def sweep_noise_levels(cfg: ExperimentConfig) -> SweepResult:
    """run_monte_carlo at each r in cfg.r_sweep, averaged over the full horizon."""
    if not cfg.r_sweep:
        raise ConfigError("experiment.r_sweep: must be nonempty for a sweep")
    rows = []
    excluded = 0
    for r in cfg.r_sweep:
        result = run_monte_carlo(config_for_noise_level(cfg, r))
        excluded += result.excluded_runs
        for v in cfg.variant_labels:
            m = result.metrics[v]
            rows.append(
                SweepRow(
                    r=float(r),
                    variant=v,
                    avg_rmse_pos=float(m.rmse_pos.mean()),
                    avg_cov_err=float(m.cov_err.mean()),
                )
            )
    return SweepResult(rows=tuple(rows), excluded_runs=excluded)


# ---------------------------------------------------------------------------
# CSV emission (UTF-8, LF, round-trip-safe floats)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def metrics_csv_text(result: MonteCarloResult, labels: tuple[str, ...]) -> str:
    lines = ["step,variant,rmse_pos,cov_err"]
    horizon = next(iter(result.metrics.values())).rmse_pos.size
    for k in range(horizon):
        for v in labels:
            m = result.metrics[v]
            lines.append(f"{k + 1},{v},{_fmt(m.rmse_pos[k])},{_fmt(m.cov_err[k])}")
    return "\n".join(lines) + "\n"


def sweep_csv_text(result: SweepResult) -> str:
    lines = ["r,variant,avg_rmse_pos,avg_cov_err"]
    for row in result.rows:
        lines.append(
            f"{_fmt(row.r)},{row.variant},{_fmt(row.avg_rmse_pos)},{_fmt(row.avg_cov_err)}"
        )
    return "\n".join(lines) + "\n"
