"""FastAPI service wrapping the benchmark harness.

The service is stateless: each request carries the experiment sections
(all keys optional, defaults fill the gaps), the response carries the
CSV artifacts as text plus a summary, and the effective configuration is
echoed so any run can be reproduced byte for byte.  The CLI talks to
these handlers either in process or over HTTP.

Run a server with:  uvicorn immkl.service:app
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .config import build_experiment, effective_sections, sections_to_ini
from .errors import ConfigError, NumericsError
from .harness import metrics_csv_text, run_monte_carlo, sweep_csv_text, sweep_noise_levels
from .validation import run_all_checks

__all__ = [
    "app",
    "ExperimentRequest",
    "RunResponse",
    "SweepResponse",
    "ValidateResponse",
    "perform_run",
    "perform_sweep",
    "perform_validate",
    "default_config_ini",
]


class TruthSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    q: float | None = None
    r: float | None = None
    T: float | None = None
    turn_rates_deg: list[float] | None = None
    horizon: int | None = None
    x0: list[float] | None = None
    r0_mode: int | None = None


class FilterSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variants: list[str] | None = None
    nc: int | None = None
    rho: float | None = None
    nu0: float | None = None
    sigma0_diag: list[float] | None = None
    p0_diag: list[float] | None = None
    prob_floor: float | None = None


class ExperimentSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_runs: int | None = None
    base_seed: int | None = None
    r_sweep: list[float] | None = None
    steady_state_window: str | None = None


class ExperimentRequest(BaseModel):
    truth: TruthSection = Field(default_factory=TruthSection)
    filters: FilterSection = Field(default_factory=FilterSection)
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)

    def sections(self) -> dict:
        raw = self.model_dump(exclude_none=True)
        return {name: content for name, content in raw.items() if content}


class VariantSummary(BaseModel):
    variant: str
    steady_state_rmse_pos: float
    steady_state_cov_err: float
    avg_rmse_pos: float
    avg_cov_err: float


class RunResponse(BaseModel):
    metrics_csv: str
    effective_config: str
    summary: list[VariantSummary]
    excluded_runs: int
    n_runs_used: int


class SweepRowModel(BaseModel):
    r: float
    variant: str
    avg_rmse_pos: float
    avg_cov_err: float


class SweepResponse(BaseModel):
    sweep_csv: str
    effective_config: str
    rows: list[SweepRowModel]
    excluded_runs: int


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str


class ValidateResponse(BaseModel):
    passed: bool
    checks: list[CheckModel]


class HealthResponse(BaseModel):
    status: str
    version: str


def _experiment_from(request: ExperimentRequest):
    cfg = build_experiment(request.sections())
    echo = sections_to_ini(effective_sections(cfg))
    return cfg, echo


def perform_run(request: ExperimentRequest) -> RunResponse:
    cfg, echo = _experiment_from(request)
    result = run_monte_carlo(cfg)
    start, stop = cfg.window
    summary = []
    for v in cfg.variant_labels:
        m = result.metrics[v]
        summary.append(
            VariantSummary(
                variant=v,
                steady_state_rmse_pos=float(m.rmse_pos[start:stop].mean()),
                steady_state_cov_err=float(m.cov_err[start:stop].mean()),
                avg_rmse_pos=float(m.rmse_pos.mean()),
                avg_cov_err=float(m.cov_err.mean()),
            )
        )
    return RunResponse(
        metrics_csv=metrics_csv_text(result, cfg.variant_labels),
        effective_config=echo,
        summary=summary,
        excluded_runs=result.excluded_runs,
        n_runs_used=result.n_runs_used,
    )


def perform_sweep(request: ExperimentRequest) -> SweepResponse:
    cfg, echo = _experiment_from(request)
    result = sweep_noise_levels(cfg)
    return SweepResponse(
        sweep_csv=sweep_csv_text(result),
        effective_config=echo,
        rows=[
            SweepRowModel(
                r=row.r,
                variant=row.variant,
                avg_rmse_pos=row.avg_rmse_pos,
                avg_cov_err=row.avg_cov_err,
            )
            for row in result.rows
        ],
        excluded_runs=result.excluded_runs,
    )


def perform_validate() -> ValidateResponse:
    checks = run_all_checks()
    return ValidateResponse(
        passed=all(c.passed for c in checks),
        checks=[CheckModel(name=c.name, passed=c.passed, detail=c.detail) for c in checks],
    )


def default_config_ini() -> str:
    return sections_to_ini(effective_sections(build_experiment({})))


app = FastAPI(title="immkl benchmark service", version=__version__)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/api/defaults")
def defaults() -> dict:
    return {"config_ini": default_config_ini()}


@app.post("/api/run", response_model=RunResponse)
def run_endpoint(request: ExperimentRequest) -> RunResponse:
    try:
        return perform_run(request)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    except NumericsError as exc:
        raise HTTPException(status_code=500, detail=f"numerical failure: {exc}")


@app.post("/api/sweep", response_model=SweepResponse)
def sweep_endpoint(request: ExperimentRequest) -> SweepResponse:
    try:
        return perform_sweep(request)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    except NumericsError as exc:
        raise HTTPException(status_code=500, detail=f"numerical failure: {exc}")


@app.post("/api/validate", response_model=ValidateResponse)
def validate_endpoint() -> ValidateResponse:
    return perform_validate()
