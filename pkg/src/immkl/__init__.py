"""Adaptive-noise IMM estimation with KL-fused inverse-Wishart beliefs.

Layers:

* ``distributions`` -- Gaussian / inverse-Wishart primitives and the
  weighted fusion rules (KL-optimal and moment-matching).
* ``models``        -- jump Markov linear systems and the planar
  coordinated-turn benchmark scenario.
* ``filters``       -- the IMM recursion in three variants (adaptive with
  KL fusion, adaptive with moment matching, known covariance).
* ``harness``       -- Monte Carlo engine, metrics, CSV artifacts.
* ``config``        -- INI configuration with benchmark defaults.
* ``validation``    -- built-in numerical self-checks.
* ``service``       -- FastAPI wrapper exposing run / sweep / validate.
* ``cli``           -- thin command-line client for the service.
"""

__version__ = "0.1.0"

from .distributions import (  # noqa: F401
    GaussianEstimate,
    InverseWishart,
    WeightedComponents,
    gaussian_logpdf,
    iw_kl_divergence,
    iw_logpdf,
    iw_mean,
    kl_fuse_iw,
    mm_fuse_iw,
    moment_match_gaussians,
    multivariate_log_gamma,
    weighted_kl_objective,
)
from .filters import (  # noqa: F401
    FilterConfig,
    GIWEstimate,
    ModeBank,
    StepOutput,
    Variant,
    imm_step,
    initial_bank,
)
from .models import (  # noqa: F401
    JumpMarkovModel,
    LinearMode,
    MarkovChain,
    TruthConfig,
    build_ct_scenario,
    ct_process_noise,
    ct_transition,
    sample_mode_sequence,
    simulate_truth,
    true_measurement_cov,
)
from .harness import (  # noqa: F401
    ExperimentConfig,
    RunMetrics,
    cov_error,
    rmse_position,
    run_monte_carlo,
    sweep_noise_levels,
)
