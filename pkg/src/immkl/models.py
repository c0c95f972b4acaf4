"""Jump Markov linear system description and ground-truth simulation.

A model is a bank of linear modes (F, G, Q) switched by a first-order
Markov chain, sharing one linear position measurement map H.  The
scenario builder assembles the planar coordinated-turn benchmark: state
(px, vx, py, vy), one mode per turn rate, white-noise-acceleration
process noise, and position-only measurements whose noise covariance is
[[r, r/20], [r/20, r]].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, ParameterError
from .distributions import _freeze, symmetrize

__all__ = [
    "LinearMode",
    "MarkovChain",
    "JumpMarkovModel",
    "TruthConfig",
    "ct_transition",
    "ct_process_noise",
    "true_measurement_cov",
    "build_ct_scenario",
    "sample_mode_sequence",
    "simulate_truth",
]


@dataclass(frozen=True)
class LinearMode:
    """One linear mode: x' = F x + G w with w ~ N(0, Q).

    ``label`` records the turn rate in rad/s for scenario bookkeeping.
    """

    F: np.ndarray
    G: np.ndarray
    Q: np.ndarray
    label: float = 0.0

    def __post_init__(self) -> None:
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        n = F.shape[0]
        if F.shape != (n, n):
            raise DimensionError(f"F must be square, got {F.shape}")
        if G.shape[0] != n:
            raise DimensionError(f"G has {G.shape[0]} rows, expected {n}")
        p = G.shape[1]
        if Q.shape != (p, p):
            raise DimensionError(f"Q has shape {Q.shape}, expected {(p, p)}")
        if np.abs(Q - Q.T).max() > 1e-12 * max(np.abs(Q).max(), 1e-300):
            raise ParameterError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-10 * max(np.trace(Q), 0.0):
            raise ParameterError("Q must be positive semidefinite")
        object.__setattr__(self, "F", _freeze(F))
        object.__setattr__(self, "G", _freeze(G))
        object.__setattr__(self, "Q", _freeze(Q))
        object.__setattr__(self, "label", float(self.label))

    @property
    def state_dim(self) -> int:
        return self.F.shape[0]


@dataclass(frozen=True)
class MarkovChain:
    """Row-stochastic transition matrix pi[i, j] = P(next=j | current=i)."""

    pi: np.ndarray

    def __post_init__(self) -> None:
        pi = np.atleast_2d(np.asarray(self.pi, dtype=float))
        M = pi.shape[0]
        if pi.shape != (M, M):
            raise DimensionError(f"transition matrix must be square, got {pi.shape}")
        if pi.min() < -1e-12 or pi.max() > 1 + 1e-12:
            raise ParameterError("transition probabilities must lie in [0, 1]")
        rows = pi.sum(axis=1)
        if np.abs(rows - 1.0).max() > 1e-12:
            raise ParameterError(f"rows must sum to 1, got sums {rows}")
        object.__setattr__(self, "pi", _freeze(pi))

    @property
    def n_modes(self) -> int:
        return self.pi.shape[0]


@dataclass(frozen=True)
class JumpMarkovModel:
    """Mode bank plus switching chain and the shared measurement map."""

    modes: tuple
    chain: MarkovChain
    H: np.ndarray

    def __post_init__(self) -> None:
        modes = tuple(self.modes)
        if not modes:
            raise ConfigError("model.modes: at least one mode is required")
        n = modes[0].state_dim
        if any(mode.state_dim != n for mode in modes):
            raise DimensionError("all modes must share the state dimension")
        if self.chain.n_modes != len(modes):
            raise DimensionError(
                f"chain has {self.chain.n_modes} modes, model has {len(modes)}"
            )
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        if H.shape[1] != n:
            raise DimensionError(f"H has {H.shape[1]} columns, state dim is {n}")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "H", _freeze(H))

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def state_dim(self) -> int:
        return self.modes[0].state_dim

    @property
    def meas_dim(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class TruthConfig:
    """Ground-truth scenario parameters for the coordinated-turn benchmark."""

    q: float = 0.09                 # process-noise spectral density
    r: float = 200.0                # measurement-noise level
    T: float = 1.0                  # sampling period, seconds
    turn_rates: tuple = (math.radians(-4.0), 0.0, math.radians(4.0))
    horizon: int = 100
    x0: np.ndarray = field(default_factory=lambda: np.array([0.0, 10.0, 0.0, 10.0]))
    r0_mode: int = 1                # index into turn_rates of the initial mode

    def __post_init__(self) -> None:
        if not self.q > 0:
            raise ConfigError(f"truth.q: must be > 0, got {self.q}")
        if not self.r > 0:
            raise ConfigError(f"truth.r: must be > 0, got {self.r}")
        if not self.T > 0:
            raise ConfigError(f"truth.T: must be > 0, got {self.T}")
        if int(self.horizon) < 1:
            raise ConfigError(f"truth.horizon: must be >= 1, got {self.horizon}")
        rates = tuple(float(w) for w in self.turn_rates)
        if not rates:
            raise ConfigError("truth.turn_rates: at least one turn rate is required")
        if not 0 <= int(self.r0_mode) < len(rates):
            raise ConfigError(
                f"truth.r0_mode: must index a turn rate (0..{len(rates) - 1}), got {self.r0_mode}"
            )
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.size != 4:
            raise ConfigError(f"truth.x0: expected 4 state entries, got {x0.size}")
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "turn_rates", rates)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "x0", _freeze(x0))
        object.__setattr__(self, "r0_mode", int(self.r0_mode))


# ---------------------------------------------------------------------------
# coordinated-turn scenario pieces
# ---------------------------------------------------------------------------

def ct_transition(omega: float, T: float) -> np.ndarray:
    """Coordinated-turn transition over (px, vx, py, vy) for turn rate omega.

    For |omega*T| below 1e-9 the analytic limit is used, which is the
    constant-velocity matrix; this avoids cancellation in (1 - cos)/omega.
    """
    if not T > 0:
        raise ParameterError(f"sampling period must be positive, got {T}")
    if abs(omega * T) < 1e-9:
        return np.array(
            [
                [1.0, T, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, T],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
    swt = math.sin(omega * T)
    cwt = math.cos(omega * T)
    return np.array(
        [
            [1.0, swt / omega, 0.0, -(1.0 - cwt) / omega],
            [0.0, cwt, 0.0, -swt],
            [0.0, (1.0 - cwt) / omega, 1.0, swt / omega],
            [0.0, swt, 0.0, cwt],
        ]
    )


def ct_process_noise(q: float, T: float) -> np.ndarray:
    """White-noise-acceleration covariance q * I2 (x) [[T^4/4, T^3/2], [T^3/2, T^2]]."""
    if not (q > 0 and T > 0):
        raise ParameterError(f"q and T must be positive, got q={q}, T={T}")
    block = np.array([[T**4 / 4, T**3 / 2], [T**3 / 2, T**2]])
    return q * np.kron(np.eye(2), block)


def true_measurement_cov(r: float) -> np.ndarray:
    """Planar position-noise covariance [[r, r/20], [r/20, r]]."""
    if not r > 0:
        raise ParameterError(f"noise level must be positive, got {r}")
    return np.array([[r, r / 20.0], [r / 20.0, r]])


def build_ct_scenario(cfg: TruthConfig) -> JumpMarkovModel:
    """Assemble the benchmark model: one CT mode per turn rate.

    Every mode shares the process noise (G is the identity), positions are
    measured directly, and the chain keeps each mode with probability 0.8,
    splitting the remainder evenly across the others.
    """
    M = len(cfg.turn_rates)
    Q = ct_process_noise(cfg.q, cfg.T)
    modes = tuple(
        LinearMode(F=ct_transition(w, cfg.T), G=np.eye(4), Q=Q, label=w)
        for w in cfg.turn_rates
    )
    if M == 1:
        pi = np.array([[1.0]])
    else:
        stay = 0.8
        pi = np.full((M, M), (1.0 - stay) / (M - 1))
        np.fill_diagonal(pi, stay)
    H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    return JumpMarkovModel(modes=modes, chain=MarkovChain(pi=pi), H=H)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Matrix square root for sampling: Cholesky when PD, eigen fallback for PSD."""
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(symmetrize(a))
        return eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None)))


def sample_mode_sequence(
    chain: MarkovChain, r0: int, horizon: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw the modes in effect at steps 1..horizon, starting from mode r0.

    Element k is drawn from the chain row of its predecessor (element 0
    from row r0), so the sequence is the post-transition mode path.
    """
    if not 0 <= r0 < chain.n_modes:
        raise ParameterError(f"r0 must be in 0..{chain.n_modes - 1}, got {r0}")
    cum = np.cumsum(chain.pi, axis=1)
    seq = np.empty(int(horizon), dtype=np.intp)
    current = int(r0)
    for k in range(int(horizon)):
        u = rng.random()
        current = int(np.searchsorted(cum[current], u, side="right"))
        current = min(current, chain.n_modes - 1)  # guard u == 1.0
        seq[k] = current
    return seq


def simulate_truth(
    model: JumpMarkovModel, cfg: TruthConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate one trajectory and its measurements.

    Returns ``(states, modes, measurements)`` with one row per step
    1..horizon: the mode switches first, then the state propagates through
    that mode's dynamics, then the position is measured.  Deterministic
    given the generator state.
    """
    n, m = model.state_dim, model.meas_dim
    horizon = cfg.horizon
    modes = sample_mode_sequence(model.chain, cfg.r0_mode, horizon, rng)
    sqrt_q = [psd_sqrt(mode.Q) for mode in model.modes]
    sqrt_r = psd_sqrt(true_measurement_cov(cfg.r))
    states = np.empty((horizon, n))
    meas = np.empty((horizon, m))
    x = cfg.x0.copy()
    for k in range(horizon):
        mode = model.modes[modes[k]]
        w = sqrt_q[modes[k]] @ rng.standard_normal(mode.G.shape[1])
        x = mode.F @ x + mode.G @ w
        states[k] = x
        meas[k] = model.H @ x + sqrt_r @ rng.standard_normal(m)
    return states, modes, meas
