"""Gaussian and inverse-Wishart primitives and their fusion rules.

The inverse-Wishart here uses the degree/scale convention in which an
m x m random covariance R ~ IW(nu, Sigma) has density proportional to
|R|^(-nu/2) exp(-Tr(R^-1 Sigma)/2) and mean Sigma / (nu - 2m - 2).
It maps onto the textbook IW(df, scale) convention (scipy's invwishart)
by df = nu - m - 1 with the same scale matrix; the density is proper for
nu > 2m and the mean exists for nu > 2m + 2.

Two reductions of a weighted set of inverse-Wisharts are provided:

* ``kl_fuse_iw``     -- the minimizer of the weighted KL divergence
  sum_i w_i KL(p || p_i), which is again inverse-Wishart with convexly
  combined degree and scale.
* ``mm_fuse_iw``     -- moment matching: the fused mean always equals the
  mixture mean; by default the degree is recovered by additionally
  matching the mixture's mean-squared estimation error (total variance).

All types are immutable values; all functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, psi

from .errors import (
    DimensionError,
    EstimateInvariantError,
    ParameterError,
    SingularMatrixError,
)

__all__ = [
    "GaussianEstimate",
    "InverseWishart",
    "WeightedComponents",
    "gaussian_logpdf",
    "iw_logpdf",
    "iw_mean",
    "multivariate_log_gamma",
    "multivariate_digamma",
    "kl_fuse_iw",
    "iw_kl_divergence",
    "weighted_kl_objective",
    "moment_match_gaussians",
    "mm_fuse_iw",
    "iw_total_variance",
    "symmetrize",
]

_LOG_2PI = math.log(2.0 * math.pi)


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Average a matrix with its transpose (floating-point hygiene)."""
    return 0.5 * (a + a.T)


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def _check_symmetric_psd(cov: np.ndarray, what: str) -> None:
    scale = np.abs(cov).max() if cov.size else 0.0
    asym = np.abs(cov - cov.T).max() if cov.size else 0.0
    if asym > 1e-12 * max(scale, 1e-300):
        raise EstimateInvariantError(f"{what}: asymmetry {asym:.3e} exceeds tolerance")
    eigs = np.linalg.eigvalsh(cov)
    floor = -1e-10 * max(np.trace(cov), 0.0)
    if eigs.min() < floor:
        raise EstimateInvariantError(
            f"{what}: eigenvalue {eigs.min():.3e} below PSD tolerance {floor:.3e}"
        )


@dataclass(frozen=True)
class GaussianEstimate:
    """State estimate as mean vector and symmetric PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise DimensionError(
                f"mean has length {mean.size} but cov has shape {cov.shape}"
            )
        _check_symmetric_psd(cov, "GaussianEstimate.cov")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "cov", _freeze(cov))

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class InverseWishart:
    """Inverse-Wishart over m x m SPD matrices, degree/scale convention."""

    degree: float
    scale: np.ndarray

    def __post_init__(self) -> None:
        scale = np.atleast_2d(np.asarray(self.scale, dtype=float))
        m = scale.shape[0]
        if scale.shape != (m, m):
            raise DimensionError(f"scale must be square, got {scale.shape}")
        asym = np.abs(scale - scale.T).max()
        if asym > 1e-12 * max(np.abs(scale).max(), 1e-300):
            raise EstimateInvariantError(f"InverseWishart.scale asymmetry {asym:.3e}")
        try:
            np.linalg.cholesky(scale)
        except np.linalg.LinAlgError:
            raise EstimateInvariantError("InverseWishart.scale is not positive definite")
        degree = float(self.degree)
        if not degree > 2 * m:
            raise ParameterError(
                f"degree must exceed 2*dim={2 * m} for a proper density, got {degree}"
            )
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "scale", _freeze(scale))

    @property
    def dim(self) -> int:
        return self.scale.shape[0]


@dataclass(frozen=True)
class WeightedComponents:
    """Convex weights paired with same-family, same-dimension components."""

    weights: np.ndarray
    components: tuple = field(default=())

    def __post_init__(self) -> None:
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        components = tuple(self.components)
        if weights.size != len(components) or not components:
            raise DimensionError(
                f"{weights.size} weights for {len(components)} components"
            )
        if weights.min() < 0.0:
            raise ParameterError(f"weights must be nonnegative, got min {weights.min()}")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ParameterError(f"weights must sum to 1, got {weights.sum()!r}")
        first = components[0]
        if not all(type(c) is type(first) for c in components):
            raise ParameterError("components must all be of the same family")
        if not all(c.dim == first.dim for c in components):
            raise DimensionError("components must share a common dimension")
        object.__setattr__(self, "weights", _freeze(weights))
        object.__setattr__(self, "components", components)

    def nonzero(self) -> tuple[np.ndarray, tuple]:
        """Drop zero-weight components (they contribute nothing to a fusion)."""
        keep = self.weights > 0.0
        return self.weights[keep], tuple(c for c, k in zip(self.components, keep) if k)


# ---------------------------------------------------------------------------
# densities and moments
# ---------------------------------------------------------------------------

def multivariate_log_gamma(m: int, a: float) -> float:
    """log of the multivariate gamma function Gamma_m(a), a > (m-1)/2."""
    if not a > (m - 1) / 2:
        raise ParameterError(f"multivariate gamma pole: need a > {(m - 1) / 2}, got {a}")
    return m * (m - 1) / 4 * math.log(math.pi) + float(
        sum(gammaln(a + (1 - j) / 2) for j in range(1, m + 1))
    )


def multivariate_digamma(m: int, a: float) -> float:
    """Derivative of ``multivariate_log_gamma`` with respect to ``a``."""
    if not a > (m - 1) / 2:
        raise ParameterError(f"multivariate digamma pole: need a > {(m - 1) / 2}, got {a}")
    return float(sum(psi(a + (1 - j) / 2) for j in range(1, m + 1)))


def gaussian_logpdf(g: GaussianEstimate, x: np.ndarray) -> float:
    """Log density of N(mean, cov) at x; cov must be positive definite."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != g.dim:
        raise DimensionError(f"point has length {x.size}, estimate has dim {g.dim}")
    try:
        chol = np.linalg.cholesky(g.cov)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("covariance is singular; cannot evaluate density")
    white = np.linalg.solve(chol, x - g.mean)
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    return float(-0.5 * (g.dim * _LOG_2PI + logdet + white @ white))


def iw_logpdf(iw: InverseWishart, R: np.ndarray) -> float:
    """Log density of the inverse-Wishart at an SPD matrix R."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    m = iw.dim
    if R.shape != (m, m):
        raise DimensionError(f"R has shape {R.shape}, expected {(m, m)}")
    try:
        chol_r = np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise ParameterError("R must be symmetric positive definite")
    d = iw.degree - m - 1
    _, logdet_scale = np.linalg.slogdet(iw.scale)
    logdet_r = 2.0 * float(np.log(np.diag(chol_r)).sum())
    half_white = np.linalg.solve(chol_r, iw.scale)
    trace_term = float(np.trace(np.linalg.solve(chol_r.T, half_white)))
    return float(
        -(d * m / 2) * math.log(2.0)
        + (d / 2) * logdet_scale
        - multivariate_log_gamma(m, d / 2)
        - (iw.degree / 2) * logdet_r
        - 0.5 * trace_term
    )


def iw_mean(iw: InverseWishart) -> np.ndarray:
    """Mean scale/(degree - 2m - 2); defined only for degree > 2m + 2."""
    m = iw.dim
    if not iw.degree > 2 * m + 2:
        raise ParameterError(
            f"mean undefined: degree {iw.degree} must exceed {2 * m + 2}"
        )
    return iw.scale / (iw.degree - 2 * m - 2)


# ---------------------------------------------------------------------------
# KL divergence and fusion
# ---------------------------------------------------------------------------

def iw_kl_divergence(p: InverseWishart, q: InverseWishart) -> float:
    """Closed-form KL divergence D(p || q) between inverse-Wisharts.

    Evaluated in the textbook df/scale convention (df = degree - m - 1)
    using the expectations of log|R| and Tr(R^-1 A) under p, which are
    available through the multivariate digamma function.
    """
    if p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")
    m = p.dim
    dp = p.degree - m - 1
    dq = q.degree - m - 1
    _, logdet_p = np.linalg.slogdet(p.scale)
    _, logdet_q = np.linalg.slogdet(q.scale)
    trace = float(np.trace(np.linalg.solve(p.scale, q.scale)))
    return float(
        (dq / 2) * (logdet_p - logdet_q)
        + multivariate_log_gamma(m, dq / 2)
        - multivariate_log_gamma(m, dp / 2)
        + ((dp - dq) / 2) * multivariate_digamma(m, dp / 2)
        + (dp / 2) * (trace - m)
    )


def weighted_kl_objective(candidate: InverseWishart, wc: WeightedComponents) -> float:
    """sum_i w_i KL(candidate || component_i); the quantity kl_fuse_iw minimizes."""
    weights, components = wc.nonzero()
    return float(sum(w * iw_kl_divergence(candidate, c) for w, c in zip(weights, components)))


def kl_fuse_iw(wc: WeightedComponents) -> InverseWishart:
    """Weighted-KL-optimal reduction: convex combination of degrees and scales."""
    weights, components = wc.nonzero()
    _require_iw(components)
    degree = float(sum(w * c.degree for w, c in zip(weights, components)))
    scale = sum(w * c.scale for w, c in zip(weights, components))
    return InverseWishart(degree=degree, scale=symmetrize(scale))


def moment_match_gaussians(wc: WeightedComponents) -> GaussianEstimate:
    """Collapse a Gaussian mixture to the Gaussian with matching mean and covariance."""
    weights, components = wc.nonzero()
    if not all(isinstance(c, GaussianEstimate) for c in components):
        raise ParameterError("moment_match_gaussians expects GaussianEstimate components")
    mean = sum(w * c.mean for w, c in zip(weights, components))
    cov = sum(
        w * (c.cov + np.outer(c.mean - mean, c.mean - mean))
        for w, c in zip(weights, components)
    )
    return GaussianEstimate(mean=mean, cov=symmetrize(cov))


def iw_total_variance(iw: InverseWishart) -> float:
    """Sum of elementwise variances, i.e. E[||R - E R||_F^2].

    Finite only for degree > 2m + 4.
    """
    m = iw.dim
    s = iw.degree - 2 * m - 2
    if not s > 2:
        raise ParameterError(
            f"variance undefined: degree {iw.degree} must exceed {2 * m + 4}"
        )
    fro2 = float(np.sum(iw.scale * iw.scale))
    tr2 = float(np.trace(iw.scale)) ** 2
    return ((s + 2) * fro2 + s * tr2) / ((s + 1) * s * s * (s - 2))


def mm_fuse_iw(wc: WeightedComponents, match_spread: bool = True) -> InverseWishart:
    """Moment-matching reduction of a weighted inverse-Wishart set.

    The fused mean equals the mixture mean sum_i w_i E[R_i] exactly.  With
    ``match_spread`` (default) the degree is recovered by matching the
    mixture's mean-squared estimation error E[||R - R_bar||_F^2], which has
    a unique solution because that error is strictly decreasing in the
    degree.  With ``match_spread=False`` the degree is the convex
    combination of component degrees, in which case the result coincides
    with ``kl_fuse_iw`` whenever all component degrees are equal; this mode
    doubles as the equal-degree test hook of the filter bank.
    """
    weights, components = wc.nonzero()
    _require_iw(components)
    m = components[0].dim
    offsets = np.array([c.degree - 2 * m - 2 for c in components])
    if offsets.min() <= 0:
        raise ParameterError("every component needs degree > 2*dim + 2 (finite mean)")
    means = [c.scale / s for c, s in zip(components, offsets)]
    mixture_mean = symmetrize(sum(w * mu for w, mu in zip(weights, means)))

    if not match_spread:
        degree = float(sum(w * c.degree for w, c in zip(weights, components)))
        return InverseWishart(degree=degree, scale=(degree - 2 * m - 2) * mixture_mean)

    spread = 0.0
    for w, c, mu in zip(weights, components, means):
        spread += w * (iw_total_variance(c) + float(np.sum((mu - mixture_mean) ** 2)))
    a = float(np.sum(mixture_mean * mixture_mean))
    b = float(np.trace(mixture_mean)) ** 2
    # E||R - R_bar||^2 of IW(s + 2m + 2, s * mixture_mean) equals
    # ((s+2)a + s b) / ((s+1)(s-2)); solve that equal to the mixture spread.
    s = ((spread + a + b) + math.sqrt((spread + a + b) ** 2 + 8 * spread * (spread + a))) / (
        2 * spread
    )
    return InverseWishart(degree=s + 2 * m + 2, scale=s * mixture_mean)


def _require_iw(components: tuple) -> None:
    if not all(isinstance(c, InverseWishart) for c in components):
        raise ParameterError("expected InverseWishart components")
