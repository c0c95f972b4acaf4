"""Exception hierarchy shared across the package.

Static misuse (bad configuration, invalid parameters, shape mismatches)
raises ValueError subclasses; numerical failures that occur while a filter
is running (singular innovation covariance, covariance losing positive
definiteness, likelihood underflow) raise NumericsError subclasses so the
harness can flag a diverged run without masking genuine bugs.
"""


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending key."""


class DimensionError(ValueError):
    """Operands have inconsistent dimensions."""


class ParameterError(ValueError):
    """Distribution or filter parameters outside their valid domain."""


class NumericsError(RuntimeError):
    """Base class for runtime numerical failures (filter divergence)."""


class SingularMatrixError(NumericsError):
    """A covariance that must be invertible is numerically singular."""


class DegenerateModeError(NumericsError):
    """Mode probabilities collapsed: unreachable mode or likelihood underflow."""


class EstimateInvariantError(NumericsError):
    """An estimate violates its invariants (asymmetric or indefinite covariance)."""
