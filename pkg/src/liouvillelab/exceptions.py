"""
Exception and warning classes raised by liouvillelab.

Input problems derive from `ValueError`, numerical failures from
`RuntimeError`, so callers can catch them with the builtin types.
"""
from typing import Optional

__all__ = [
    "InvalidWeightError",
    "InvalidPotentialError",
    "OutOfDomainError",
    "SingularBoundaryError",
    "InvalidDomainError",
    "InvalidCaseError",
    "UsageError",
    "NumericalError",
    "BlowupOverflowError",
    "NonConvergenceError",
    "QuadratureError",
    "InconsistentDistributionError",
    "InsufficientTailError",
    "LiouvilleWarning",
    "BoundaryMaxWarning",
    "SubsolutionWarning",
    "SubharmonicityWarning",
    "LevelRangeWarning",
    "DampingWarning",
]


class InvalidWeightError(ValueError):
    """A conical weight with exponent outside (-1, 0] or non-positive scale."""


class InvalidPotentialError(ValueError):
    """A potential violating ``0 < a <= K <= b``."""


class OutOfDomainError(ValueError):
    """A point, radius or window outside the domain of a field or function."""


class SingularBoundaryError(ValueError):
    """A path passing through the center of a singular weight."""


class InvalidDomainError(ValueError):
    """A boundary that is not a simple closed polyline."""


class InvalidCaseError(ValueError):
    """An operation only defined in blow-up case II called in case I."""


class UsageError(ValueError):
    """Invalid command line or configuration file."""


class NumericalError(RuntimeError):
    """Base class for numerical failures."""


class BlowupOverflowError(NumericalError):
    """``exp(u)`` overflowed while integrating a radial solution."""

    def __init__(self, message: str, radius: float):
        super().__init__(message)
        self.radius = radius


class NonConvergenceError(NumericalError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class QuadratureError(NumericalError):
    """An adaptive quadrature did not reach its tolerance."""

    def __init__(self, message: str, achieved_error: float, value: Optional[float] = None):
        super().__init__(message)
        self.achieved_error = achieved_error
        self.value = value


class InconsistentDistributionError(NumericalError):
    """A sampled distribution function that is not monotone."""


class InsufficientTailError(NumericalError):
    """A fit range too short to estimate a decay exponent."""


class LiouvilleWarning(UserWarning):
    """Base class for liouvillelab warnings."""


class BoundaryMaxWarning(LiouvilleWarning):
    """The maximum over a compact set is attained on its boundary."""


class SubsolutionWarning(LiouvilleWarning):
    """A field does not satisfy the Liouville differential inequality."""


class SubharmonicityWarning(LiouvilleWarning):
    """A field expected to be subharmonic has a negative discrete Laplacian."""


class LevelRangeWarning(LiouvilleWarning):
    """A level lies outside the range of a field."""


class DampingWarning(LiouvilleWarning):
    """Newton step halving exhausted without decreasing the residual."""
