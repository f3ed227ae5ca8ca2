"""Exception hierarchy shared by the geometry, expansion and renormalization packages."""

from typing import Optional, Sequence


class RenormalizationError(Exception):
    """Base class for every numerical failure raised by this project."""


class SingularMetricError(RenormalizationError, ArithmeticError):
    """Metric is not invertible (or not positive definite) at a sampled point."""


class DimensionUnsupportedError(RenormalizationError, ValueError):
    """Quantity or formula is not defined in the requested dimension."""


class GridShapeError(RenormalizationError, ValueError):
    """Sampled field does not match the quadrature grid it is used with."""


class IndeterminacyError(RenormalizationError, ValueError):
    """Requested expansion order lies beyond the locally determined coefficients."""


class InsufficientOrderError(RenormalizationError, ValueError):
    """Series was truncated below the order a consumer needs."""


class GaugeBreakdownError(RenormalizationError, ArithmeticError):
    """Eikonal marching hit a caustic before reaching the requested radius."""

    def __init__(self, message: str, radius: float):
        super().__init__(f"{message} (breakdown radius r={radius:.6g})")
        self.radius = radius


class DomainError(RenormalizationError, ValueError):
    """Argument lies outside the domain a solved field covers."""


class InversionError(RenormalizationError, ArithmeticError):
    """Map r -> r e^omega is not monotone and cannot be inverted."""


class ResolutionError(RenormalizationError, ValueError):
    """Requested epsilon is below what the radial quadrature resolves."""


class FitDegeneracyError(RenormalizationError, ArithmeticError):
    """Least-squares design matrix is too ill-conditioned to trust."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition={condition:.3e}); widen the epsilon range")
        self.condition = condition


class ShootingError(RenormalizationError, RuntimeError):
    """Shooting could not bracket or converge on the boundary condition."""

    def __init__(self, message: str, bracket: Optional[Sequence[float]] = None,
                 residuals: Optional[Sequence[float]] = None):
        details = ""
        if bracket is not None:
            details += f" bracket={list(bracket)}"
        if residuals is not None:
            details += f" residuals={list(residuals)}"
        super().__init__(message + details)
        self.bracket = bracket
        self.residuals = residuals


class SymmetryError(RenormalizationError, ValueError):
    """Boundary data is not invariant under the symmetry used for reduction."""


class ImmersionError(RenormalizationError, ArithmeticError):
    """Induced metric of an embedding degenerates."""


class DegenerateEndpointsError(RenormalizationError, ValueError):
    """Geodesic endpoints coincide."""
