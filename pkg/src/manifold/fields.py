from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from common.errors import GridShapeError
from manifold.metric_families import MetricFamily
from manifold.quadrature import QuadratureGrid


class TensorField(BaseModel):
    """Component values of a covariant tensor on a quadrature grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    valence: int
    """Number of lower indices."""

    values: np.ndarray
    """Shape ``(N, n, ..., n)`` with ``valence`` trailing axes."""

    grid: QuadratureGrid

    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    """Closed-form generator, when the field has one."""

    @model_validator(mode="after")
    def validate_layout(self) -> "TensorField":
        expected = (self.grid.size,) + (self.grid.dimension,) * self.valence
        if self.values.shape != expected:
            raise GridShapeError(f"Field of shape {self.values.shape} expected {expected}")
        if not np.all(np.isfinite(self.values)):
            raise GridShapeError("Field components must be finite")
        return self

    @classmethod
    def sample(
        cls, fn: Callable[[np.ndarray], np.ndarray], grid: QuadratureGrid, valence: int
    ) -> "TensorField":
        return cls(valence=valence, values=np.asarray(fn(grid.points)), grid=grid, evaluator=fn)


class ScalarField(TensorField):
    valence: int = 0

    @classmethod
    def sample(cls, fn: Callable[[np.ndarray], np.ndarray], grid: QuadratureGrid, valence: int = 0) -> "ScalarField":
        return cls(values=np.asarray(fn(grid.points), dtype=float), grid=grid, evaluator=fn)


def integrate_scalar(field: ScalarField, family: MetricFamily) -> float:
    """``int_M f dv_g`` with the family's quadrature rule at the field's resolution."""
    if field.valence != 0:
        raise GridShapeError(f"Expected a scalar field, got valence {field.valence}")
    nodes, azimuth_nodes = field.grid.resolution
    grid = family.quadrature_grid(nodes, azimuth_nodes)
    if grid.signature != field.grid.signature:
        raise GridShapeError(
            f"Field grid does not match the quadrature grid of {family.describe()}"
        )
    return float(grid.integrate(field.values))
