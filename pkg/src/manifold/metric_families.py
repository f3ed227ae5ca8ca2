import logging
from abc import ABC, abstractmethod
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma

from common.errors import DimensionUnsupportedError, DomainError
from config import settings
from manifold.conformal_factor import TrigConformalFactor
from manifold.quadrature import QuadratureGrid, sphere_grid, torus_grid
from manifold.tensors import richardson_derivative

logger = logging.getLogger(__name__)


class MetricFamily(ABC):
    """Closed-form Riemannian metric on a compact ``M`` in one global chart.

    Partials use the layout ``d_metric[:, k, i, j] = d_k g_ij`` and
    ``dd_metric[:, k, l, i, j] = d_k d_l g_ij``.
    """

    kind: str = "abstract"

    def __init__(self, dimension: int):
        if dimension < 1:
            raise DimensionUnsupportedError(f"Dimension must be at least 1, got {dimension}")
        self.dimension = dimension
        self._grids: Dict[Tuple, QuadratureGrid] = {}

    @abstractmethod
    def metric(self, x: np.ndarray) -> np.ndarray:
        pass

    def d_metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.moveaxis(richardson_derivative(self.metric, x, settings.FD_STEP), -1, 1)

    def dd_metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.moveaxis(richardson_derivative(self.d_metric, x, settings.FD_STEP), -1, 1)

    @abstractmethod
    def _build_grid(self, nodes: int, azimuth_nodes: Optional[int]) -> QuadratureGrid:
        pass

    @property
    @abstractmethod
    def euler_characteristic(self) -> int:
        pass

    def quadrature_grid(
        self, nodes: Optional[int] = None, azimuth_nodes: Optional[int] = None
    ) -> QuadratureGrid:
        """Grid whose weights integrate against ``dv_g``; cached per resolution."""
        nodes = nodes or settings.grid_nodes(self.dimension)
        key = (nodes, azimuth_nodes)
        if key not in self._grids:
            self._grids[key] = self._build_grid(nodes, azimuth_nodes)
            logger.debug(f"Built {self.kind} grid with {self._grids[key].size} points")
        return self._grids[key]

    def volume(self, nodes: Optional[int] = None) -> float:
        grid = self.quadrature_grid(nodes)
        return float(grid.integrate(np.ones(grid.size)))

    def describe(self) -> str:
        return f"{self.kind}(n={self.dimension})"


class RoundSphere(MetricFamily):
    """Round ``S^n`` of radius ``a``; chart ``(theta_1, ..., theta_{n-1}, phi)``."""

    kind = "round-sphere"

    def __init__(self, dimension: int, radius: float = 1.0):
        super().__init__(dimension)
        if radius <= 0.0:
            raise ValueError(f"Sphere radius must be positive, got {radius}")
        self.radius = radius

    @property
    def curvature(self) -> float:
        return 1.0 / self.radius**2

    @property
    def euler_characteristic(self) -> int:
        return 2 if self.dimension % 2 == 0 else 0

    def _diagonal(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(x)
        theta = x[:, : self.dimension - 1]
        sin2 = np.sin(theta) ** 2
        prods = np.concatenate([np.ones((x.shape[0], 1)), np.cumprod(sin2, axis=1)], axis=1)
        return theta, self.radius**2 * prods

    def metric(self, x: np.ndarray) -> np.ndarray:
        _, diag = self._diagonal(x)
        return diag[:, :, None] * np.eye(self.dimension)

    def d_metric(self, x: np.ndarray) -> np.ndarray:
        theta, diag = self._diagonal(x)
        n = self.dimension
        cot = 1.0 / np.tan(theta)
        out = np.zeros((diag.shape[0], n, n, n))
        for i in range(1, n):
            for k in range(i):
                out[:, k, i, i] = 2.0 * cot[:, k] * diag[:, i]
        return out

    def dd_metric(self, x: np.ndarray) -> np.ndarray:
        theta, diag = self._diagonal(x)
        n = self.dimension
        cot = 1.0 / np.tan(theta)
        csc2 = 1.0 / np.sin(theta) ** 2
        out = np.zeros((diag.shape[0], n, n, n, n))
        for i in range(1, n):
            for k in range(i):
                out[:, k, k, i, i] = (4.0 * cot[:, k] ** 2 - 2.0 * csc2[:, k]) * diag[:, i]
                for l in range(k + 1, i):
                    value = 4.0 * cot[:, k] * cot[:, l] * diag[:, i]
                    out[:, k, l, i, i] = value
                    out[:, l, k, i, i] = value
        return out

    def _build_grid(self, nodes: int, azimuth_nodes: Optional[int]) -> QuadratureGrid:
        return sphere_grid(self.dimension, self.radius, nodes, azimuth_nodes)

    def exact_volume(self) -> float:
        n = self.dimension
        return float(self.radius**n * 2.0 * np.pi ** ((n + 1) / 2) / gamma((n + 1) / 2))

    def describe(self) -> str:
        return f"round S^{self.dimension} (radius {self.radius:g})"


class FlatTorus(MetricFamily):
    kind = "flat-torus"

    def __init__(self, dimension: int, periods: Optional[Sequence[float]] = None):
        super().__init__(dimension)
        self.periods = tuple(periods) if periods is not None else (2.0 * np.pi,) * dimension
        if len(self.periods) != dimension or min(self.periods) <= 0.0:
            raise ValueError(f"Need {dimension} positive periods, got {self.periods}")

    @property
    def euler_characteristic(self) -> int:
        return 0

    def metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.broadcast_to(np.eye(self.dimension), (x.shape[0],) + (self.dimension,) * 2).copy()

    def d_metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.zeros((x.shape[0],) + (self.dimension,) * 3)

    def dd_metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.zeros((x.shape[0],) + (self.dimension,) * 4)

    def _build_grid(self, nodes: int, azimuth_nodes: Optional[int]) -> QuadratureGrid:
        return torus_grid(self.periods, nodes)

    def exact_volume(self) -> float:
        return float(np.prod(self.periods))

    def describe(self) -> str:
        return f"flat T^{self.dimension}"


class ConformalRescaling(MetricFamily):
    """``exp(2 Upsilon) g`` for a base family ``g``."""

    kind = "conformal-rescaling"

    def __init__(self, base: MetricFamily, upsilon: TrigConformalFactor):
        super().__init__(base.dimension)
        if upsilon.dimension != base.dimension:
            raise ValueError(
                f"Upsilon dimension {upsilon.dimension} does not match base dimension {base.dimension}"
            )
        require_zonal(base, upsilon)
        self.base = base
        self.upsilon = upsilon

    @property
    def euler_characteristic(self) -> int:
        return self.base.euler_characteristic

    def metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.exp(2.0 * self.upsilon.value(x))[:, None, None] * self.base.metric(x)

    def d_metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        scale = np.exp(2.0 * self.upsilon.value(x))
        du = self.upsilon.gradient(x)
        g, dg = self.base.metric(x), self.base.d_metric(x)
        return scale[:, None, None, None] * (2.0 * np.einsum("nk,nij->nkij", du, g) + dg)

    def dd_metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        scale = np.exp(2.0 * self.upsilon.value(x))
        du, ddu = self.upsilon.gradient(x), self.upsilon.hessian(x)
        g, dg, ddg = self.base.metric(x), self.base.d_metric(x), self.base.dd_metric(x)
        out = (
            4.0 * np.einsum("nk,nl,nij->nklij", du, du, g)
            + 2.0 * np.einsum("nkl,nij->nklij", ddu, g)
            + 2.0 * np.einsum("nk,nlij->nklij", du, dg)
            + 2.0 * np.einsum("nl,nkij->nklij", du, dg)
            + ddg
        )
        return scale[:, None, None, None, None] * out

    def _build_grid(self, nodes: int, azimuth_nodes: Optional[int]) -> QuadratureGrid:
        base_grid = self.base.quadrature_grid(nodes, azimuth_nodes)
        density = np.exp(self.dimension * self.upsilon.value(base_grid.points))
        return base_grid.with_density(density)

    def describe(self) -> str:
        return f"exp(2*({self.upsilon.describe()})) * {self.base.describe()}"


def require_zonal(base: MetricFamily, upsilon) -> None:
    """Rescalings of a round sphere must depend on the polar angle ``x1`` alone."""
    if isinstance(base, RoundSphere) and isinstance(upsilon, TrigConformalFactor) and not upsilon.is_zonal:
        raise DomainError(
            f"Upsilon on a sphere must be a sum of cos(j*x1) terms; other chart terms are not smooth "
            f"at the poles of the polar chart, got {upsilon.describe()}"
        )


def sphere_chart_to_unit(x: np.ndarray) -> np.ndarray:
    """Chart ``(theta_1, ..., theta_{n-1}, phi)`` to unit vectors in ``R^{n+1}``."""
    x = np.atleast_2d(x)
    count, n = x.shape
    out = np.empty((count, n + 1))
    running = np.ones(count)
    for j in range(n - 1):
        out[:, j] = running * np.cos(x[:, j])
        running = running * np.sin(x[:, j])
    out[:, n - 1] = running * np.cos(x[:, n - 1])
    out[:, n] = running * np.sin(x[:, n - 1])
    return out


def unit_to_sphere_chart(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(points)
    points = points / np.linalg.norm(points, axis=1, keepdims=True)
    count, ambient = points.shape
    n = ambient - 1
    out = np.empty((count, n))
    for j in range(n - 1):
        tail = np.linalg.norm(points[:, j:], axis=1)
        out[:, j] = np.arccos(np.clip(points[:, j] / tail, -1.0, 1.0))
    out[:, n - 1] = np.mod(np.arctan2(points[:, n], points[:, n - 1]), 2.0 * np.pi)
    return out
