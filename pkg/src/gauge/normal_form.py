import logging
import math
from abc import ABC, abstractmethod
from typing import Dict, Optional

import numpy as np
from scipy.special import comb

from common.errors import DimensionUnsupportedError, DomainError
from fg_expansion.power_series import TensorSeries, sqrt_det_ratio
from fg_expansion.recursion import PowerSeriesMetric
from manifold.curvature import CurvatureEvaluator, in_chunks
from manifold.metric_families import MetricFamily, RoundSphere
from manifold.quadrature import QuadratureGrid
from manifold.tensors import inverse_metric, ricci, riemann

logger = logging.getLogger(__name__)

CLOSED_FORM = "closed-form"
SERIES_TRUNCATED = "series-truncated"


def _as_column(r, ndim: int):
    """Broadcast a scalar or per-point radius against ``(N, n, ..., n)`` arrays."""
    r = np.asarray(r, dtype=float)
    if r.ndim == 0:
        return r
    return r.reshape(r.shape + (1,) * ndim)


class NormalForm(ABC):
    """``g_+ = r^{-2} (g_r + dr^2)`` with ``g_r`` sampled on a boundary quadrature grid.

    Radii may be a scalar or one value per grid point.
    """

    kind: str = "abstract"

    def __init__(self, boundary: MetricFamily, r_max: float, grid: QuadratureGrid):
        self.boundary = boundary
        self.r_max = r_max
        self.grid = grid
        self.dimension = boundary.dimension
        self._g0 = boundary.metric(grid.points)

    @abstractmethod
    def metric(self, r) -> np.ndarray:
        pass

    @abstractmethod
    def radial_derivative(self, r, order: int) -> np.ndarray:
        """``d_r^order g_r`` for ``order`` in ``{1, 2}``."""

    @abstractmethod
    def ricci(self, r) -> np.ndarray:
        """Ricci tensor of ``g_r`` as a metric on ``M``."""

    @abstractmethod
    def density(self, r) -> np.ndarray:
        """``(det g_r / det g_0)^{1/2}`` at every grid point."""

    @abstractmethod
    def density_taylor(self, order: int) -> np.ndarray:
        """Taylor coefficients of :meth:`density` in ``r``, shape ``(order + 1, N)``."""

    @abstractmethod
    def inner_constant(self, r0: float) -> float:
        """Volume of ``{r > r0}``; zero when no global filling is known."""

    def inverse_metric(self, r) -> np.ndarray:
        return inverse_metric(self.metric(r))

    def boundary_volume(self) -> float:
        return float(self.grid.integrate(np.ones(self.grid.size)))

    def check_radius(self, r):
        if np.any(np.abs(np.asarray(r)) > self.r_max):
            raise DomainError(f"Radius outside the normal form domain [0, {self.r_max:g}]")

    def describe(self) -> str:
        return f"{self.kind} normal form over {self.boundary.describe()}"


class HyperbolicNormalForm(NormalForm):
    """Hyperbolic space: ``g_r = (1 - r^2)^2 g_0`` with ``g_0`` a quarter of the round metric."""

    kind = CLOSED_FORM

    def __init__(self, dimension: int, nodes: Optional[int] = None, azimuth_nodes: Optional[int] = None):
        boundary = RoundSphere(dimension, radius=0.5)
        super().__init__(boundary, 1.0, boundary.quadrature_grid(nodes, azimuth_nodes))
        self._g0_inv = np.linalg.inv(self._g0)
        self._ricci0 = None

    def metric(self, r) -> np.ndarray:
        return _as_column((1.0 - np.asarray(r) ** 2) ** 2, 2) * self._g0

    def inverse_metric(self, r) -> np.ndarray:
        return self._g0_inv / _as_column((1.0 - np.asarray(r) ** 2) ** 2, 2)

    def radial_derivative(self, r, order: int) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if order == 1:
            return _as_column(-4.0 * r * (1.0 - r**2), 2) * self._g0
        if order == 2:
            return _as_column(-4.0 + 12.0 * r**2, 2) * self._g0
        raise ValueError(f"Radial derivative order must be 1 or 2, got {order}")

    def ricci(self, r) -> np.ndarray:
        if self._ricci0 is None:
            if self.dimension == 1:
                self._ricci0 = np.zeros_like(self._g0)
            else:
                evaluator = CurvatureEvaluator(self.boundary)
                self._ricci0 = in_chunks(lambda pts: evaluator.local(pts)["ricci"], self.grid.points)
        return self._ricci0

    def density(self, r) -> np.ndarray:
        value = (1.0 - np.asarray(r, dtype=float) ** 2) ** self.dimension
        return np.broadcast_to(value, (self.grid.size,)).copy()

    def density_taylor(self, order: int) -> np.ndarray:
        out = np.zeros((order + 1, self.grid.size))
        for i in range(self.dimension + 1):
            if 2 * i <= order:
                out[2 * i] = (-1.0) ** i * comb(self.dimension, i, exact=True)
        return out

    def inner_constant(self, r0: float) -> float:
        n = self.dimension
        total = 0.0
        for i in range(n + 1):
            power = 2 * i - n - 1
            if power == -1:
                radial = -math.log(r0)
            else:
                radial = (1.0 - r0 ** (power + 1)) / (power + 1)
            total += (-1.0) ** i * comb(n, i, exact=True) * radial
        return self.boundary_volume() * total

    @staticmethod
    def ball_to_r(norm) -> np.ndarray:
        """Special defining function on the unit ball, ``r = (1 - |x|) / (1 + |x|)``."""
        norm = np.asarray(norm, dtype=float)
        return (1.0 - norm) / (1.0 + norm)

    @staticmethod
    def r_to_ball(r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return (1.0 - r) / (1.0 + r)


class SeriesNormalForm(NormalForm):
    """``g_r`` given by a truncated Fefferman-Graham expansion; the log term is not included."""

    kind = SERIES_TRUNCATED

    def __init__(self, ps: PowerSeriesMetric, r_max: float = 0.5):
        super().__init__(ps.family, r_max, ps.grid)
        self.ps = ps
        if ps.log_coefficient is not None and np.abs(ps.log_coefficient).max() > 0.0:
            logger.warning("Series normal form drops the r^n log r term of the expansion")

    def _evaluate(self, coefficients: np.ndarray, r, derivative: int = 0) -> np.ndarray:
        trailing = coefficients.ndim - 2
        r = np.asarray(r, dtype=float)
        out = np.zeros(coefficients.shape[1:])
        for j in range(derivative, coefficients.shape[0]):
            factor = math.perm(j, derivative) * r ** (j - derivative)
            out = out + _as_column(factor, trailing) * coefficients[j]
        return out

    def metric(self, r) -> np.ndarray:
        return self._evaluate(self.ps.coefficients, r)

    def radial_derivative(self, r, order: int) -> np.ndarray:
        if order not in (1, 2):
            raise ValueError(f"Radial derivative order must be 1 or 2, got {order}")
        return self._evaluate(self.ps.coefficients, r, derivative=order)

    def ricci(self, r) -> np.ndarray:
        g_inv = self.inverse_metric(r)
        dg = self._evaluate(self.ps.d_coefficients, r)
        ddg = self._evaluate(self.ps.dd_coefficients, r)
        return ricci(riemann(dg, ddg, g_inv), g_inv)

    def density(self, r) -> np.ndarray:
        ratio = np.linalg.det(self.metric(r)) / np.linalg.det(self._g0)
        return np.sqrt(ratio)

    def density_taylor(self, order: int) -> np.ndarray:
        padded = TensorSeries(self.ps.coefficients, order=order)
        return sqrt_det_ratio(padded).c

    def inner_constant(self, r0: float) -> float:
        return 0.0


def hyperbolic_normal_form(n: int, nodes: Optional[int] = None) -> HyperbolicNormalForm:
    if n < 1:
        raise DimensionUnsupportedError(f"Hyperbolic normal form needs n >= 1, got n={n}")
    return HyperbolicNormalForm(n, nodes)


def tangential_einstein_residual(nf: NormalForm, r: float) -> np.ndarray:
    """Pointwise ``r g'' + (1-n) g' - tr(g') g - r g' g^{-1} g' + (r/2) tr(g') g' - 2 r Ric(g_r)``."""
    n = nf.dimension
    g = nf.metric(r)
    g_inv = nf.inverse_metric(r)
    g1 = nf.radial_derivative(r, 1)
    g2 = nf.radial_derivative(r, 2)
    trace1 = np.einsum("nij,nij->n", g_inv, g1)[:, None, None]
    quadratic = np.einsum("nik,nkl,nlj->nij", g1, g_inv, g1)
    return (
        r * g2
        + (1 - n) * g1
        - trace1 * g
        - r * quadratic
        + 0.5 * r * trace1 * g1
        - 2.0 * r * nf.ricci(r)
    )


class AmbientMetric(MetricFamily):
    """``g_+ = s(r) g_0 + r^{-2} dr^2`` on coordinates ``(x, r)``, ``s = r^{-2} (1 - r^2)^2``."""

    kind = "hyperbolic-ambient"

    def __init__(self, nf: NormalForm):
        if not isinstance(nf, HyperbolicNormalForm):
            raise DomainError("Ambient metrics are available for the closed-form hyperbolic normal form only")
        super().__init__(nf.dimension + 1)
        self.nf = nf
        self.base = nf.boundary

    @property
    def euler_characteristic(self) -> int:
        return 1

    def _build_grid(self, nodes: int, azimuth_nodes: Optional[int]) -> QuadratureGrid:
        raise DimensionUnsupportedError("The ambient metric has no quadrature grid")

    @staticmethod
    def _profile(r: np.ndarray) -> Dict[str, np.ndarray]:
        return dict(
            s=r**-2 - 2.0 + r**2,
            ds=-2.0 * r**-3 + 2.0 * r,
            dds=6.0 * r**-4 + 2.0,
        )

    def metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        n = self.base.dimension
        r = x[:, n]
        out = np.zeros((x.shape[0], n + 1, n + 1))
        out[:, :n, :n] = self._profile(r)["s"][:, None, None] * self.base.metric(x[:, :n])
        out[:, n, n] = r**-2
        return out

    def d_metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        n = self.base.dimension
        r = x[:, n]
        s = self._profile(r)
        out = np.zeros((x.shape[0],) + (n + 1,) * 3)
        out[:, :n, :n, :n] = s["s"][:, None, None, None] * self.base.d_metric(x[:, :n])
        out[:, n, :n, :n] = s["ds"][:, None, None] * self.base.metric(x[:, :n])
        out[:, n, n, n] = -2.0 * r**-3
        return out

    def dd_metric(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        n = self.base.dimension
        r = x[:, n]
        s = self._profile(r)
        base = x[:, :n]
        out = np.zeros((x.shape[0],) + (n + 1,) * 4)
        out[:, :n, :n, :n, :n] = s["s"][:, None, None, None, None] * self.base.dd_metric(base)
        mixed = s["ds"][:, None, None, None] * self.base.d_metric(base)
        out[:, :n, n, :n, :n] = mixed
        out[:, n, :n, :n, :n] = mixed
        out[:, n, n, :n, :n] = s["dds"][:, None, None] * self.base.metric(base)
        out[:, n, n, n, n] = 6.0 * r**-4
        return out

    def describe(self) -> str:
        return f"hyperbolic H^{self.dimension} over {self.base.describe()}"


def ambient_sectional_curvatures(nf: NormalForm, x: np.ndarray, r: float) -> np.ndarray:
    """Sectional curvatures of ``g_+`` on all coordinate planes at boundary points ``x`` and level ``r``.

    Returns shape ``(N, P)`` with ``P = (n+1) n / 2`` planes.
    """
    ambient = AmbientMetric(nf)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    points = np.concatenate([x, np.full((x.shape[0], 1), r)], axis=1)
    local = CurvatureEvaluator(ambient).local(points)
    g, rm = local["metric"], local["riemann"]
    planes = []
    for a in range(ambient.dimension):
        for b in range(a + 1, ambient.dimension):
            area = g[:, a, a] * g[:, b, b] - g[:, a, b] ** 2
            planes.append(rm[:, a, b, a, b] / area)
    curvatures = np.stack(planes, axis=1)
    logger.debug(f"Ambient sectional curvatures at r={r:g}: range [{curvatures.min():.6f}, {curvatures.max():.6f}]")
    return curvatures
