import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.errors import DimensionUnsupportedError, DomainError, ImmersionError
from config import settings
from manifold.curvature import CurvatureEvaluator, in_chunks
from manifold.metric_families import MetricFamily, RoundSphere
from manifold.quadrature import QuadratureGrid, sphere_grid, torus_grid
from manifold.tensors import richardson_derivative

logger = logging.getLogger(__name__)


class Embedding(BaseModel):
    """A ``k``-dimensional ``N`` in the chart of ``M`` given by a smooth parameter map."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dimension: int
    ambient_dimension: int
    chart_map: Callable[[np.ndarray], np.ndarray]
    """Parameters ``(P, k)`` to chart points ``(P, n)``."""

    grid: QuadratureGrid
    coordinate_weights: np.ndarray
    """Quadrature weights for ``dx^1 ... dx^k`` on the parameter grid."""

    label: str

    @property
    def parameters(self) -> np.ndarray:
        return self.grid.points

    def points(self) -> np.ndarray:
        return self.chart_map(self.parameters)


def _coordinate_sphere_grid(k: int, nodes: Optional[int] = None):
    """Sphere grid for ``S^k`` with the round density divided out of the weights."""
    nodes = nodes or settings.grid_nodes(k)
    grid = sphere_grid(k, 1.0, nodes)
    density = np.sqrt(np.linalg.det(RoundSphere(k).metric(grid.points)))
    return grid, grid.weights / density


def equatorial_sphere(k: int, n: int, nodes: Optional[int] = None) -> Embedding:
    """``{theta_1 = ... = theta_{n-k} = pi/2}`` in the chart of ``S^n``, a great ``S^k``."""
    if not 1 <= k <= n - 1:
        raise DomainError(f"Equatorial S^k needs 1 <= k <= n-1, got k={k}, n={n}")
    grid, weights = _coordinate_sphere_grid(k, nodes)

    def chart_map(params: np.ndarray) -> np.ndarray:
        params = np.atleast_2d(params)
        fixed = np.full((params.shape[0], n - k), 0.5 * math.pi)
        return np.concatenate([fixed, params], axis=1)

    return Embedding(
        dimension=k,
        ambient_dimension=n,
        chart_map=chart_map,
        grid=grid,
        coordinate_weights=weights,
        label=f"equatorial S^{k} in S^{n}",
    )


def latitude(theta: float, n: int, nodes: Optional[int] = None) -> Embedding:
    """``{theta_1 = theta}`` in ``S^n`` for ``n`` in ``{2, 3}``."""
    if n not in (2, 3):
        raise DimensionUnsupportedError(f"Latitude boundaries are built for n=2 and n=3, got n={n}")
    if not 0.0 < theta < math.pi:
        raise DomainError(f"Latitude angle must lie in (0, pi), got {theta}")
    grid, weights = _coordinate_sphere_grid(n - 1, nodes)

    def chart_map(params: np.ndarray) -> np.ndarray:
        params = np.atleast_2d(params)
        return np.concatenate([np.full((params.shape[0], 1), theta), params], axis=1)

    return Embedding(
        dimension=n - 1,
        ambient_dimension=n,
        chart_map=chart_map,
        grid=grid,
        coordinate_weights=weights,
        label=f"latitude S^{n - 1} at theta={theta:g}",
    )


def clifford_torus(a: float, nodes: Optional[int] = None) -> Embedding:
    """``|z_1| = cos a, |z_2| = sin a`` in ``S^3``, parameters ``(s, t)``."""
    if not 0.0 < a < 0.5 * math.pi:
        raise DomainError(f"Torus parameter must lie in (0, pi/2), got {a}")
    grid = torus_grid([2.0 * math.pi, 2.0 * math.pi], nodes or settings.grid_nodes(2))

    def chart_map(params: np.ndarray) -> np.ndarray:
        params = np.atleast_2d(params)
        s, t = params[:, 0], params[:, 1]
        theta1 = np.arccos(math.cos(a) * np.cos(s))
        theta2 = np.arccos(math.cos(a) * np.sin(s) / np.sin(theta1))
        return np.stack([theta1, theta2, t], axis=1)

    return Embedding(
        dimension=2,
        ambient_dimension=3,
        chart_map=chart_map,
        grid=grid,
        coordinate_weights=grid.weights,
        label=f"torus a={a:g} in S^3",
    )


def flat_slice(k: int, n: int, periods: Optional[Sequence[float]] = None, nodes: Optional[int] = None) -> Embedding:
    """Coordinate subtorus ``{x_{k+1} = ... = x_n = 0}`` of ``T^n``."""
    periods = list(periods or [2.0 * math.pi] * n)
    grid = torus_grid(periods[:k], nodes or settings.grid_nodes(k))

    def chart_map(params: np.ndarray) -> np.ndarray:
        params = np.atleast_2d(params)
        return np.concatenate([params, np.zeros((params.shape[0], n - k))], axis=1)

    return Embedding(
        dimension=k,
        ambient_dimension=n,
        chart_map=chart_map,
        grid=grid,
        coordinate_weights=grid.weights,
        label=f"flat T^{k} in T^{n}",
    )


class SubmanifoldPatch(BaseModel):
    """Extrinsic geometry of ``N`` sampled on its parameter grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dimension: int
    ambient_dimension: int
    points: np.ndarray
    """Chart points of ``M`` along ``N``, ``(P, n)``."""

    frame: np.ndarray
    """Tangent vectors ``d x^i / d x^alpha``, ``(P, n, k)``."""

    induced_metric: np.ndarray
    normal_frame: np.ndarray
    """Orthonormal normal vectors ``nu_{gamma'}``, ``(P, n - k, n)``."""

    second_fundamental_form: np.ndarray
    """``B^{gamma'}_{alpha beta}``, ``(P, n - k, k, k)``."""

    mean_curvature: np.ndarray
    """``H^{gamma'}``, ``(P, n - k)``."""

    schouten: Optional[np.ndarray] = None
    """Tangential block ``P_{alpha beta}``; ``None`` for ``n < 3``."""

    area_weights: np.ndarray

    @property
    def normal_metric(self) -> np.ndarray:
        count, codim = self.mean_curvature.shape
        return np.broadcast_to(np.eye(codim), (count, codim, codim))

    @property
    def mean_curvature_norm2(self) -> np.ndarray:
        return np.einsum("na,na->n", self.mean_curvature, self.mean_curvature)

    @property
    def schouten_trace(self) -> np.ndarray:
        if self.schouten is None:
            raise DimensionUnsupportedError(f"Schouten is not defined for n={self.ambient_dimension}")
        return np.einsum("nab,nab->n", np.linalg.inv(self.induced_metric), self.schouten)

    @property
    def area(self) -> float:
        return float(self.area_weights.sum())

    def integrate(self, values: np.ndarray) -> float:
        return float(np.asarray(values) @ self.area_weights)


def _normal_frame(metric: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Gram-Schmidt (Householder QR) completion of the tangent frame, orthonormal in ``metric``."""
    k = frame.shape[-1]
    chol = np.linalg.cholesky(metric)
    upper = np.swapaxes(chol, 1, 2)
    q, _ = np.linalg.qr(upper @ frame, mode="complete")
    normals = np.linalg.solve(upper, q[:, :, k:])
    return np.swapaxes(normals, 1, 2)


def submanifold_geometry(embedding: Embedding, g: MetricFamily, step: Optional[float] = None) -> SubmanifoldPatch:
    """``B = (nabla_X Y)^perp``, ``H`` and ``P_{alpha beta}`` along an embedded ``N``.

    Parameter derivatives of the chart map come from Richardson differences; the
    ambient connection and Schouten tensor are evaluated in closed form.

    Raises:
        ImmersionError: the induced metric is singular somewhere on the grid.
    """
    if embedding.ambient_dimension != g.dimension:
        raise DomainError(
            f"{embedding.label} lives in dimension {embedding.ambient_dimension}, metric has {g.dimension}"
        )
    step = step or settings.FD_STEP
    k, n = embedding.dimension, g.dimension
    params = embedding.parameters
    points = embedding.chart_map(params)
    frame = richardson_derivative(embedding.chart_map, params, step)
    hessian = richardson_derivative(
        lambda p: richardson_derivative(embedding.chart_map, p, step), params, step
    )
    hessian = 0.5 * (hessian + np.swapaxes(hessian, 2, 3))

    metric = g.metric(points)
    induced = np.einsum("nia,nij,njb->nab", frame, metric, frame)
    eigen = np.linalg.eigvalsh(induced)
    if np.any(eigen[:, 0] <= 0.0) or np.any(eigen[:, -1] > 1e12 * eigen[:, 0]):
        raise ImmersionError(
            f"Induced metric of {embedding.label} degenerates (min eigenvalue {eigen[:, 0].min():.3e})"
        )

    evaluator = CurvatureEvaluator(g)
    gamma = in_chunks(evaluator.gamma, points, multiplicity=n)
    ambient = hessian + np.einsum("npij,nia,njb->npab", gamma, frame, frame)
    normals = _normal_frame(metric, frame)
    second = np.einsum("nci,nij,njab->ncab", normals, metric, ambient)
    second = 0.5 * (second + np.swapaxes(second, 2, 3))
    induced_inv = np.linalg.inv(induced)
    mean = np.einsum("nab,ncab->nc", induced_inv, second)

    schouten = None
    if n >= 3:
        ambient_p = in_chunks(evaluator.schouten, points)
        schouten = np.einsum("nia,nij,njb->nab", frame, ambient_p, frame)

    weights = np.sqrt(np.linalg.det(induced)) * embedding.coordinate_weights
    logger.info(
        f"Geometry of {embedding.label}: area {weights.sum():.12g}, "
        f"max |H| {np.sqrt(np.einsum('nc,nc->n', mean, mean)).max():.3e}"
    )
    return SubmanifoldPatch(
        dimension=k,
        ambient_dimension=n,
        points=points,
        frame=frame,
        induced_metric=induced,
        normal_frame=normals,
        second_fundamental_form=second,
        mean_curvature=mean,
        schouten=schouten,
        area_weights=weights,
    )


def willmore_integrand(patch: SubmanifoldPatch) -> np.ndarray:
    """``|H|^2``; in a flat ambient metric ``K`` reduces to ``-1/8`` of its integral."""
    return patch.mean_curvature_norm2


def k2_integrand(patch: SubmanifoldPatch) -> np.ndarray:
    """``-(|H|^2 + 4 g^{alpha beta} P_{alpha beta}) / 8``."""
    if patch.dimension != 2:
        raise DimensionUnsupportedError(f"The area log coefficient formula needs k=2, got k={patch.dimension}")
    return -0.125 * (willmore_integrand(patch) + 4.0 * patch.schouten_trace)


def k2_log_coefficient(patch: SubmanifoldPatch) -> float:
    """``K = -1/8 int_N (|H|^2 + 4 g^{alpha beta} P_{alpha beta}) da_N`` for surfaces."""
    value = patch.integrate(k2_integrand(patch))
    logger.info(f"K from the curvature integral: {value:.12g}")
    return value
