import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import BarycentricInterpolator
from scipy.special import roots_jacobi

from common.errors import GridShapeError

logger = logging.getLogger(__name__)


def _barycentric_weights(t: np.ndarray) -> np.ndarray:
    return np.asarray(BarycentricInterpolator(t).wi, dtype=float)


def _collocation_matrices(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """First and second polynomial differentiation matrices on the nodes ``t``.

    Off-diagonal entries come from the barycentric weights; each diagonal is minus its
    row sum, so constants differentiate to zero exactly.
    """
    weights = _barycentric_weights(t)
    gap = t[:, None] - t[None, :]
    np.fill_diagonal(gap, 1.0)
    first = (weights[None, :] / weights[:, None]) / gap
    np.fill_diagonal(first, 0.0)
    np.fill_diagonal(first, -first.sum(axis=1))
    second = 2.0 * first * (np.diag(first)[:, None] - 1.0 / gap)
    np.fill_diagonal(second, 0.0)
    np.fill_diagonal(second, -second.sum(axis=1))
    return first, second


class GridAxis:
    """One chart coordinate of a tensor-product quadrature grid.

    A ``polar`` axis samples an angle ``theta`` at Gauss-Jacobi nodes in ``t = cos(theta)``;
    functions along it are represented by polynomials in ``t``. A ``periodic`` axis samples
    a uniform grid and represents functions by trigonometric interpolation.
    """

    def __init__(
        self,
        kind: str,
        nodes: np.ndarray,
        weights: np.ndarray,
        period: Optional[float] = None,
        exponent: Optional[float] = None,
    ):
        self.kind = kind
        self.nodes = np.asarray(nodes, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.period = period
        self.exponent = exponent
        self._first, self._second = self._derivative_matrices()

    @classmethod
    def polar(cls, count: int, exponent: float) -> "GridAxis":
        t, w = roots_jacobi(count, exponent, exponent)
        return cls("polar", np.arccos(t), w, exponent=exponent)

    @classmethod
    def periodic(cls, count: int, period: float, offset: float = 0.0) -> "GridAxis":
        nodes = offset + period * np.arange(count) / count
        return cls("periodic", nodes, np.full(count, period / count), period=period)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def signature(self) -> Tuple:
        return (self.kind, self.size, self.period, self.exponent)

    def _derivative_matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        m = self.size
        if self.kind == "polar":
            dt, dtt = _collocation_matrices(np.cos(self.nodes))
            sin, cos = np.sin(self.nodes), np.cos(self.nodes)
            first = -sin[:, None] * dt
            second = (sin**2)[:, None] * dtt - cos[:, None] * dt
            return first, second

        scale = 2.0 * np.pi / self.period
        k = np.fft.fftfreq(m, d=1.0 / m) * scale
        k_odd = k.copy()
        if m % 2 == 0:
            k_odd[m // 2] = 0.0
        eye = np.eye(m)
        first = np.real(np.fft.ifft(1j * k_odd[:, None] * np.fft.fft(eye, axis=0), axis=0))
        second = np.real(np.fft.ifft(-(k**2)[:, None] * np.fft.fft(eye, axis=0), axis=0))
        return first, second

    def interpolation_row(self, value: float) -> np.ndarray:
        """Weights ``c`` with ``f(value) ~= c @ f(nodes)``."""
        m = self.size
        if self.kind == "polar":
            t = np.cos(self.nodes)
            gap = np.cos(value) - t
            hit = np.nonzero(np.abs(gap) < 1e-15)[0]
            if hit.size:
                return np.eye(m)[hit[0]]
            row = _barycentric_weights(t) / gap
            return row / row.sum()

        k = np.fft.fftfreq(m, d=1.0 / m)
        y = (value - self.nodes[0]) * 2.0 * np.pi / self.period
        phases = np.exp(-2j * np.pi * np.outer(k, np.arange(m)) / m) / m
        return np.real(np.exp(1j * k * y) @ phases)

    def first_derivative(self) -> np.ndarray:
        return self._first

    def second_derivative(self) -> np.ndarray:
        return self._second


class QuadratureGrid:
    """Tensor-product grid over a chart of ``M`` with weights for ``dv_g``."""

    def __init__(self, axes: Sequence[GridAxis], density: Optional[np.ndarray] = None):
        self.axes: List[GridAxis] = list(axes)
        self.resolution: Tuple[Optional[int], Optional[int]] = (None, None)
        self.shape = tuple(axis.size for axis in self.axes)
        mesh = np.meshgrid(*[axis.nodes for axis in self.axes], indexing="ij")
        self.points = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        weights = np.ones(())
        for axis in self.axes:
            weights = np.multiply.outer(weights, axis.weights)
        self.weights = weights.reshape(-1)
        if density is not None:
            self.weights = self.weights * density

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def signature(self) -> Tuple:
        return tuple(axis.signature for axis in self.axes)

    def with_density(self, density: np.ndarray) -> "QuadratureGrid":
        """Same nodes, weights multiplied pointwise by ``density``."""
        grid = QuadratureGrid(self.axes)
        grid.weights = self.weights * density
        grid.resolution = self.resolution
        return grid

    def check(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        if values.ndim == 0 or values.shape[0] != self.size:
            raise GridShapeError(
                f"Field with leading shape {values.shape[:1]} does not match grid of {self.size} points"
            )
        if not np.all(np.isfinite(values)):
            raise GridShapeError("Field values must be finite")
        return values

    def integrate(self, values: np.ndarray) -> np.ndarray:
        values = self.check(values)
        # np.sum reduces contiguous data pairwise
        weighted = self.weights.reshape((-1,) + (1,) * (values.ndim - 1)) * values
        return np.sum(weighted, axis=0)

    def _apply(self, matrix: np.ndarray, values: np.ndarray, axis: int) -> np.ndarray:
        tail = values.shape[1:]
        block = values.reshape(self.shape + tail)
        out = np.moveaxis(np.tensordot(matrix, block, axes=([1], [axis])), 0, axis)
        return out.reshape((self.size,) + tail)

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """Chart partials, derivative index directly after the point index."""
        values = self.check(values)
        parts = [
            self._apply(axis.first_derivative(), values, a) for a, axis in enumerate(self.axes)
        ]
        return np.stack(parts, axis=1)

    def hessian(self, values: np.ndarray) -> np.ndarray:
        values = self.check(values)
        n = self.dimension
        out = np.empty((self.size, n, n) + values.shape[1:])
        firsts = [self._apply(axis.first_derivative(), values, a) for a, axis in enumerate(self.axes)]
        for a, axis in enumerate(self.axes):
            out[:, a, a] = self._apply(axis.second_derivative(), values, a)
            for b in range(a + 1, n):
                mixed = self._apply(self.axes[b].first_derivative(), firsts[a], b)
                out[:, a, b] = mixed
                out[:, b, a] = mixed
        return out

    def interpolate(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        values = self.check(values)
        points = np.atleast_2d(points)
        tail = values.shape[1:]
        block = values.reshape(self.shape + tail)
        out = []
        for point in points:
            reduced = block
            for axis, coordinate in zip(self.axes, point):
                reduced = np.tensordot(axis.interpolation_row(coordinate), reduced, axes=([0], [0]))
            out.append(reduced)
        return np.asarray(out)


def sphere_grid(
    dimension: int, radius: float, nodes: int, azimuth_nodes: Optional[int] = None
) -> QuadratureGrid:
    """Angles ``theta_1..theta_{n-1}`` then azimuth ``phi``; weights integrate against the round volume."""
    azimuth = GridAxis.periodic(azimuth_nodes or nodes, 2.0 * np.pi)
    axes = [GridAxis.polar(nodes, 0.5 * (dimension - j - 1)) for j in range(1, dimension)]
    grid = QuadratureGrid(axes + [azimuth])
    grid.weights = grid.weights * radius**dimension
    grid.resolution = (nodes, azimuth_nodes)
    logger.debug(f"Sphere grid S^{dimension}: {grid.size} points")
    return grid


def torus_grid(periods: Sequence[float], nodes: int) -> QuadratureGrid:
    grid = QuadratureGrid([GridAxis.periodic(nodes, float(p)) for p in periods])
    grid.resolution = (nodes, None)
    return grid
