"""Special defining functions ``r_hat = r e^omega`` for a new boundary representative.

``omega`` solves ``2 omega_r + r (omega_r^2 + |d_M omega|^2_{g_r}) = 0`` with
``omega(., 0) = Upsilon``; the branch with ``omega_r -> 0`` at the boundary is marched
outward in ``r`` with a fixed-step fourth-order Runge-Kutta scheme.
"""
import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr
from scipy.interpolate import CubicHermiteSpline, CubicSpline, PPoly
from scipy.optimize import brentq

from common.errors import DomainError, GaugeBreakdownError, GridShapeError, InversionError
from config import settings
from gauge.normal_form import NormalForm
from manifold.fields import ScalarField
from manifold.quadrature import QuadratureGrid
from manifold.tensors import central_difference_weights

logger = logging.getLogger(__name__)

NEWTON_MAX_ITERATIONS = 50
NEWTON_TOLERANCE = 1e-13
PARITY_SPACING_STEPS = 20


class OmegaField(BaseModel):
    """``omega(x, r_i)`` on the boundary grid times the radial marching grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    radii: np.ndarray
    """Ascending marching radii; symmetric about zero for mirrored solves."""

    values: np.ndarray
    """Shape ``(R, N)``."""

    radial_derivative: np.ndarray
    upsilon: np.ndarray
    step: float
    grid: QuadratureGrid
    mirrored: bool = False
    residual: float = 0.0
    _interpolant: Optional[Tuple[CubicHermiteSpline, PPoly]] = PrivateAttr(default=None)

    @property
    def extent(self) -> float:
        return float(self.radii[-1])

    def _check(self, r: np.ndarray):
        if np.any(r < self.radii[0] - 1e-14) or np.any(r > self.radii[-1] + 1e-14):
            raise DomainError(
                f"Radius outside the solved range [{self.radii[0]:g}, {self.radii[-1]:g}]"
            )

    def _splines(self) -> Tuple[CubicHermiteSpline, PPoly]:
        if self._interpolant is None:
            spline = CubicHermiteSpline(self.radii, self.values, self.radial_derivative, axis=0)
            self._interpolant = (spline, spline.derivative())
        return self._interpolant

    def _pointwise(self, r, derivative: bool = False) -> np.ndarray:
        """Cubic Hermite interpolant in ``r`` through the stored values and slopes."""
        r = np.broadcast_to(np.asarray(r, dtype=float), (self.values.shape[1],))
        self._check(r)
        spline = self._splines()[1 if derivative else 0]
        if np.all(r == r[0]):
            return spline(r[0])
        # one radius per column: evaluate each column's own piece
        index = np.clip(np.searchsorted(spline.x, r, side="right") - 1, 0, spline.x.size - 2)
        cols = np.arange(r.size)
        return np.polyval(spline.c[:, index, cols], r - spline.x[index])

    def at(self, r) -> np.ndarray:
        """``omega`` at radius ``r`` (scalar or one radius per grid point)."""
        return self._pointwise(r)

    def derivative_at(self, r) -> np.ndarray:
        return self._pointwise(r, derivative=True)

    def restrict(self, points: np.ndarray) -> "OmegaField":
        """Same radial table interpolated to off-grid boundary points."""
        points = np.atleast_2d(points)
        values = self.grid.interpolate(self.values.T, points).T
        derivative = self.grid.interpolate(self.radial_derivative.T, points).T
        upsilon = self.grid.interpolate(self.upsilon, points)
        return OmegaField(
            radii=self.radii,
            values=values,
            radial_derivative=derivative,
            upsilon=upsilon,
            step=self.step,
            grid=self.grid,
            mirrored=self.mirrored,
            residual=self.residual,
        )

    def along(self, points: np.ndarray, radii: np.ndarray) -> np.ndarray:
        """``omega(points[i], radii[i])`` along a path through the collar."""
        points = np.atleast_2d(points)
        radii = np.atleast_1d(radii)
        if points.shape[0] != radii.size:
            raise GridShapeError(f"Path has {points.shape[0]} points for {radii.size} radii")
        return np.array(
            [float(self.grid.interpolate(self.at(r), point)[0]) for point, r in zip(points, radii)]
        )


def _omega_rate(nf: NormalForm, grid: QuadratureGrid, r: float, omega: np.ndarray) -> np.ndarray:
    gradient = grid.gradient(omega)
    norm2 = np.einsum("nij,ni,nj->n", nf.inverse_metric(r), gradient, gradient)
    discriminant = 1.0 - r**2 * norm2
    if np.any(discriminant <= 0.0):
        raise GaugeBreakdownError("Eikonal discriminant vanished while marching", radius=abs(r))
    return -r * norm2 / (1.0 + np.sqrt(discriminant))


def _march(nf: NormalForm, grid: QuadratureGrid, omega0: np.ndarray, step: float, count: int):
    values = [omega0]
    rates = [_omega_rate(nf, grid, 0.0, omega0)]
    omega, r = omega0, 0.0
    for i in range(count):
        k1 = rates[-1]
        k2 = _omega_rate(nf, grid, r + 0.5 * step, omega + 0.5 * step * k1)
        k3 = _omega_rate(nf, grid, r + 0.5 * step, omega + 0.5 * step * k2)
        k4 = _omega_rate(nf, grid, r + step, omega + step * k3)
        omega = omega + step * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        r = (i + 1) * step
        values.append(omega)
        rates.append(_omega_rate(nf, grid, r, omega))
    return np.stack(values), np.stack(rates)


def _gauge_residual(nf: NormalForm, grid: QuadratureGrid, radii: np.ndarray, values: np.ndarray, step: float) -> float:
    if radii.size < 5:
        return 0.0
    weights = central_difference_weights(1, 2) / step
    worst = 0.0
    for i in range(2, radii.size - 2):
        omega_r = weights @ values[i - 2 : i + 3]
        gradient = grid.gradient(values[i])
        norm2 = np.einsum("nij,ni,nj->n", nf.inverse_metric(radii[i]), gradient, gradient)
        residual = 2.0 * omega_r + radii[i] * (omega_r**2 + norm2)
        worst = max(worst, float(np.abs(residual).max()))
    return worst


def solve_special_defining(
    nf: NormalForm,
    upsilon: ScalarField,
    extent: Optional[float] = None,
    step: Optional[float] = None,
    mirror: bool = False,
) -> OmegaField:
    """March the gauge function ``omega`` from ``omega(., 0) = Upsilon``.

    Args:
        nf: Normal form of the starting representative.
        upsilon: Log of the conformal factor, sampled on ``nf.grid``.
        extent: Largest radius to reach (defaults to ``settings.MARCH_EXTENT``).
        step: Radial step (defaults to ``settings.MARCH_STEP``).
        mirror: Also march to ``-extent`` so symmetric differences at ``r = 0`` are available.

    Raises:
        GaugeBreakdownError: ``1 - r^2 |d_M omega|^2`` became non-positive before ``extent``.
    """
    extent = extent or settings.MARCH_EXTENT
    step = step or settings.MARCH_STEP
    grid = nf.grid
    if upsilon.grid.signature != grid.signature:
        raise GridShapeError("Upsilon must be sampled on the normal form's boundary grid")
    nf.check_radius(extent)
    count = int(round(extent / step))
    omega0 = np.asarray(upsilon.values, dtype=float)

    values, rates = _march(nf, grid, omega0, step, count)
    radii = step * np.arange(count + 1)
    if mirror:
        back_values, back_rates = _march(nf, grid, omega0, -step, count)
        values = np.concatenate([back_values[:0:-1], values])
        rates = np.concatenate([back_rates[:0:-1], rates])
        radii = step * np.arange(-count, count + 1)

    residual = _gauge_residual(nf, grid, radii, values, step)
    logger.info(
        f"Solved omega to r={extent:g} with step {step:g}: max |omega - Upsilon| = "
        f"{np.abs(values - omega0).max():.3e}, equation residual {residual:.3e}"
    )
    if residual > 1e-9:
        logger.warning(f"Gauge equation residual {residual:.3e} exceeds 1e-9")
    return OmegaField(
        radii=radii,
        values=values,
        radial_derivative=rates,
        upsilon=omega0,
        step=step,
        grid=grid,
        mirrored=mirror,
        residual=residual,
    )


class GaugeChange:
    """``epsilon -> epsilon_hat(x, epsilon) = epsilon b(x, epsilon)`` from ``r_hat = r e^omega``."""

    def __init__(self, omega: OmegaField):
        self.omega = omega
        slope = 1.0 + omega.radii[:, None] * omega.radial_derivative
        if np.any(slope <= 0.0):
            bad = omega.radii[np.where(slope <= 0.0)[0][0]]
            raise InversionError(f"r -> r e^omega is not monotone near r={bad:g}")

    def forward(self, r) -> np.ndarray:
        """``r_hat = r e^{omega(x, r)}``."""
        return np.asarray(r) * np.exp(self.omega.at(r))

    def _check_target(self, eps: float):
        omega = self.omega
        if eps > 0.0 and np.any(omega.radii[-1] * np.exp(omega.values[-1]) < eps):
            raise DomainError(f"epsilon={eps:g} lies beyond the solved gauge region")
        if eps < 0.0 and (not omega.mirrored or np.any(omega.radii[0] * np.exp(omega.values[0]) > eps)):
            raise DomainError(f"epsilon={eps:g} lies beyond the solved gauge region")

    def invert(self, eps: float) -> np.ndarray:
        """``r`` with ``r e^{omega(x, r)} = eps`` at every point, by Newton's method."""
        if eps == 0.0:
            return np.zeros(self.omega.values.shape[1])
        self._check_target(eps)
        r = eps * np.exp(-self.omega.upsilon)
        for _ in range(NEWTON_MAX_ITERATIONS):
            omega = self.omega.at(r)
            growth = np.exp(omega)
            mismatch = r * growth - eps
            if np.abs(mismatch).max() <= NEWTON_TOLERANCE * abs(eps):
                return r
            r = r - mismatch / (growth * (1.0 + r * self.omega.derivative_at(r)))
            r = np.clip(r, self.omega.radii[0], self.omega.radii[-1])
        raise InversionError(
            f"Newton inversion at epsilon={eps:g} did not converge (residual {np.abs(mismatch).max():.3e})"
        )

    def b(self, eps: float) -> np.ndarray:
        if eps == 0.0:
            return np.exp(-self.omega.upsilon)
        return self.invert(eps) / eps

    def epsilon_hat(self, eps: float) -> np.ndarray:
        return eps * self.b(eps)

    def parity_defects(self, through: int) -> Dict[int, float]:
        """Odd Taylor coefficients of ``b`` in ``epsilon`` by symmetric differences."""
        return _odd_taylor_estimates(self.b, through, PARITY_SPACING_STEPS * self.omega.step, self.omega)


def change_of_gauge(omega: OmegaField, points: Optional[np.ndarray] = None) -> GaugeChange:
    """Gauge change on the boundary grid, or at ``points`` by spectral interpolation."""
    if points is not None:
        omega = omega.restrict(points)
    return GaugeChange(omega)


def epsilon_hat_along(
    omega: OmegaField,
    path: Callable[[np.ndarray], np.ndarray],
    epsilons: np.ndarray,
    limit: Optional[float] = None,
) -> np.ndarray:
    """``r`` on a boundary-reaching branch with ``r e^{omega(x(r), r)} = eps``.

    ``path`` maps radii to chart points ``x(r)`` of the branch; ``limit`` caps the
    radii for branches that end below the solved extent.
    """
    radii = omega.radii[omega.radii >= 0.0]
    if limit is not None:
        radii = radii[radii <= limit]
    values = omega.along(path(radii), radii)
    spline = CubicSpline(radii, values)
    top = radii[-1] * np.exp(values[-1])
    out = []
    for eps in np.atleast_1d(epsilons):
        if not 0.0 < eps <= top:
            raise DomainError(f"epsilon={eps:g} lies beyond the solved gauge region along the path")
        out.append(
            brentq(lambda r: r * np.exp(spline(r)) - eps, 0.0, radii[-1], xtol=1e-15, rtol=settings.BRENTQ_RTOL)
        )
    return np.asarray(out)


def _odd_taylor_estimates(
    sample: Callable[[float], np.ndarray], through: int, spacing: float, omega: OmegaField
) -> Dict[int, float]:
    if not omega.mirrored:
        raise DomainError("Symmetric differences need a mirrored gauge solve")
    out: Dict[int, float] = {}
    for order in range(1, through + 1, 2):
        half_width = (order + 1) // 2 + 1
        if half_width * spacing > omega.extent:
            raise DomainError(
                f"Order {order} needs samples out to {half_width * spacing:g}, solved to {omega.extent:g}"
            )
        weights = central_difference_weights(order, half_width)
        samples = np.stack([sample(k * spacing) for k in range(-half_width, half_width + 1)])
        estimate = weights @ samples / spacing**order / np.prod(np.arange(1, order + 1))
        out[order] = float(np.abs(estimate).max())
    logger.info(f"Odd Taylor coefficient estimates: {out}")
    return out


def parity_defects(omega: OmegaField, through: int) -> Dict[int, float]:
    """Largest odd Taylor coefficient of ``omega`` in ``r`` for each odd order up to ``through``."""
    return _odd_taylor_estimates(omega.at, through, PARITY_SPACING_STEPS * omega.step, omega)
