"""Rotationally symmetric minimal fillings of the ball model by profile-curve shooting.

A ``G``-invariant ``Y^{k+1}`` in ``B^{n+1}`` is swept out by a profile curve ``q(s)`` in
the orbit space, parametrized by Euclidean arclength with tangent angle ``beta``.
``Y`` is minimal when ``q`` is a geodesic of ``e^{2 phi / ...}``-weighted length, i.e.

    beta' = -sin(beta) d_1 phi + cos(beta) d_2 phi,
    phi = sum_i p_i log q_i - (k + 1) log(1 - |q|^2),

with ``prod q_i^{p_i}`` the orbit volume. The curve leaves a collapsed orbit
perpendicularly and is shot until it reaches the sphere at infinity.
"""
import logging
import math
from typing import Dict, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import gamma

from area_renorm.minimal_graphs import EQUIVARIANT, MinimalGraph
from area_renorm.submanifold import Embedding, clifford_torus, latitude
from common.errors import DomainError, ShootingError, SymmetryError
from config import settings
from manifold.tensors import central_difference_weights

logger = logging.getLogger(__name__)

LATITUDE = "latitude"
TORUS = "torus"

START_ARC = 1e-5
ARC_SPAN = 10.0
ABSOLUTE_TOLERANCE = 1e-14
SCAN_POINTS = {LATITUDE: 39, TORUS: 19}
RESIDUAL_STEP = 2e-3
RESIDUAL_INTERIOR = 0.05
GRAPH_WINDOW = 0.05
GRAPH_DEGREE = 8
GRAPH_SAMPLES = 80
DENSITY_SAMPLES = 40


class RotationalBoundary(BaseModel):
    """Boundary ``N`` invariant under a rotation group of ``S^n``.

    ``latitude``: ``{theta_1 = angle}``, invariant under ``SO(n)`` fixing the first axis.
    ``torus``: ``|z_1| = cos(angle), |z_2| = sin(angle)`` in ``S^3``, invariant under ``T^2``.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["latitude", "torus"]
    angle: float


class _Reduction(BaseModel):
    """Orbit-space data of one symmetry type."""

    model_config = ConfigDict(frozen=True)

    k: int
    exponents: Tuple[int, int]
    orbit_constant: float
    axis: int
    """Index of the orbit coordinate that vanishes where the orbits collapse."""

    angle_from: int
    """Boundary angle is measured from the ``q_{angle_from}`` axis."""


def _sphere_volume(m: int) -> float:
    return 2.0 * math.pi ** ((m + 1) / 2) / gamma((m + 1) / 2)


def _reduction(boundary: RotationalBoundary, n: int) -> _Reduction:
    if boundary.kind == LATITUDE:
        if n not in (2, 3):
            raise SymmetryError(f"Latitude reduction is implemented in S^2 and S^3, got S^{n}")
        if not 0.0 < boundary.angle < math.pi:
            raise DomainError(f"Latitude angle must lie in (0, pi), got {boundary.angle}")
        k = n - 1
        return _Reduction(k=k, exponents=(k, 0), orbit_constant=_sphere_volume(k), axis=0, angle_from=1)
    if n != 3:
        raise SymmetryError(f"A T^2-invariant torus lives in S^3, got S^{n}")
    if not 0.0 < boundary.angle < 0.5 * math.pi:
        raise DomainError(f"Torus parameter must lie in (0, pi/2), got {boundary.angle}")
    return _Reduction(k=2, exponents=(1, 1), orbit_constant=4.0 * math.pi**2, axis=1, angle_from=0)


def _phi_gradient(red: _Reduction, q: np.ndarray, regular: bool = False) -> np.ndarray:
    norm2 = q[0] ** 2 + q[1] ** 2
    grad = 2.0 * (red.k + 1) * q / (1.0 - norm2)
    for i, p in enumerate(red.exponents):
        if p and not (regular and i == red.axis):
            grad[i] += p / q[i]
    return grad


def _conformal_area(red: _Reduction, q: np.ndarray) -> float:
    orbit = red.orbit_constant * q[0] ** red.exponents[0] * q[1] ** red.exponents[1]
    return orbit * (2.0 / (1.0 - q[0] ** 2 - q[1] ** 2)) ** (red.k + 1)


def _rhs(red: _Reduction):
    def rhs(s, y):
        q = y[:2]
        beta = y[2]
        grad = _phi_gradient(red, q)
        return [
            math.cos(beta),
            math.sin(beta),
            -math.sin(beta) * grad[0] + math.cos(beta) * grad[1],
            _conformal_area(red, q),
        ]

    return rhs


def _start(red: _Reduction, parameter: float) -> Tuple[float, np.ndarray]:
    """State a short arc away from the collapsed orbit, from the regular series."""
    q0 = np.zeros(2)
    q0[1 - red.axis] = parameter
    beta0 = 0.0 if red.axis == 0 else 0.5 * math.pi
    tangent = np.array([math.cos(beta0), math.sin(beta0)])
    normal = np.array([-math.sin(beta0), math.cos(beta0)])
    curvature = (normal @ _phi_gradient(red, q0, regular=True)) / (1.0 + red.exponents[red.axis])
    s = START_ARC
    q = q0 + s * tangent + 0.5 * s**2 * curvature * normal
    area = _conformal_area(red, q) * s / (red.exponents[red.axis] + 1)
    return s, np.array([q[0], q[1], beta0 + curvature * s, area])


def _events(red: _Reduction):
    stop = settings.SHOOTING_STOP

    def boundary(s, y):
        return 1.0 - math.hypot(y[0], y[1]) - stop

    boundary.terminal = True
    boundary.direction = -1

    events = [boundary]
    for i, p in enumerate(red.exponents):
        if p:

            def collapse(s, y, i=i):
                return y[i]

            collapse.terminal = True
            collapse.direction = -1
            events.append(collapse)
    return events


def _integrate(red: _Reduction, parameter: float, dense: bool = False):
    s0, y0 = _start(red, parameter)
    return solve_ivp(
        _rhs(red),
        (s0, ARC_SPAN),
        y0,
        method="DOP853",
        rtol=settings.SHOOTING_RTOL,
        atol=ABSOLUTE_TOLERANCE,
        events=_events(red),
        dense_output=dense,
    )


def _boundary_angle(red: _Reduction, q: np.ndarray) -> float:
    other = 1 - red.angle_from
    return math.atan2(q[other], q[red.angle_from])


def _mismatch(red: _Reduction, target: float, parameter: float) -> float:
    sol = _integrate(red, parameter)
    if sol.status != 1 or sol.t_events[0].size == 0:
        return math.nan
    return _boundary_angle(red, sol.y_events[0][0][:2]) - target


def _bracket(red: _Reduction, kind: str, target: float) -> Tuple[float, float]:
    if red.axis == 0:
        grid = np.linspace(-0.95, 0.95, SCAN_POINTS[kind])
    else:
        grid = np.linspace(0.05, 0.95, SCAN_POINTS[kind])
    residuals = [_mismatch(red, target, value) for value in grid]
    for i in range(grid.size - 1):
        left, right = residuals[i], residuals[i + 1]
        if np.isfinite(left) and np.isfinite(right) and left * right <= 0.0:
            logger.info(f"Shooting bracket [{grid[i]:.4g}, {grid[i + 1]:.4g}]")
            return float(grid[i]), float(grid[i + 1])
    raise ShootingError("No sign change of the boundary mismatch", bracket=(grid[0], grid[-1]), residuals=residuals)


class EquivariantMinimalGraph(MinimalGraph):
    """Minimal filling of a :class:`RotationalBoundary`, from a converged shooting solve."""

    tag = EQUIVARIANT

    def __init__(self, boundary: RotationalBoundary, n: int, reduction: _Reduction, parameter: float, solution):
        super().__init__(reduction.k, n)
        self.boundary = boundary
        self.reduction = reduction
        self.parameter = parameter
        self.solution = solution
        self.s_end = float(solution.t_events[0][0])
        self.s_start = float(solution.t[0])

        tail = np.geomspace(1e-9, self.s_end - self.s_start, 400)
        self._s = np.unique(np.concatenate([np.linspace(self.s_start, self.s_end, 2000), self.s_end - tail]))
        self._s = self._s[(self._s >= self.s_start) & (self._s <= self.s_end)]
        self._r = self._radius(solution.sol(self._s)[:2])
        self.boundary_angle = self._extrapolated_angle()
        self._graph_fit = self._fit_graph()

    @staticmethod
    def _radius(q: np.ndarray) -> np.ndarray:
        rho = np.hypot(q[0], q[1])
        return (1.0 - rho) / (1.0 + rho)

    def _angle_rates(self, s: float) -> Tuple[float, float, float]:
        """``(theta, d theta / ds, d r / ds)`` at arclength ``s``."""
        y = self.solution.sol(s)
        q, beta = y[:2], y[2]
        velocity = np.array([math.cos(beta), math.sin(beta)])
        a, b = 1 - self.reduction.angle_from, self.reduction.angle_from
        theta = math.atan2(q[a], q[b])
        rho2 = q @ q
        theta_rate = (q[b] * velocity[a] - q[a] * velocity[b]) / rho2
        rho = math.sqrt(rho2)
        r_rate = -2.0 * (q @ velocity) / (rho * (1.0 + rho) ** 2)
        return theta, theta_rate, r_rate

    def _extrapolated_angle(self) -> float:
        theta, theta_rate, r_rate = self._angle_rates(self.s_end)
        r_end = float(self._radius(self.solution.sol(self.s_end)[:2]))
        return theta - 0.5 * r_end * theta_rate / r_rate

    @property
    def r_top(self) -> float:
        return float(self._r.max())

    def arclength_at(self, r: float) -> float:
        """Arclength where the outgoing part of the profile reaches level ``r``."""
        if not self._r[-1] <= r <= self.r_top:
            raise DomainError(f"Level r={r:g} outside the computed profile [{self._r[-1]:g}, {self.r_top:g}]")
        above = np.nonzero(self._r >= r)[0][-1]
        if above == self._s.size - 1:
            return self.s_end
        fn = lambda s: float(self._radius(self.solution.sol(s)[:2])) - r  # noqa: E731
        return brentq(fn, self._s[above], self._s[above + 1], xtol=1e-15, rtol=settings.BRENTQ_RTOL)

    def _theta(self, r: float) -> float:
        return self._angle_rates(self.arclength_at(r))[0]

    def _fit_graph(self) -> np.ndarray:
        """Least-squares fit of ``u`` on ``[0, GRAPH_WINDOW]`` by powers of ``r`` and ``r^{k+2} log r``."""
        radii = np.linspace(GRAPH_WINDOW / GRAPH_SAMPLES, GRAPH_WINDOW, GRAPH_SAMPLES)
        values = np.array([0.5 * (self._theta(r) - self.boundary_angle) for r in radii])
        t = radii / GRAPH_WINDOW
        columns = [t**j for j in range(GRAPH_DEGREE + 1)]
        if self.k % 2 == 0:
            columns.append(t ** (self.k + 2) * np.log(t))
        coefficients, *_ = np.linalg.lstsq(np.stack(columns, axis=1), values, rcond=None)
        scale = GRAPH_WINDOW ** -np.arange(GRAPH_DEGREE + 1)
        out = coefficients[: GRAPH_DEGREE + 1] * scale
        if self.k % 2 == 0:
            self.log_graph_coefficient = float(coefficients[-1] * GRAPH_WINDOW ** -(self.k + 2))
            out[self.k + 2] -= self.log_graph_coefficient * math.log(GRAPH_WINDOW)
        else:
            self.log_graph_coefficient = None
        return out

    def graph(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return np.array([0.5 * (self._theta(value) - self.boundary_angle) for value in r])

    def graph_coefficients(self) -> np.ndarray:
        """Taylor coefficients ``u^{(j)}`` from the profile fit."""
        return self._graph_fit

    def boundary_orthogonality(self) -> float:
        return abs(float(self._graph_fit[1]))

    def parity_defects(self, through: Optional[int] = None) -> Dict[int, float]:
        through = self.k + 1 if through is None else through
        return {j: abs(float(self._graph_fit[j])) for j in range(1, through + 1, 2)}

    def max_graph(self) -> float:
        levels = np.linspace(self._r[-1], self.r_top, 100)
        return float(np.abs(self.graph(levels)).max())

    def area_profile(self, epsilons) -> np.ndarray:
        epsilons = np.atleast_1d(np.asarray(epsilons, dtype=float))
        return np.array([float(self.solution.sol(self.arclength_at(eps))[3]) for eps in epsilons])

    def area_density(self, r: float) -> float:
        """``|dA / dr|`` at level ``r``."""
        s = self.arclength_at(r)
        y = self.solution.sol(s)
        _, _, r_rate = self._angle_rates(s)
        return _conformal_area(self.reduction, y[:2]) / abs(r_rate)

    def density_coefficients(self) -> np.ndarray:
        """Fit of ``r^{k+1} |dA/dr|`` on the density window in ``r^2`` (degree ``k + 2``).

        Coefficient ``j`` multiplies ``r^{2j}``; the ``r^k`` one is ``int_N a^{(k)} da_N``.
        """
        lo, hi = settings.AREA_DENSITY_WINDOW
        radii = np.linspace(lo, hi, DENSITY_SAMPLES)
        values = np.array([r ** (self.k + 1) * self.area_density(r) for r in radii])
        t = radii / hi
        columns = [t ** (2 * j) for j in range(self.k + 3)]
        if self.k % 2 == 0:
            columns.append(t ** (self.k + 2) * np.log(t))
        coefficients, *_ = np.linalg.lstsq(np.stack(columns, axis=1), values, rcond=None)
        out = coefficients[: self.k + 3] * hi ** (-2.0 * np.arange(self.k + 3))
        if self.k % 2 == 0:
            out[self.k // 2 + 1] -= coefficients[-1] * hi ** -(self.k + 2) * math.log(hi)
        return out

    def log_density_integral(self) -> Optional[float]:
        if self.k % 2:
            return None
        return float(self.density_coefficients()[self.k // 2])

    def boundary_area(self) -> float:
        a = self.boundary.angle
        if self.boundary.kind == TORUS:
            return math.pi**2 * math.sin(a) * math.cos(a)
        return _sphere_volume(self.k) * (0.5 * math.sin(a)) ** self.k

    def leading_coefficient(self) -> float:
        return self.boundary_area() / self.k

    def closed_form(self) -> Dict[str, float]:
        a = self.boundary.angle
        if self.boundary.kind == TORUS:
            value = -(math.pi**2 / 8.0) * math.sin(a) * math.cos(a) * (
                4.0 * (1.0 / math.tan(a) - math.tan(a)) ** 2 + 16.0
            )
            return {"K": value}
        if self.k == 1:
            return {"A": -2.0 * math.pi}
        return {"K": -2.0 * math.pi}

    def boundary_embedding(self, nodes: Optional[int] = None) -> Embedding:
        if self.boundary.kind == TORUS:
            return clifford_torus(self.boundary.angle, nodes)
        return latitude(self.boundary.angle, self.n, nodes)

    @property
    def residual(self) -> float:
        """Five-point difference of ``beta`` against the curvature equation away from the boundary."""
        interior = self._s[(self._r >= RESIDUAL_INTERIOR)]
        lo, hi = interior[0] + 2 * RESIDUAL_STEP, interior[-1] - 2 * RESIDUAL_STEP
        if hi <= lo:
            return 0.0
        weights = central_difference_weights(1, 2) / RESIDUAL_STEP
        rhs = _rhs(self.reduction)
        worst = 0.0
        for s in np.linspace(lo, hi, 50):
            betas = self.solution.sol(s + RESIDUAL_STEP * np.arange(-2, 3))[2]
            worst = max(worst, abs(weights @ betas - rhs(s, self.solution.sol(s))[2]))
        return float(worst)

    def plane_deviation(self) -> float:
        """Sup distance of a latitude profile from the totally geodesic plane through ``N``."""
        if self.boundary.kind != LATITUDE:
            raise DomainError("Only latitude boundaries bound a totally geodesic plane")
        q = self.solution.sol(self._s)[:2]
        theta = self.boundary.angle
        if abs(math.cos(theta)) < 1e-14:
            return float(np.abs(q[1]).max())
        center = 1.0 / math.cos(theta)
        distance = np.hypot(q[0], q[1] - center)
        return float(np.abs(distance - abs(math.tan(theta))).max())

    def describe(self) -> str:
        return f"equivariant filling of {self.boundary.kind}({self.boundary.angle:g}) in H^{self.n + 1}"


def equivariant_minimal_graph(boundary: RotationalBoundary, n: int) -> EquivariantMinimalGraph:
    """Shoot the reduced minimal-surface ODE from the collapsed orbit to the boundary.

    The free parameter is the starting height on the axis (latitude) or the radius of
    the collapsed circle (torus); it is bracketed by a scan and refined with Brent's method.

    Raises:
        SymmetryError: the boundary type does not match ``S^n``.
        ShootingError: the scan finds no sign change or the root search fails.
    """
    red = _reduction(boundary, n)
    target = boundary.angle
    if boundary.kind == TORUS and target > 0.25 * math.pi:
        # the z_2 circle is the larger one; solve the mirrored torus
        target = 0.5 * math.pi - target
        boundary_solved = RotationalBoundary(kind=TORUS, angle=target)
    else:
        boundary_solved = boundary
    lo, hi = _bracket(red, boundary.kind, target)
    try:
        parameter = brentq(
            lambda value: _mismatch(red, target, value), lo, hi, xtol=settings.SHOOTING_XTOL
        )
    except (ValueError, RuntimeError) as exc:
        raise ShootingError(f"Root search failed: {exc}", bracket=(lo, hi)) from exc

    solution = _integrate(red, parameter, dense=True)
    if solution.status != 1 or solution.t_events[0].size == 0:
        raise ShootingError("Converged parameter does not reach the boundary", bracket=(lo, hi))
    graph = EquivariantMinimalGraph(boundary_solved, n, red, parameter, solution)
    logger.info(
        f"Shot {graph.describe()}: parameter={parameter:.12g}, boundary angle "
        f"{graph.boundary_angle:.12g} (target {target:.12g}), residual {graph.residual:.3e}"
    )
    return graph
