import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.errors import IndeterminacyError, InsufficientOrderError
from fg_expansion.power_series import TensorSeries, matrix_inverse
from manifold.metric_families import MetricFamily
from manifold.quadrature import QuadratureGrid
from manifold.tensors import christoffel_first, inverse_metric

logger = logging.getLogger(__name__)

DETERMINED = "determined"
FREE = "free"
TRACE_ONLY = "trace-determined-only"


class PowerSeriesMetric(BaseModel):
    """``g_r = g(0) + g(1) r + ... + g(m) r^m (+ h r^n log r)`` sampled on a boundary grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dimension: int
    order: int
    family: MetricFamily
    grid: QuadratureGrid

    coefficients: np.ndarray
    """Shape ``(order + 1, N, n, n)``."""

    d_coefficients: np.ndarray
    """Chart partials, ``(order + 1, N, n, n, n)`` with derivative index first."""

    dd_coefficients: np.ndarray

    log_coefficient: Optional[np.ndarray] = None
    """Obstruction ``h`` at order ``n`` for even ``n``."""

    flags: List[str]
    residual: List[float]
    """Max pointwise residual of the Einstein equation per power of ``r``."""

    incompatibility: Optional[float] = None
    """Trace-free part of the order-``n`` right-hand side for odd ``n``."""

    def coefficient(self, j: int) -> np.ndarray:
        if j > self.order:
            raise InsufficientOrderError(f"Coefficient g({j}) requested from a series of order {self.order}")
        return self.coefficients[j]

    def series(self) -> TensorSeries:
        return TensorSeries(self.coefficients)

    def metric_at(self, r: float) -> np.ndarray:
        return self.series()(r)

    def trace(self, j: int) -> np.ndarray:
        g0_inv = np.linalg.inv(self.coefficients[0])
        return np.einsum("nij,nij->n", g0_inv, self.coefficient(j))


def _ricci_series(
    g_inv: TensorSeries, dg: TensorSeries, ddg: TensorSeries
) -> TensorSeries:
    gamma1 = TensorSeries(np.stack([christoffel_first(c) for c in dg.c]))
    gamma2 = g_inv.contract("npk,nkij->npij", gamma1)
    second = TensorSeries(
        0.5
        * np.stack(
            [
                np.einsum("njkil->nijkl", c)
                + np.einsum("niljk->nijkl", c)
                - np.einsum("njlik->nijkl", c)
                - np.einsum("nikjl->nijkl", c)
                for c in ddg.c
            ]
        )
    )
    riemann = (
        second
        + gamma1.contract("npjk,npil->nijkl", gamma2)
        - gamma1.contract("npjl,npik->nijkl", gamma2)
    )
    return g_inv.contract("nik,nijkl->njl", riemann)


def einstein_residual_series(
    coefficients: np.ndarray, d_coefficients: np.ndarray, dd_coefficients: np.ndarray
) -> TensorSeries:
    """Series of the tangential Einstein equation for ``g_r`` given by its coefficients.

    ``r g'' + (1-n) g' - tr(g') g - r g' g^{-1} g' + (r/2) tr(g') g' - 2 r Ric(g_r)``,
    valid through ``r^{m-1}`` for a series of order ``m``.
    """
    n = coefficients.shape[-1]
    order = coefficients.shape[0] - 1
    g = TensorSeries(coefficients)
    g_inv = matrix_inverse(g)
    g1 = g.deriv()
    g2 = g1.deriv()
    trace1 = g_inv.contract("nkl,nkl->n", g1)
    ricci = _ricci_series(g_inv, TensorSeries(d_coefficients), TensorSeries(dd_coefficients))
    quadratic = g1.contract("nik,nkl->nil", g_inv).contract("nil,nlj->nij", g1)
    top = max(order - 1, 0)
    terms = [
        g2.shift(1, top),
        (1 - n) * g1.truncate(top),
        -trace1.contract("n,nij->nij", g).truncate(top),
        -quadratic.shift(1, top),
        0.5 * trace1.contract("n,nij->nij", g1).shift(1, top),
        -2.0 * ricci.shift(1, top),
    ]
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total


def fg_expand(
    g0: MetricFamily,
    order: int,
    nodes: Optional[int] = None,
    strict: bool = False,
    grid: Optional[QuadratureGrid] = None,
) -> PowerSeriesMetric:
    """Solve the Einstein condition order by order for the coefficients of ``g_r``.

    At order ``nu`` the coefficient ``X = d_r^nu g / nu!`` satisfies
    ``nu [(nu - n) X - tr(X) g0] + S = 0``, where ``S`` collects lower orders.
    For ``nu = n`` the trace-free part is not determined: it is zero-filled and
    flagged; for even ``n`` the trace-free part of ``S`` gives the log coefficient.

    Args:
        g0: Boundary representative.
        order: Highest power of ``r`` to compute.
        nodes: Quadrature nodes per axis (defaults from settings).
        strict: Raise instead of continuing past order ``n`` for odd ``n``.
        grid: Explicit grid, overriding ``nodes``.

    Returns:
        The truncated series with determinacy flags, ``h`` and residuals.
    """
    n = g0.dimension
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    if order > n and (n % 2 == 0 or strict):
        raise IndeterminacyError(
            f"Order {order} exceeds n={n}: g({n}) has an undetermined trace-free part"
            + (" and a log term" if n % 2 == 0 else "")
        )
    if order >= 2 * n:
        raise IndeterminacyError(f"The trace equation degenerates at order {2 * n} for n={n}")

    grid = grid or g0.quadrature_grid(nodes)
    x = grid.points
    size = grid.size
    metric0 = g0.metric(x)
    inverse_metric(metric0)

    coefficients = np.zeros((order + 1, size, n, n))
    d_coefficients = np.zeros((order + 1, size, n, n, n))
    dd_coefficients = np.zeros((order + 1, size, n, n, n, n))
    coefficients[0] = metric0
    d_coefficients[0] = g0.d_metric(x)
    dd_coefficients[0] = g0.dd_metric(x)
    flags = [DETERMINED]
    h = None
    incompatibility = None

    for nu in range(1, order + 1):
        rhs = einstein_residual_series(
            coefficients[: nu + 1], d_coefficients[: nu + 1], dd_coefficients[: nu + 1]
        ).c[nu - 1]
        g0_inv = np.linalg.inv(metric0)
        trace_rhs = np.einsum("nij,nij->n", g0_inv, rhs)
        if nu == n:
            trace_x = trace_rhs / n**2
            trace_free = rhs - (trace_rhs / n)[:, None, None] * metric0
            x_nu = (trace_x / n)[:, None, None] * metric0
            if n % 2 == 0:
                h = -trace_free / n
                flags.append(TRACE_ONLY)
                logger.info(f"Obstruction at order {n}: max |h| = {np.abs(h).max():.3e}")
            else:
                incompatibility = float(np.abs(trace_free).max())
                flags.append(FREE)
                logger.info(f"Order {n} trace-free part left free (incompatibility {incompatibility:.3e})")
        else:
            target = -rhs / nu
            trace_x = np.einsum("nij,nij->n", g0_inv, target) / (nu - 2 * n)
            x_nu = (target + trace_x[:, None, None] * metric0) / (nu - n)
            flags.append(DETERMINED)
        x_nu = 0.5 * (x_nu + np.swapaxes(x_nu, 1, 2))
        coefficients[nu] = x_nu
        d_coefficients[nu] = grid.gradient(x_nu)
        dd_coefficients[nu] = grid.hessian(x_nu)
        logger.debug(f"Order {nu}: max |g({nu})| = {np.abs(x_nu).max():.3e}")

    residual_series = einstein_residual_series(coefficients, d_coefficients, dd_coefficients)
    residual = []
    for k in range(order):
        block = residual_series.c[k]
        if h is not None and k == n - 1:
            block = block + n * h
        residual.append(float(np.abs(block).max()))
    logger.info(f"FG expansion of {g0.describe()} to order {order}: residual {max(residual, default=0.0):.3e}")

    return PowerSeriesMetric(
        dimension=n,
        order=order,
        family=g0,
        grid=grid,
        coefficients=coefficients,
        d_coefficients=d_coefficients,
        dd_coefficients=dd_coefficients,
        log_coefficient=h,
        flags=flags,
        residual=residual,
        incompatibility=incompatibility,
    )
