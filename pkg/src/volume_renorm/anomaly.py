import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.errors import DimensionUnsupportedError
from gauge.normal_form import HyperbolicNormalForm, NormalForm
from gauge.special_defining import solve_special_defining
from manifold.conformal_factor import TrigConformalFactor
from manifold.curvature import CurvatureEvaluator, curvature_pack
from manifold.fields import ScalarField
from manifold.metric_families import MetricFamily, RoundSphere, require_zonal
from manifold.quadrature import QuadratureGrid
from manifold.tensors import full_contraction
from volume_renorm.renormalized_volume import gauge_comparison, subtraction_route

logger = logging.getLogger(__name__)

Upsilon = Union[TrigConformalFactor, ScalarField]


class AnomalyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    dimension: int
    upsilon: str
    volume_g: Optional[float] = None
    volume_hat: Optional[float] = None
    anomaly_integral: float
    discrepancy: Optional[float] = None
    """``|(V_hat - V_g) - int P_g(Upsilon) dv_g|`` when both routes ran."""


def _upsilon_jets(upsilon: Upsilon, grid: QuadratureGrid) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(upsilon, TrigConformalFactor):
        x = grid.points
        return upsilon.value(x), upsilon.gradient(x), upsilon.hessian(x)
    values = grid.check(upsilon.values)
    return values, grid.gradient(values), grid.hessian(values)


def _describe(upsilon: Upsilon) -> str:
    if isinstance(upsilon, TrigConformalFactor):
        return upsilon.describe()
    return "sampled field"


def anomaly_density(g: MetricFamily, upsilon: Upsilon, grid: QuadratureGrid) -> np.ndarray:
    """``P_g(Upsilon)`` at the grid points for ``n = 2`` or ``n = 4``."""
    n = g.dimension
    if n not in (2, 4):
        raise DimensionUnsupportedError(f"The volume anomaly operator is available for n=2 and n=4, got n={n}")
    value, du, ddu = _upsilon_jets(upsilon, grid)
    pack = curvature_pack(g, grid.points, with_bach=False)
    g_inv = pack.inverse_metric
    du_up = np.einsum("nij,nj->ni", g_inv, du)
    grad2 = np.einsum("ni,ni->n", du, du_up)
    if n == 2:
        return -0.25 * (pack.scalar * value + grad2)

    p = pack.require("schouten")
    trace = pack.schouten_trace
    v4 = 0.125 * (trace**2 - full_contraction(p, p, g_inv))
    gamma = CurvatureEvaluator(g).gamma(grid.points)
    hessian = ddu - np.einsum("nkij,nk->nij", gamma, du)
    return (
        v4 * value
        + np.einsum("nij,ni,nj->n", hessian, du_up, du_up)
        - np.einsum("nij,ni,nj->n", p, du_up, du_up)
        - 0.25 * grad2**2
        + trace * grad2
    )


def volume_anomaly(
    g: MetricFamily,
    upsilon: Upsilon,
    n: Optional[int] = None,
    nodes: Optional[int] = None,
    epsilons: Optional[np.ndarray] = None,
    gauge_route: bool = True,
) -> AnomalyReport:
    """``int_M P_g(Upsilon) dv_g`` and, for the hyperbolic boundary, ``V_hat - V_g`` via a gauge change."""
    n = n or g.dimension
    if n != g.dimension:
        raise DimensionUnsupportedError(f"n={n} does not match the family dimension {g.dimension}")
    require_zonal(g, upsilon)
    grid = g.quadrature_grid(nodes)
    integral = float(grid.integrate(anomaly_density(g, upsilon, grid)))

    volume_g = volume_hat = discrepancy = None
    if gauge_route and isinstance(g, RoundSphere) and g.radius == 0.5:
        nf = HyperbolicNormalForm(n, nodes)
        field = ScalarField(values=_upsilon_jets(upsilon, nf.grid)[0], grid=nf.grid)
        comparison = gauge_comparison(nf, solve_special_defining(nf, field), epsilons)
        volume_g, volume_hat = comparison.base_volume, comparison.shifted_volume
        discrepancy = abs(comparison.volume_change - integral)
    logger.info(f"Volume anomaly n={n}, Upsilon={_describe(upsilon)}: integral={integral:.10g}, discrepancy={discrepancy}")
    return AnomalyReport(
        dimension=n,
        upsilon=_describe(upsilon),
        volume_g=volume_g,
        volume_hat=volume_hat,
        anomaly_integral=integral,
        discrepancy=discrepancy,
    )


def constant_rescale_slope(
    nf: NormalForm,
    taus: Sequence[float] = (-1e-2, -5e-3, 5e-3, 1e-2),
    epsilons: Optional[np.ndarray] = None,
) -> Tuple[float, float]:
    """Slope of ``V_hat - V`` in ``tau`` for ``Upsilon = tau``, and ``int_M v(n) dv`` it should equal."""
    changes = []
    for tau in taus:
        field = ScalarField(values=np.full(nf.grid.size, tau), grid=nf.grid)
        changes.append(gauge_comparison(nf, solve_special_defining(nf, field), epsilons).volume_change)
    slope = float(np.polyfit(np.asarray(taus), np.asarray(changes), 1)[0])
    _, expected = subtraction_route(nf)
    logger.info(f"Constant rescale slope {slope:.10g}, expected {expected:.10g}")
    return slope, expected
