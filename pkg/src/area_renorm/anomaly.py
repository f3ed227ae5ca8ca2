import logging
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from area_renorm.minimal_graphs import MinimalGraph
from area_renorm.renormalized_area import area_epsilons, area_gauge_comparison
from area_renorm.submanifold import Embedding, SubmanifoldPatch, submanifold_geometry
from common.errors import DimensionUnsupportedError, DomainError
from gauge.normal_form import HyperbolicNormalForm
from gauge.special_defining import solve_special_defining
from manifold.conformal_factor import TrigConformalFactor
from manifold.fields import ScalarField
from manifold.metric_families import MetricFamily, RoundSphere, require_zonal
from volume_renorm.anomaly import Upsilon

logger = logging.getLogger(__name__)


class AreaAnomalyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    upsilon: str
    area_g: Optional[float] = None
    area_hat: Optional[float] = None
    anomaly_integral: float
    discrepancy: Optional[float] = None
    """``|(A_hat - A_g) - anomaly|`` when the gauge route ran."""


def _upsilon_at(upsilon: Upsilon, points: np.ndarray):
    """Value and chart gradient of ``Upsilon`` at off-grid points."""
    if isinstance(upsilon, TrigConformalFactor):
        return upsilon.value(points), upsilon.gradient(points)
    grid = upsilon.grid
    values = grid.check(upsilon.values)
    return grid.interpolate(values, points), grid.interpolate(grid.gradient(values), points)


def anomaly_density(patch: SubmanifoldPatch, g: MetricFamily, upsilon: Upsilon) -> np.ndarray:
    """``Q_N(Upsilon) = -(|H|^2 + 4 tr P) Upsilon / 8 + (H^c Upsilon_c - |d Upsilon|^2) / 4``."""
    if patch.dimension != 2:
        raise DimensionUnsupportedError(f"The surface anomaly density needs k=2, got k={patch.dimension}")
    value, gradient = _upsilon_at(upsilon, patch.points)
    g_inv = np.linalg.inv(g.metric(patch.points))
    grad2 = np.einsum("nij,ni,nj->n", g_inv, gradient, gradient)
    normal_part = np.einsum("nci,ni->nc", patch.normal_frame, gradient)
    mean_pairing = np.einsum("nc,nc->n", patch.mean_curvature, normal_part)
    return (
        -0.125 * (patch.mean_curvature_norm2 + 4.0 * patch.schouten_trace) * value
        + 0.25 * (mean_pairing - grad2)
    )


def area_anomaly(
    boundary: Union[np.ndarray, Embedding],
    upsilon: Upsilon,
    k: int,
    g: Optional[MetricFamily] = None,
) -> float:
    """``A_hat - A_g`` from local boundary data.

    ``k = 0``: ``boundary`` holds the chart points of ``N`` and the anomaly is
    ``sum_p Upsilon(p)``. ``k = 2``: ``boundary`` is an embedding and the anomaly is
    ``int_N Q_N(Upsilon) da_N`` in the metric ``g`` (default ``round / 4``).
    """
    if k == 0:
        points = np.atleast_2d(np.asarray(boundary, dtype=float))
        value = float(np.sum(_upsilon_at(upsilon, points)[0]))
    elif k == 2:
        if not isinstance(boundary, Embedding):
            raise DomainError("The k=2 anomaly needs an embedding of N")
        g = g or RoundSphere(boundary.ambient_dimension, 0.5)
        patch = submanifold_geometry(boundary, g)
        value = patch.integrate(anomaly_density(patch, g, upsilon))
    else:
        raise DimensionUnsupportedError(f"The area anomaly is available for k=0 and k=2, got k={k}")
    logger.info(f"Area anomaly (k={k}): {value:.12g}")
    return value


def area_anomaly_report(
    graph: MinimalGraph,
    upsilon: TrigConformalFactor,
    nodes: Optional[int] = None,
    epsilons: Optional[np.ndarray] = None,
    gauge_route: bool = True,
) -> AreaAnomalyReport:
    """Local anomaly of ``graph`` and, when available, ``A_hat - A_g`` through the gauge change."""
    if graph.k == 0:
        integral = area_anomaly(graph.boundary_points(), upsilon, 0)
    else:
        integral = area_anomaly(graph.boundary_embedding(), upsilon, graph.k)

    area_g = area_hat = discrepancy = None
    if gauge_route:
        require_zonal(RoundSphere(graph.n, 0.5), upsilon)
        nf = HyperbolicNormalForm(graph.n, nodes)
        field = ScalarField(values=upsilon.value(nf.grid.points), grid=nf.grid)
        omega = solve_special_defining(nf, field)
        epsilons = area_epsilons(graph) if epsilons is None else epsilons
        comparison = area_gauge_comparison(graph, omega, epsilons)
        area_g = comparison.base_area
        area_hat = comparison.base_area + comparison.area_change
        discrepancy = abs(comparison.area_change - integral)
    logger.info(f"Area anomaly of {graph.describe()}: integral={integral:.10g}, discrepancy={discrepancy}")
    return AreaAnomalyReport(
        k=graph.k,
        upsilon=upsilon.describe(),
        area_g=area_g,
        area_hat=area_hat,
        anomaly_integral=integral,
        discrepancy=discrepancy,
    )
