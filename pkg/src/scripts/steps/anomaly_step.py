import logging
import math
from typing import List

from area_renorm.anomaly import area_anomaly_report
from area_renorm.minimal_graphs import geodesic_between, totally_geodesic
from common.errors import DimensionUnsupportedError
from manifold.metric_families import FlatTorus, RoundSphere
from scripts.report import ReportRow
from scripts.run_config import RunConfig
from scripts.steps.area_step import arc_endpoints
from scripts.steps.options import epsilons_from, upsilon_from
from volume_renorm.anomaly import volume_anomaly

logger = logging.getLogger(__name__)


def run_anomaly(config: RunConfig) -> List[ReportRow]:
    """Anomaly integral against the gauge-change route.

    Without ``k`` (given or implied by the model) this is the volume anomaly of the
    boundary; ``k = 0`` uses a geodesic (``--angle`` between the endpoints) and
    ``k = 2`` the equatorial ``S^2``.
    """
    upsilon = upsilon_from(config)
    epsilons = epsilons_from(config)
    k = config.anomaly_k
    if k is None:
        g = FlatTorus(config.n) if config.model_name == "torus" else RoundSphere(config.n, 0.5)
        report = volume_anomaly(g, upsilon, nodes=config.grid, epsilons=epsilons)
        change = None if report.volume_hat is None else report.volume_hat - report.volume_g
        return [ReportRow(quantity="volume_anomaly", value=report.anomaly_integral, crosscheck=change, tol=config.tol)]

    if k == 0:
        graph = geodesic_between(*arc_endpoints(config.n, config.angle or 0.5 * math.pi))
    elif k == 2:
        graph = totally_geodesic(2, config.n, config.grid)
    else:
        raise DimensionUnsupportedError(f"The area anomaly is available for k=0 and k=2, got k={k}")
    report = area_anomaly_report(graph, upsilon, nodes=config.grid, epsilons=epsilons)
    change = None if report.area_hat is None else report.area_hat - report.area_g
    return [ReportRow(quantity="area_anomaly", value=report.anomaly_integral, crosscheck=change, tol=config.tol)]
