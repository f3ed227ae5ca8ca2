import logging
import math
from typing import List

import numpy as np

from area_renorm.equivariant import LATITUDE, TORUS, RotationalBoundary, equivariant_minimal_graph
from area_renorm.minimal_graphs import MinimalGraph, geodesic_between, totally_geodesic
from area_renorm.renormalized_area import renormalized_area
from scripts.report import ReportRow
from scripts.run_config import RunConfig
from scripts.steps.options import epsilons_from

logger = logging.getLogger(__name__)


def arc_endpoints(n: int, angle: float):
    p = np.zeros(n + 1)
    q = np.zeros(n + 1)
    p[0] = 1.0
    q[0], q[1] = math.cos(angle), math.sin(angle)
    return p, q


def build_graph(config: RunConfig) -> MinimalGraph:
    name = config.model_name
    if name == "geodesic":
        return geodesic_between(*arc_endpoints(config.n, config.angle or math.pi))
    if name == "latitude":
        return equivariant_minimal_graph(RotationalBoundary(kind=LATITUDE, angle=config.angle or 1.0), config.n)
    if name == "torus":
        return equivariant_minimal_graph(RotationalBoundary(kind=TORUS, angle=config.angle or 0.25 * math.pi), config.n)
    k = config.k if config.k is not None else config.n - 1
    return totally_geodesic(k, config.n, config.grid)


def run_renorm_area(config: RunConfig) -> List[ReportRow]:
    """Renormalized area ``A`` and log coefficient ``K`` with every available cross-check."""
    graph = build_graph(config)
    fit = renormalized_area(graph, epsilons=epsilons_from(config))
    checks = fit.crosschecks
    rows: List[ReportRow] = []
    if "b0_expected" in checks:
        rows.append(ReportRow(quantity="b0", value=fit.divergent(0), crosscheck=checks["b0_expected"], tol=config.tol))
    if graph.k % 2 == 0:
        log = fit.log_coefficient
        for key in ("K_closed", "K_density", "K_formula"):
            if key in checks:
                rows.append(ReportRow(quantity=f"K ({key})", value=log, crosscheck=checks[key], tol=config.tol))
        if not any(key in checks for key in ("K_closed", "K_density", "K_formula")):
            rows.append(ReportRow(quantity="K", value=log, tol=config.tol))
    if "A_closed" in checks:
        rows.append(ReportRow(quantity="A", value=fit.constant, crosscheck=checks["A_closed"], tol=config.tol))
    else:
        rows.append(ReportRow(quantity="A", value=fit.constant, tol=config.tol))
    rows.append(ReportRow(quantity="boundary_orthogonality", value=graph.boundary_orthogonality(), crosscheck=0.0, tol=config.tol))
    rows.append(ReportRow(quantity="fit_condition", value=fit.condition, tol=config.tol))
    return rows
