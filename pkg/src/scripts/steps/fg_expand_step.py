import logging
from typing import List

import numpy as np

from config import settings
from fg_expansion.recursion import fg_expand
from manifold.curvature import curvature_pack
from manifold.metric_families import ConformalRescaling, FlatTorus, MetricFamily, RoundSphere
from scripts.report import ReportRow
from scripts.run_config import RunConfig
from scripts.steps.options import upsilon_from

logger = logging.getLogger(__name__)


def _family(config: RunConfig) -> MetricFamily:
    name = config.model_name
    if name == "torus":
        return FlatTorus(config.n)
    sphere = RoundSphere(config.n, 0.5)
    if name == "conformal":
        return ConformalRescaling(sphere, upsilon_from(config))
    return sphere


def run_fg_expand(config: RunConfig) -> List[ReportRow]:
    """Expand ``g_r`` and check the Einstein residual, ``g(2) = -P`` and known closed forms."""
    family = _family(config)
    n = family.dimension
    order = config.order if config.order is not None else n
    ps = fg_expand(family, order, nodes=config.grid)
    rows = [ReportRow(quantity="einstein_residual", value=max(ps.residual, default=0.0), crosscheck=0.0, tol=config.tol)]

    if n >= 3 and order >= 2:
        schouten = curvature_pack(family, ps.grid.points, with_bach=False).require("schouten")
        rows.append(
            ReportRow(
                quantity="g2_plus_schouten",
                value=float(np.abs(ps.coefficient(2) + schouten).max()),
                crosscheck=0.0,
                tol=config.tol,
            )
        )
    odd = [j for j in range(1, min(order, n - 1) + 1, 2)]
    if odd:
        rows.append(
            ReportRow(
                quantity="odd_below_n",
                value=max(float(np.abs(ps.coefficient(j)).max()) for j in odd),
                crosscheck=0.0,
                tol=config.tol,
            )
        )
    if config.model_name == "sphere":
        expected = {0: 1.0, 2: -2.0, 4: 1.0}
        metric0 = ps.coefficient(0)
        error = max(
            float(np.abs(ps.coefficient(j) - expected.get(j, 0.0) * metric0).max()) for j in range(order + 1)
        )
        tol = min(config.tol, settings.CLOSED_FORM_TOLERANCE)
        rows.append(ReportRow(quantity="closed_form_error", value=error, crosscheck=0.0, tol=tol))
    if ps.log_coefficient is not None and config.model_name in ("sphere", "torus"):
        rows.append(
            ReportRow(
                quantity="obstruction_norm",
                value=float(np.abs(ps.log_coefficient).max()),
                crosscheck=0.0,
                tol=config.tol,
            )
        )
    logger.info(f"fg-expand on {family.describe()} to order {order}: flags {ps.flags}")
    return rows
