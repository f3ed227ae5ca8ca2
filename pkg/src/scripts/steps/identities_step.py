import logging
from typing import List

from manifold.invariants import gauss_bonnet_sides
from manifold.metric_families import FlatTorus, RoundSphere
from scripts.report import ReportRow
from scripts.run_config import RunConfig
from volume_renorm.identities import L_identity_sides

logger = logging.getLogger(__name__)


def run_identities(config: RunConfig) -> List[ReportRow]:
    """``int v(n)`` against its curvature identity; Gauss-Bonnet as well for ``n = 4``."""
    g = FlatTorus(config.n) if config.model_name == "torus" else RoundSphere(config.n, 0.5)
    direct, identity = L_identity_sides(g, nodes=config.grid)
    rows = [ReportRow(quantity="L", value=direct, crosscheck=identity, tol=config.tol)]
    if config.n == 4:
        lhs, rhs = gauss_bonnet_sides(g, nodes=config.grid)
        rows.append(ReportRow(quantity="gauss_bonnet", value=rhs, crosscheck=lhs, tol=config.tol))
    return rows
