import logging
import math
from typing import Optional, Tuple

from common.errors import DimensionUnsupportedError
from fg_expansion.recursion import fg_expand
from fg_expansion.volume_series import volume_series
from manifold.curvature import curvature_pack
from manifold.invariants import conformal_invariants_6d
from manifold.metric_families import MetricFamily
from manifold.tensors import full_contraction

logger = logging.getLogger(__name__)


def L_identity_sides(g: MetricFamily, n: Optional[int] = None, nodes: Optional[int] = None) -> Tuple[float, float]:
    """``(int_M v(n) dv_g, identity value)`` for ``n`` in ``{2, 4, 6}``.

    ``n = 2``: ``-pi chi``; ``n = 4``: ``pi^2 chi / 2 - int |W|^2 / 64``;
    ``n = 6``: ``-pi^3 chi / 6 + int J / 2304``.
    """
    n = n or g.dimension
    if n not in (2, 4, 6) or n != g.dimension:
        raise DimensionUnsupportedError(f"L identities are available for n in (2, 4, 6), got n={n}")
    grid = g.quadrature_grid(nodes)
    ps = fg_expand(g, n, grid=grid)
    direct = float(grid.integrate(volume_series(ps, closed_forms=False).v(n)))

    chi = g.euler_characteristic
    if n == 2:
        identity = -math.pi * chi
    elif n == 4:
        pack = curvature_pack(g, grid.points, with_bach=False)
        weyl = pack.require("weyl")
        weyl_norm = float(grid.integrate(full_contraction(weyl, weyl, pack.inverse_metric)))
        identity = 0.5 * math.pi**2 * chi - weyl_norm / 64.0
    else:
        j_integral = float(grid.integrate(conformal_invariants_6d(g, grid.points).j_scalar))
        identity = -(math.pi**3) / 6.0 * chi + j_integral / 2304.0
    logger.info(f"L identity on {g.describe()}: direct={direct:.12g}, identity={identity:.12g}")
    return direct, identity
