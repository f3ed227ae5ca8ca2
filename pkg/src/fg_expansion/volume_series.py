import logging
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.errors import InsufficientOrderError
from fg_expansion.power_series import sqrt_det_ratio
from fg_expansion.recursion import PowerSeriesMetric
from manifold.curvature import curvature_pack
from manifold.tensors import full_contraction, raise_all

logger = logging.getLogger(__name__)


class VolumeSeries(BaseModel):
    """Coefficients ``v(j)`` of ``(det g_r / det g_0)^{1/2} = 1 + v(2) r^2 + ...``."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dimension: int
    order: int

    taylor: np.ndarray
    """All coefficients ``v(0..order)`` at the grid points, shape ``(order + 1, N)``."""

    closed_forms: Dict[int, np.ndarray] = {}
    discrepancy: Dict[int, float] = {}

    def v(self, j: int) -> np.ndarray:
        if j > self.order:
            raise InsufficientOrderError(
                f"v({j}) needs the metric expansion through order {j}, have {self.order}"
            )
        return self.taylor[j]


def closed_form_coefficients(ps: PowerSeriesMetric, order: int) -> Dict[int, np.ndarray]:
    """``v(2)``, ``v(4)`` and (for ``n = 6``) ``v(6)`` from curvature of the boundary metric."""
    n = ps.dimension
    out: Dict[int, np.ndarray] = {}
    if n < 2 or order < 2:
        return out
    pack = curvature_pack(ps.family, ps.grid.points, with_bach=(n == 6 and order >= 6))
    if n == 2:
        out[2] = -0.25 * pack.scalar
        return out
    g_inv = pack.inverse_metric
    p = pack.require("schouten")
    trace = pack.schouten_trace
    norm2 = full_contraction(p, p, g_inv)
    out[2] = -0.5 * trace
    if n >= 4 and order >= 4:
        out[4] = 0.125 * (trace**2 - norm2)
    if n == 6 and order >= 6:
        p_up = raise_all(p, g_inv)
        p_mixed = np.einsum("nia,nak->nik", g_inv, p)
        cubic = np.einsum("nij,nik,njk->n", p, p_mixed, p_up)
        out[6] = (
            -np.einsum("nij,nij->n", p_up, pack.require("bach"))
            + 3.0 * trace * norm2
            - 2.0 * cubic
            - trace**3
        ) / 48.0
    return out


def volume_series(ps: PowerSeriesMetric, order: Optional[int] = None, closed_forms: bool = True) -> VolumeSeries:
    """Volume-density coefficients by the square-root-determinant series.

    For ``n`` in ``{2, 4, 6}`` the curvature closed forms are evaluated too and
    their largest pointwise discrepancy is reported.
    """
    order = ps.order if order is None else order
    if order > ps.order:
        raise InsufficientOrderError(
            f"v({order}) requested but the metric series stops at order {ps.order}"
        )
    taylor = sqrt_det_ratio(ps.series().truncate(order)).c
    forms: Dict[int, np.ndarray] = {}
    discrepancy: Dict[int, float] = {}
    if closed_forms and ps.dimension in (2, 4, 6):
        forms = closed_form_coefficients(ps, order)
        for j, value in forms.items():
            discrepancy[j] = float(np.abs(taylor[j] - value).max())
        if discrepancy:
            logger.info(f"Volume coefficients route discrepancy: {discrepancy}")
    return VolumeSeries(
        dimension=ps.dimension,
        order=order,
        taylor=taylor,
        closed_forms=forms,
        discrepancy=discrepancy,
    )
