import logging
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.errors import DimensionUnsupportedError
from manifold.curvature import CurvatureEvaluator, in_chunks
from manifold.metric_families import MetricFamily
from manifold.tensors import full_contraction, raise_all

logger = logging.getLogger(__name__)


class ConformalInvariants(BaseModel):
    """The tensors ``C, V, U`` and the scalars ``I, J`` at ``N`` points."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cotton: np.ndarray
    v_tensor: np.ndarray
    u_tensor: np.ndarray
    i_scalar: np.ndarray
    j_scalar: np.ndarray


def _invariants_block(evaluator: CurvatureEvaluator, x: np.ndarray) -> np.ndarray:
    local = evaluator.local(x)
    g, g_inv = local["metric"], local["inverse_metric"]
    p, w = local["schouten"], local["weyl"]
    c = evaluator.cotton(x)
    dw = evaluator.nabla_weyl(x)
    dc = evaluator.nabla_cotton(x)

    v = (
        dw
        + np.einsum("nim,njkl->nijklm", g, c)
        - np.einsum("njm,nikl->nijklm", g, c)
        + np.einsum("nkm,nlij->nijklm", g, c)
        - np.einsum("nlm,nkij->nijklm", g, c)
    )
    p_mixed = np.einsum("nia,nam->nim", p, g_inv)
    u = np.einsum("njkli->nijkl", dc) - np.einsum("nim,nmjkl->nijkl", p_mixed, w)

    i_scalar = (
        full_contraction(v, v, g_inv)
        - 16.0 * full_contraction(w, u, g_inv)
        + 16.0 * full_contraction(c, c, g_inv)
    )
    w_up = raise_all(w, g_inv)
    w_first_pair_up = np.einsum("nia,njb,nabpq->nijpq", g_inv, g_inv, w, optimize=True)
    pair = np.einsum("nijkl,nijpq->nklpq", w, w_first_pair_up)
    cubic_pairs = np.einsum("nklpq,nklpq->n", pair, w_up)
    w_alternate_up = np.einsum("nja,nlb,napbq->njplq", g_inv, g_inv, w, optimize=True)
    cubic_cross = np.einsum("nijkl,nipkq,njplq->n", w, w_up, w_alternate_up, optimize=True)
    j_scalar = -3.0 * i_scalar + 7.0 * cubic_pairs + 4.0 * cubic_cross

    count = x.shape[0]
    return np.concatenate(
        [
            c.reshape(count, -1),
            v.reshape(count, -1),
            u.reshape(count, -1),
            i_scalar[:, None],
            j_scalar[:, None],
        ],
        axis=1,
    )


def conformal_invariants_6d(family: MetricFamily, x: np.ndarray) -> ConformalInvariants:
    """``C_ijk``, ``V_ijklm``, ``U_ijkl`` and the scalars ``I`` and ``J``.

    ``J = -3I + 7 W_ijkl W^ij_pq W^klpq + 4 W_ijkl W^ipkq W^j_p^l_q``.
    """
    n = family.dimension
    if n < 3:
        raise DimensionUnsupportedError(f"Conformal invariants require n >= 3, got n={n}")
    if n != 6:
        logger.info(f"J is evaluated at n={n}; its conformal invariance is specific to n=6")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    evaluator = CurvatureEvaluator(family)
    flat = in_chunks(lambda pts: _invariants_block(evaluator, pts), x, multiplicity=16 * n * n)

    count, offset, parts = x.shape[0], 0, []
    for rank in (3, 5, 4):
        size = n**rank
        parts.append(flat[:, offset : offset + size].reshape((count,) + (n,) * rank))
        offset += size
    return ConformalInvariants(
        cotton=parts[0],
        v_tensor=parts[1],
        u_tensor=parts[2],
        i_scalar=flat[:, offset],
        j_scalar=flat[:, offset + 1],
    )


def gauss_bonnet_integrand(family: MetricFamily, x: np.ndarray) -> np.ndarray:
    """``|W|^2 - 8 P_ij P^ij + 8 (P_i^i)^2``."""
    evaluator = CurvatureEvaluator(family)

    def block(pts: np.ndarray) -> np.ndarray:
        local = evaluator.local(pts)
        g_inv, p, w = local["inverse_metric"], local["schouten"], local["weyl"]
        trace = np.einsum("nij,nij->n", g_inv, p)
        return (
            full_contraction(w, w, g_inv)
            - 8.0 * full_contraction(p, p, g_inv)
            + 8.0 * trace**2
        )

    return in_chunks(block, x)


def gauss_bonnet_sides(family: MetricFamily, nodes: Optional[int] = None) -> Tuple[float, float]:
    """``(32 pi^2 chi(M), int_M [|W|^2 - 8|P|^2 + 8 (tr P)^2] dv_g)`` for ``n = 4``."""
    if family.dimension != 4:
        raise DimensionUnsupportedError(
            f"The Gauss-Bonnet identity is implemented for n=4, got n={family.dimension}"
        )
    grid = family.quadrature_grid(nodes)
    rhs = float(grid.integrate(gauss_bonnet_integrand(family, grid.points)))
    lhs = 32.0 * np.pi**2 * family.euler_characteristic
    logger.info(f"Gauss-Bonnet on {family.describe()}: lhs={lhs:.12g}, rhs={rhs:.12g}")
    return lhs, rhs
