import logging
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from area_renorm.minimal_graphs import GeodesicArc, MinimalGraph, TotallyGeodesic
from area_renorm.submanifold import k2_log_coefficient, submanifold_geometry
from common.errors import DomainError
from config import settings
from gauge.special_defining import OmegaField, change_of_gauge, epsilon_hat_along
from manifold.metric_families import RoundSphere
from volume_renorm.fitting import EpsilonFit, epsilon_grid, fit_expansion
from volume_renorm.radial import integrate_between

logger = logging.getLogger(__name__)

AreaFit = EpsilonFit
"""Area expansions share the cutoff-fit record; ``leading`` is ``k``, the log coefficient is ``K``."""


def area_epsilons(graph: MinimalGraph) -> np.ndarray:
    """Default cutoffs, kept below half the top of ``Y``."""
    return epsilon_grid(hi=min(settings.EPSILON_HI, 0.5 * graph.r_top))


def _curvature_route(graph: MinimalGraph) -> Optional[float]:
    embedding = graph.boundary_embedding()
    if graph.k != 2 or embedding is None:
        return None
    return k2_log_coefficient(submanifold_geometry(embedding, RoundSphere(graph.n, 0.5)))


def renormalized_area(
    graph: MinimalGraph, k: Optional[int] = None, epsilons: Optional[np.ndarray] = None
) -> AreaFit:
    """Fit ``Area(Y ∩ {r > eps}) = b_0 eps^{-k} + ... (+ K log 1/eps) + A + o(1)``.

    Cross-checks: closed forms of ``A``/``K``, ``int_N a^{(k)} da_N`` from the area
    density, ``Area(N)/k`` and, for surfaces, the curvature integral for ``K``.
    """
    k = graph.k if k is None else k
    if k != graph.k:
        raise DomainError(f"{graph.describe()} has k={graph.k}, got k={k}")
    epsilons = area_epsilons(graph) if epsilons is None else np.asarray(epsilons, dtype=float)
    if np.any(epsilons <= 0.0) or np.any(epsilons >= graph.r_top):
        raise DomainError(f"Cutoffs must lie in (0, {graph.r_top:g}) for {graph.describe()}")

    values = graph.area_profile(epsilons)
    fit = fit_expansion(epsilons, values, leading=k, log_term=(k % 2 == 0), tail=graph.tail())

    crosschecks: Dict[str, float] = {f"{key}_closed": value for key, value in graph.closed_form().items()}
    density = graph.log_density_integral()
    if density is not None:
        crosschecks["K_density"] = density
    leading = graph.leading_coefficient()
    if leading is not None:
        crosschecks["b0_expected"] = leading
    formula = _curvature_route(graph)
    if formula is not None:
        crosschecks["K_formula"] = formula
    exact = graph.exact_profile(epsilons)
    if exact is not None:
        crosschecks["profile_error"] = float(np.abs(exact - values).max())
    logger.info(f"Renormalized area of {graph.describe()}: constant={fit.constant:.12g}, log={fit.log_coefficient}")
    return fit.model_copy(update={"crosschecks": crosschecks})


def _arc_difference(graph: GeodesicArc, omega: OmegaField, epsilons: np.ndarray) -> np.ndarray:
    total = np.zeros_like(epsilons)
    for path, limit in graph.branches():
        shifted = epsilon_hat_along(omega, path, epsilons, limit=limit)
        total += graph.branch_length(epsilons) - graph.branch_length(shifted)
    return total


def _totally_geodesic_difference(graph: TotallyGeodesic, omega: OmegaField, epsilons: np.ndarray) -> np.ndarray:
    k = graph.k
    if k == 0:
        points = graph.boundary_points()
    else:
        points = graph.boundary_embedding().points()
    change = change_of_gauge(omega, points)
    weights = graph.boundary_weights()
    out = []
    for eps in epsilons:
        shifted = change.epsilon_hat(eps)
        if k == 0:
            out.append(float(np.log(shifted / eps) @ weights))
            continue
        inner = integrate_between(
            lambda r: r ** (-k - 1) * (1.0 - r**2) ** k, np.full(shifted.shape, eps), shifted
        )
        out.append(float(inner @ weights))
    return np.asarray(out)


def area_gauge_difference(graph: MinimalGraph, omega: OmegaField, epsilons: np.ndarray) -> np.ndarray:
    """``Area(Y ∩ {r > eps}) - Area(Y ∩ {r_hat > eps})`` for ``r_hat = r e^omega``."""
    epsilons = np.asarray(epsilons, dtype=float)
    if isinstance(graph, GeodesicArc):
        return _arc_difference(graph, omega, epsilons)
    if isinstance(graph, TotallyGeodesic):
        return _totally_geodesic_difference(graph, omega, epsilons)
    raise DomainError(f"Gauge-changed areas are available for geodesics and totally geodesic planes, not {graph.tag}")


class AreaGaugeComparison(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    k: int
    base_area: float
    base_log: Optional[float]
    area_change: float
    """``A_hat - A``."""

    log_change: Optional[float]
    difference: EpsilonFit


def area_gauge_comparison(
    graph: MinimalGraph, omega: OmegaField, epsilons: Optional[np.ndarray] = None
) -> AreaGaugeComparison:
    """``A`` and ``K`` before and after the change of representative encoded by ``omega``."""
    k = graph.k
    epsilons = area_epsilons(graph) if epsilons is None else np.asarray(epsilons, dtype=float)
    difference = area_gauge_difference(graph, omega, epsilons)
    fit = fit_expansion(
        epsilons, difference, leading=k, log_term=(k % 2 == 0), tail=list(range(1, settings.TAIL_TERMS + 1))
    )
    base = renormalized_area(graph, epsilons=epsilons)
    log_change = None if fit.log_coefficient is None else -fit.log_coefficient
    logger.info(f"Gauge change on {graph.describe()}: dA={-fit.constant:.3e}, dK={log_change}")
    return AreaGaugeComparison(
        k=k,
        base_area=base.constant,
        base_log=base.log_coefficient,
        area_change=-fit.constant,
        log_change=log_change,
        difference=fit,
    )
