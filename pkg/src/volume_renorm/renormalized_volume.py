import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import comb, gamma

from config import settings
from gauge.normal_form import HyperbolicNormalForm, NormalForm
from gauge.special_defining import OmegaField, change_of_gauge
from volume_renorm.fitting import EpsilonFit, epsilon_grid, fit_expansion, parity_tail
from volume_renorm.profile import gauge_volume_difference, volume_integrand, volume_profile
from volume_renorm.radial import integrate_radial

logger = logging.getLogger(__name__)

SUBTRACTION_EXTRA_TERMS = 12


def hyperbolic_reference(n: int) -> float:
    """``V`` of ``H^{n+1}`` for odd ``n``, ``L`` for even ``n = 2m``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n % 2 == 1:
        return (-1.0) ** ((n + 1) // 2) * math.pi ** ((n + 2) / 2) / gamma((n + 2) / 2)
    m = n // 2
    return (-1.0) ** m * 2.0 * math.pi**m / math.factorial(m)


def hyperbolic_profile(n: int, eps) -> np.ndarray:
    """Exact ``2^{-n} Area(S^n) int_eps^1 r^{-n-1} (1 - r^2)^n dr``."""
    eps = np.asarray(eps, dtype=float)
    area = 2.0 * math.pi ** ((n + 1) / 2) / gamma((n + 1) / 2)
    total = np.zeros_like(eps)
    for i in range(n + 1):
        power = 2 * i - n
        term = -np.log(eps) if power == 0 else (1.0 - eps**power) / power
        total = total + (-1.0) ** i * comb(n, i, exact=True) * term
    return 2.0**-n * area * total


def default_epsilons(nf: NormalForm) -> np.ndarray:
    if isinstance(nf, HyperbolicNormalForm) and nf.dimension >= 3:
        return epsilon_grid(hi=settings.EPSILON_HI_HIGH_DIM)
    return epsilon_grid()


def _tail(nf: NormalForm):
    n = nf.dimension
    if isinstance(nf, HyperbolicNormalForm):
        return parity_tail(n, n, top=n)
    return parity_tail(n, settings.TAIL_TERMS)


def subtraction_route(nf: NormalForm, r0: Optional[float] = None, split: Optional[float] = None):
    """Constant term and ``int_M v(n) dv`` by subtracting the Taylor part of the density.

    Below ``split`` the density is replaced by its Taylor polynomial, whose radial
    integrals are exact; the remainder is integrated on ``[split, r0]``.

    Returns:
        ``(V, L)`` with ``L = int_M v(n) dv_g`` (zero up to rounding for odd ``n``).
    """
    r0 = r0 or settings.R0
    split = split or settings.RADIAL_SPLIT
    n = nf.dimension
    order = n + SUBTRACTION_EXTRA_TERMS
    taylor = nf.density_taylor(order)
    moments = np.array([float(nf.grid.integrate(taylor[j])) for j in range(order + 1)])

    constant = nf.inner_constant(r0)
    for j, moment in enumerate(moments):
        if j == n:
            constant += moment * math.log(r0)
        else:
            constant += moment * r0 ** (j - n) / (j - n)

    integrand = volume_integrand(nf)

    def remainder(r: float) -> np.ndarray:
        polynomial = np.polynomial.polynomial.polyval(r, taylor)
        return integrand(r) - r ** (-n - 1) * polynomial

    constant += float(nf.grid.integrate(integrate_radial(remainder, split, r0)))
    log_coefficient = float(moments[n])
    logger.info(f"Subtraction route on {nf.describe()}: V={constant:.12g}, int v(n)={log_coefficient:.12g}")
    return constant, log_coefficient


def renormalized_volume(nf: NormalForm, epsilons: Optional[np.ndarray] = None) -> EpsilonFit:
    """Fit ``Vol({r > eps})`` to ``c_0 eps^{-n} + c_2 eps^{-n+2} + ... (+ L log 1/eps) + V + o(1)``.

    The fit carries the subtraction-route ``V``, ``int_M v(n) dv_g`` and
    ``Vol(M)/n`` as cross-checks.
    """
    n = nf.dimension
    epsilons = default_epsilons(nf) if epsilons is None else np.asarray(epsilons, dtype=float)
    profile = volume_profile(nf, epsilons)
    fit = fit_expansion(epsilons, profile.values, leading=n, log_term=(n % 2 == 0), tail=_tail(nf))
    volume, log_integral = subtraction_route(nf)
    crosschecks = {"V_subtraction": volume, "c0_expected": nf.boundary_volume() / n}
    if n % 2 == 0:
        crosschecks["L_integral"] = log_integral
    if abs(fit.constant - volume) > max(fit.uncertainty, 1e-6 * (1.0 + abs(volume))):
        logger.warning(
            f"Fit and subtraction routes disagree: {fit.constant:.12g} vs {volume:.12g} "
            f"(uncertainty {fit.uncertainty:.2e})"
        )
    return fit.model_copy(update={"crosschecks": crosschecks})


class GaugeComparison(BaseModel):
    """Renormalized quantities of two representatives sharing one normal form."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dimension: int
    base_volume: float
    base_log: Optional[float]
    volume_change: float
    """``V_hat - V``."""

    log_change: Optional[float]
    """``L_hat - L``; zero up to fit error since ``L`` is conformally invariant."""

    difference: EpsilonFit

    @property
    def shifted_volume(self) -> float:
        return self.base_volume + self.volume_change


def gauge_comparison(
    nf: NormalForm, omega: OmegaField, epsilons: Optional[np.ndarray] = None
) -> GaugeComparison:
    """Compare ``V`` and ``L`` before and after the change of representative encoded by ``omega``.

    The difference ``Vol({r > eps}) - Vol({r_hat > eps})`` is fitted directly; its
    constant is ``V - V_hat`` and its log coefficient ``L - L_hat``.
    """
    n = nf.dimension
    epsilons = epsilon_grid() if epsilons is None else np.asarray(epsilons, dtype=float)
    change = change_of_gauge(omega)
    difference = gauge_volume_difference(nf, change, epsilons)
    fit = fit_expansion(
        epsilons,
        difference,
        leading=n,
        log_term=(n % 2 == 0),
        tail=list(range(1, settings.TAIL_TERMS + 1)),
    )
    volume, log_integral = subtraction_route(nf)
    log_change = None if fit.log_coefficient is None else -fit.log_coefficient
    logger.info(f"Gauge change on {nf.describe()}: dV={-fit.constant:.3e}, dL={log_change}")
    return GaugeComparison(
        dimension=n,
        base_volume=volume,
        base_log=log_integral if n % 2 == 0 else None,
        volume_change=-fit.constant,
        log_change=log_change,
        difference=fit,
    )

