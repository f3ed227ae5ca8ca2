import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.errors import DomainError, ResolutionError
from config import settings
from gauge.normal_form import NormalForm
from gauge.special_defining import GaugeChange, OmegaField, change_of_gauge
from volume_renorm.radial import integrate_between, integrate_radial

logger = logging.getLogger(__name__)


class VolumeProfile(BaseModel):
    """``Vol({r > eps})`` (or ``{r_hat > eps}``) at each cutoff."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    epsilons: np.ndarray
    values: np.ndarray
    inner: float
    """Volume of ``{r > r0}``, shared by every sample."""

    r0: float
    gauged: bool = False


def _check_cutoffs(epsilons: np.ndarray, r0: float):
    if np.any(epsilons < settings.MIN_EPSILON):
        raise ResolutionError(
            f"epsilon={epsilons.min():.3e} is below the radial quadrature limit {settings.MIN_EPSILON:g}"
        )
    if np.any(epsilons > r0):
        raise DomainError(f"Cutoffs must not exceed r0={r0:g}, got {epsilons.max():g}")


def volume_integrand(nf: NormalForm):
    n = nf.dimension
    return lambda r: np.asarray(r) ** (-n - 1) * nf.density(r)


def volume_profile(
    nf: NormalForm,
    epsilons: np.ndarray,
    gauge: Optional[OmegaField] = None,
    r0: Optional[float] = None,
) -> VolumeProfile:
    """Quadrature of ``r^{-n-1} (det g_r / det g_0)^{1/2} dv_{g_0} dr`` over ``{r > eps}``.

    The shell ``eps < r < r0`` is cut at every cutoff, each piece integrated once, and
    the pieces summed from ``r0`` downward; ``{r > r0}`` contributes the normal form's
    inner constant.
    """
    r0 = r0 or settings.R0
    epsilons = np.asarray(epsilons, dtype=float)
    _check_cutoffs(epsilons, r0)
    integrand = volume_integrand(nf)
    inner = nf.inner_constant(r0)

    breaks = np.unique(np.concatenate([epsilons, [r0]]))
    shells = np.array(
        [float(nf.grid.integrate(integrate_radial(integrand, lo, hi))) for lo, hi in zip(breaks[:-1], breaks[1:])]
    )
    above = np.concatenate([np.cumsum(shells[::-1])[::-1], [0.0]])
    values = inner + above[np.searchsorted(breaks, epsilons)]

    if gauge is not None:
        values = values - gauge_volume_difference(nf, change_of_gauge(gauge), epsilons)
    logger.debug(f"Volume profile of {nf.describe()} at {epsilons.size} cutoffs")
    return VolumeProfile(epsilons=epsilons, values=values, inner=inner, r0=r0, gauged=gauge is not None)


def gauge_volume_difference(nf: NormalForm, change: GaugeChange, epsilons: np.ndarray) -> np.ndarray:
    """``Vol({r > eps}) - Vol({r_hat > eps}) = int_M int_eps^{eps_hat} r^{-n-1} D dr dv``."""
    integrand = volume_integrand(nf)
    out = []
    for eps in np.asarray(epsilons, dtype=float):
        eps_hat = change.epsilon_hat(eps)
        lo = np.full_like(eps_hat, eps)
        out.append(float(nf.grid.integrate(integrate_between(integrand, lo, eps_hat))))
    return np.asarray(out)
