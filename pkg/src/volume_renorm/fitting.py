import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.errors import FitDegeneracyError
from config import settings

logger = logging.getLogger(__name__)

LOG_LABEL = "log(1/eps)"
CONSTANT_LABEL = "1"


class EpsilonFit(BaseModel):
    """Least-squares expansion of a divergent quantity sampled on a grid of cutoffs.

    The basis is ``eps^{-d}, eps^{-d+2}, ...`` (negative powers), optionally
    ``log(1/eps)``, the constant and a tail of positive powers.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    leading: int
    """``n`` for volumes, ``k`` for areas."""

    epsilons: np.ndarray
    values: np.ndarray
    powers: List[Optional[float]]
    """Exponent of each basis column; ``None`` marks ``log(1/eps)``."""

    labels: List[str]
    coefficients: np.ndarray
    residual: float
    """Largest weighted residual relative to the largest weighted sample."""

    condition: float
    uncertainty: float
    """Estimated error of the constant term."""

    crosschecks: Dict[str, float] = {}
    """Independent evaluations of fitted quantities, keyed by name."""

    def coefficient(self, label: str) -> float:
        return float(self.coefficients[self.labels.index(label)])

    @property
    def constant(self) -> float:
        return self.coefficient(CONSTANT_LABEL)

    @property
    def log_coefficient(self) -> Optional[float]:
        if LOG_LABEL not in self.labels:
            return None
        return self.coefficient(LOG_LABEL)

    def divergent(self, j: int) -> float:
        """Coefficient of ``eps^{-leading + j}``."""
        return self.coefficient(_power_label(-self.leading + j))

    def evaluate(self, epsilons: np.ndarray) -> np.ndarray:
        return _design(np.asarray(epsilons, dtype=float), self.powers) @ self.coefficients


def _power_label(power: float) -> str:
    return CONSTANT_LABEL if power == 0 else f"eps^{power:g}"


def _design(epsilons: np.ndarray, powers: Sequence[Optional[float]]) -> np.ndarray:
    columns = [np.log(1.0 / epsilons) if p is None else epsilons**p for p in powers]
    return np.stack(columns, axis=1)


def expansion_basis(
    leading: int, log_term: bool, tail: Sequence[float], step: int = 2
) -> List[Optional[float]]:
    powers: List[Optional[float]] = [float(-leading + j) for j in range(0, leading, step)]
    if log_term:
        powers.append(None)
    powers.append(0.0)
    powers.extend(float(p) for p in tail)
    return powers


def _solve(epsilons: np.ndarray, values: np.ndarray, powers, weight_power: float):
    weights = epsilons**weight_power
    design = _design(epsilons, powers) * weights[:, None]
    scale = np.linalg.norm(design, axis=0)
    scaled = design / scale
    rhs = values * weights
    solution, _, _, singular = np.linalg.lstsq(scaled, rhs, rcond=None)
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0.0 else np.inf
    coefficients = solution / scale
    residual = float(np.abs(design @ coefficients - rhs).max() / np.abs(rhs).max())
    return coefficients, condition, residual


def fit_expansion(
    epsilons: np.ndarray,
    values: np.ndarray,
    leading: int,
    log_term: bool,
    tail: Sequence[float] = (),
    weight_power: Optional[float] = None,
    min_samples_factor: int = 2,
) -> EpsilonFit:
    """Fit ``values(eps)`` on the divergent-plus-tail basis.

    Rows are weighted by ``eps^leading`` so every sample carries comparable relative
    error; columns are scaled to unit norm before the least-squares solve.

    Raises:
        FitDegeneracyError: the scaled design is too ill-conditioned.
    """
    epsilons = np.asarray(epsilons, dtype=float)
    values = np.asarray(values, dtype=float)
    weight_power = leading if weight_power is None else weight_power
    powers = expansion_basis(leading, log_term, tail)
    labels = [LOG_LABEL if p is None else _power_label(p) for p in powers]
    if epsilons.size < min_samples_factor * len(powers):
        raise ValueError(
            f"{epsilons.size} samples for a basis of {len(powers)} terms; need at least "
            f"{min_samples_factor * len(powers)}"
        )

    coefficients, condition, residual = _solve(epsilons, values, powers, weight_power)
    if condition > settings.FIT_CONDITION_THRESHOLD:
        raise FitDegeneracyError("Expansion fit is ill-conditioned", condition)

    constant = coefficients[powers.index(0.0)]
    uncertainty = 1e-9 * (1.0 + abs(constant))
    half = slice(None, None, 2)
    if epsilons[half].size > len(powers):
        half_coefficients, _, _ = _solve(epsilons[half], values[half], powers, weight_power)
        uncertainty = max(uncertainty, abs(half_coefficients[powers.index(0.0)] - constant))

    logger.info(
        f"Fitted {len(powers)} terms to {epsilons.size} samples: constant={constant:.12g} "
        f"+/- {uncertainty:.2e}, condition={condition:.3e}, residual={residual:.2e}"
    )
    return EpsilonFit(
        leading=leading,
        epsilons=epsilons,
        values=values,
        powers=powers,
        labels=labels,
        coefficients=coefficients,
        residual=residual,
        condition=condition,
        uncertainty=uncertainty,
    )


def epsilon_grid(
    hi: Optional[float] = None, lo: Optional[float] = None, count: Optional[int] = None
) -> np.ndarray:
    """Geometric cutoffs ``hi * ratio^i``; with ``lo`` the ratio is chosen to end there."""
    hi = hi or settings.EPSILON_HI
    count = count or settings.EPSILON_COUNT
    if lo is not None:
        if not 0.0 < lo < hi:
            raise ValueError(f"Need 0 < eps_lo < eps_hi, got {lo} and {hi}")
        return np.geomspace(hi, lo, count)
    return hi * settings.EPSILON_RATIO ** np.arange(count)


def parity_tail(leading: int, terms: int, top: Optional[int] = None) -> List[int]:
    """Positive powers ``eps^{-leading + 2j}`` following the constant term."""
    powers = [p for p in range(1, 2 * terms + 2) if (p + leading) % 2 == 0][:terms]
    if top is not None:
        powers = [p for p in powers if p <= top]
    return powers
