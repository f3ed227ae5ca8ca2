from typing import Optional

import numpy as np

from manifold.conformal_factor import TrigConformalFactor, parse_upsilon
from scripts.run_config import RunConfig
from volume_renorm.fitting import epsilon_grid


def epsilons_from(config: RunConfig) -> Optional[np.ndarray]:
    """Cutoff grid from the ``eps`` options, or ``None`` to keep each pipeline's default."""
    if config.eps_lo is None and config.eps_hi is None and config.eps_count is None:
        return None
    return epsilon_grid(hi=config.eps_hi, lo=config.eps_lo, count=config.eps_count)


def upsilon_from(config: RunConfig, default: str = "0.1*cos(x1)") -> TrigConformalFactor:
    return parse_upsilon(config.upsilon or default, config.n)
