import numpy as np
import pytest

from manifold.conformal_factor import parse_upsilon
from manifold.metric_families import FlatTorus, RoundSphere


@pytest.fixture
def quarter_sphere():
    """``g_0 = round / 4`` on ``S^2``, the boundary of the ball model of ``H^3``."""
    return RoundSphere(2, radius=0.5)


@pytest.fixture
def flat_torus():
    return FlatTorus(2)


@pytest.fixture
def zonal_upsilon():
    return parse_upsilon("0.1*cos(x1)", 2)


@pytest.fixture
def small_epsilons():
    return 0.1 * 0.75 ** np.arange(24)
