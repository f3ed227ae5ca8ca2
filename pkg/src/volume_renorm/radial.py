"""Composite Gauss-Legendre rules in ``log r`` for radial integrals near the boundary."""
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from config import settings


def log_panels(lo: float, hi: float, ratio: Optional[float] = None) -> np.ndarray:
    """Breakpoints from ``lo`` to ``hi`` with consecutive ratios at most ``ratio``."""
    ratio = ratio or settings.RADIAL_PANEL_RATIO
    count = max(1, int(np.ceil(np.log(hi / lo) / np.log(ratio))))
    return np.geomspace(lo, hi, count + 1)


def radial_rule(lo: float, hi: float, order: Optional[int] = None, ratio: Optional[float] = None):
    """Nodes and weights with ``int_lo^hi f(r) dr ~= sum_i w_i f(r_i)``."""
    order = order or settings.RADIAL_PANEL_ORDER
    s, w = leggauss(order)
    edges = np.log(log_panels(lo, hi, ratio))
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * s[None, :]).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    nodes = np.exp(t)
    return nodes, weights * nodes


def integrate_radial(fn: Callable[[float], np.ndarray], lo: float, hi: float) -> np.ndarray:
    """``int_lo^hi fn(r) dr`` for ``fn`` returning one value per boundary point."""
    if hi <= lo:
        return 0.0 * fn(hi)
    nodes, weights = radial_rule(lo, hi)
    total = 0.0
    for r, w in zip(nodes, weights):
        total = total + w * fn(r)
    return total


def integrate_between(
    fn: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray, order: Optional[int] = None
) -> np.ndarray:
    """``int_{lo(x)}^{hi(x)} fn(r) dr`` with per-point limits of equal sign.

    ``fn`` receives one radius per point. Reversed limits give negative values.
    """
    order = order or settings.RADIAL_PANEL_ORDER
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    a, b = np.log(np.abs(lo)), np.log(np.abs(hi))
    panels = max(1, int(np.ceil(np.abs(b - a).max() / np.log(settings.RADIAL_PANEL_RATIO))))
    s, w = leggauss(order)
    sign = np.sign(lo)
    total = np.zeros_like(lo)
    width = (b - a) / panels
    for p in range(panels):
        start = a + p * width
        for node, weight in zip(s, w):
            t = start + 0.5 * width * (node + 1.0)
            r = sign * np.exp(t)
            total = total + 0.5 * width * weight * np.abs(r) * fn(r)
    return sign * total
