import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import comb, gamma

from area_renorm.submanifold import Embedding, equatorial_sphere
from common.errors import DegenerateEndpointsError, DomainError
from config import settings
from manifold.metric_families import unit_to_sphere_chart
from manifold.quadrature import sphere_grid
from manifold.tensors import central_difference_weights
from volume_renorm.fitting import parity_tail
from volume_renorm.radial import integrate_radial
from volume_renorm.renormalized_volume import hyperbolic_profile, hyperbolic_reference

logger = logging.getLogger(__name__)

TOTALLY_GEODESIC = "totally-geodesic"
GEODESIC_ARC = "geodesic-arc"
EQUIVARIANT = "equivariant-shooting"

PARITY_SPACING = 0.02

Branch = Tuple[Callable[[np.ndarray], np.ndarray], float]
"""Chart path ``r -> x(r)`` of a boundary-reaching branch and the largest radius it reaches."""


def sphere_area(k: int, radius: float = 0.5) -> float:
    if k == 0:
        return 2.0
    return radius**k * 2.0 * math.pi ** ((k + 1) / 2) / gamma((k + 1) / 2)


class MinimalGraph(ABC):
    """Minimal ``Y^{k+1}`` in the hyperbolic normal form, written as a graph ``u(x, r)`` over ``N x [0, r)``."""

    tag: str

    def __init__(self, k: int, n: int):
        self.k = k
        self.n = n

    @property
    @abstractmethod
    def r_top(self) -> float:
        """Largest ``r`` reached by ``Y``."""

    @abstractmethod
    def graph(self, r) -> np.ndarray:
        """Boundary-metric distance ``u(r)`` from ``N`` of the slice ``Y ∩ {r}``."""

    @abstractmethod
    def area_profile(self, epsilons) -> np.ndarray:
        """``Area(Y ∩ {r > eps})``."""

    def exact_profile(self, epsilons) -> Optional[np.ndarray]:
        return None

    def closed_form(self) -> Dict[str, float]:
        """Known values of ``A`` and ``K``, keyed by name."""
        return {}

    def log_density_integral(self) -> Optional[float]:
        """``int_N a^{(k)} da_N`` when the area density expansion is available."""
        return None

    def leading_coefficient(self) -> Optional[float]:
        """``Area(N) / k``, the coefficient of ``eps^{-k}``."""
        return None

    def boundary_embedding(self) -> Optional[Embedding]:
        return None

    def boundary_points(self) -> Optional[np.ndarray]:
        """Chart points of ``N`` when ``k = 0``."""
        return None

    @property
    def residual(self) -> float:
        """Interior residual of the minimal-surface equation."""
        return 0.0

    def tail(self) -> List[int]:
        return parity_tail(self.k, settings.TAIL_TERMS)

    def _spacing(self, half_width: int) -> float:
        return min(PARITY_SPACING, self.r_top / (half_width + 1))

    def boundary_orthogonality(self) -> float:
        """``|d_r u(., 0)|`` by a five-point symmetric difference."""
        spacing = self._spacing(2)
        samples = np.stack([self.graph(j * spacing) for j in range(-2, 3)])
        return float(np.abs(central_difference_weights(1, 2) @ samples / spacing).max())

    def parity_defects(self, through: Optional[int] = None) -> Dict[int, float]:
        """Odd Taylor coefficients of ``u`` in ``r`` through ``k + 1``."""
        through = self.k + 1 if through is None else through
        out: Dict[int, float] = {}
        for order in range(1, through + 1, 2):
            half_width = (order + 1) // 2 + 1
            spacing = self._spacing(half_width)
            samples = np.stack([self.graph(j * spacing) for j in range(-half_width, half_width + 1)])
            estimate = central_difference_weights(order, half_width) @ samples
            out[order] = float(np.abs(estimate).max() / spacing**order / math.factorial(order))
        return out

    def describe(self) -> str:
        return f"{self.tag}(k={self.k}, n={self.n})"


class GeodesicArc(MinimalGraph):
    """Ball-model geodesic between boundary points ``p`` and ``q`` at angle ``alpha``.

    Each branch over an endpoint sits at angle ``alpha/2 - psi(r)`` from it, with
    ``cos psi = cos(alpha/2) (1 + r^2) / (1 - r^2)``; the apex is at ``r = tan(alpha/4)``.
    """

    tag = GEODESIC_ARC

    def __init__(self, p: np.ndarray, q: np.ndarray):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if p.shape != q.shape or p.ndim != 1 or p.size < 2:
            raise DomainError(f"Endpoints must be unit vectors of the same length, got {p.shape} and {q.shape}")
        p, q = p / np.linalg.norm(p), q / np.linalg.norm(q)
        chord = float(np.linalg.norm(p - q))
        if chord < 1e-12:
            raise DegenerateEndpointsError("Geodesic endpoints coincide")
        super().__init__(0, p.size - 1)
        self.p, self.q = p, q
        self.alpha = 2.0 * math.asin(min(1.0, 0.5 * chord))

    @property
    def r_top(self) -> float:
        return math.tan(0.25 * self.alpha)

    @property
    def is_diameter(self) -> bool:
        return abs(self.alpha - math.pi) < 1e-12

    def _psi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(np.abs(r) > self.r_top * (1.0 + 1e-12)):
            raise DomainError(f"Radius beyond the apex r={self.r_top:g} of the geodesic")
        value = math.cos(0.5 * self.alpha) * (1.0 + r**2) / (1.0 - r**2)
        return np.arccos(np.clip(value, -1.0, 1.0))

    def graph(self, r) -> np.ndarray:
        return 0.5 * (0.5 * self.alpha - self._psi(r))

    def branch_length(self, r) -> np.ndarray:
        """Hyperbolic length from the apex down to level ``r`` along one branch."""
        r = np.asarray(r, dtype=float)
        return np.arccosh(np.maximum(1.0, 0.5 * (1.0 / r + r) * math.sin(0.5 * self.alpha)))

    def area_profile(self, epsilons) -> np.ndarray:
        return 2.0 * self.branch_length(epsilons)

    def exact_profile(self, epsilons) -> np.ndarray:
        return self.area_profile(epsilons)

    def closed_form(self) -> Dict[str, float]:
        return {"A": 2.0 * math.log(math.sin(0.5 * self.alpha)), "K": 2.0}

    def boundary_points(self) -> np.ndarray:
        return unit_to_sphere_chart(np.stack([self.p, self.q]))

    def _direction(self, start: np.ndarray, end: np.ndarray) -> np.ndarray:
        toward = end - math.cos(self.alpha) * start
        norm = np.linalg.norm(toward)
        if norm < 1e-12:
            basis = np.eye(start.size)[np.argmin(np.abs(start))]
            toward = basis - (basis @ start) * start
            norm = np.linalg.norm(toward)
        return toward / norm

    def branches(self) -> List[Branch]:
        """Chart paths of the two branches, starting at ``p`` and at ``q``."""
        out: List[Branch] = []
        for start, end in ((self.p, self.q), (self.q, self.p)):
            direction = self._direction(start, end)

            def path(r, start=start, direction=direction):
                angle = 2.0 * self.graph(np.atleast_1d(r))
                units = np.cos(angle)[:, None] * start + np.sin(angle)[:, None] * direction
                return unit_to_sphere_chart(units)

            out.append((path, self.r_top))
        return out

    def describe(self) -> str:
        return f"geodesic arc (alpha={self.alpha:.6g}) in H^{self.n + 1}"


class TotallyGeodesic(MinimalGraph):
    """``u = 0`` over the equatorial ``S^k`` of ``S^n``: a copy of ``H^{k+1}``."""

    tag = TOTALLY_GEODESIC

    def __init__(self, k: int, n: int, nodes: Optional[int] = None):
        if not 0 <= k <= n - 1:
            raise DomainError(f"Totally geodesic H^(k+1) in H^(n+1) needs 0 <= k <= n-1, got k={k}, n={n}")
        super().__init__(k, n)
        self.nodes = nodes
        self.boundary_area = sphere_area(k)

    @property
    def r_top(self) -> float:
        return 1.0

    def graph(self, r) -> np.ndarray:
        return np.zeros_like(np.asarray(r, dtype=float))

    def area_density(self, r) -> np.ndarray:
        """``r^{-k-1} (1 - r^2)^k Area(N)``."""
        r = np.asarray(r, dtype=float)
        return r ** (-self.k - 1) * (1.0 - r**2) ** self.k * self.boundary_area

    def area_profile(self, epsilons) -> np.ndarray:
        epsilons = np.atleast_1d(np.asarray(epsilons, dtype=float))
        if np.any(epsilons <= 0.0) or np.any(epsilons >= 1.0):
            raise DomainError("Cutoffs must lie in (0, 1)")
        return np.array([float(integrate_radial(self.area_density, eps, 1.0)) for eps in epsilons])

    def exact_profile(self, epsilons) -> np.ndarray:
        return hyperbolic_profile(self.k, epsilons)

    def tail(self) -> List[int]:
        return parity_tail(self.k, self.k, top=self.k)

    def closed_form(self) -> Dict[str, float]:
        key = "K" if self.k % 2 == 0 else "A"
        return {key: hyperbolic_reference(self.k) if self.k > 0 else 2.0}

    def log_density_integral(self) -> Optional[float]:
        if self.k % 2:
            return None
        coefficient = (-1.0) ** (self.k // 2) * comb(self.k, self.k // 2, exact=True)
        return coefficient * self.boundary_area

    def leading_coefficient(self) -> Optional[float]:
        return self.boundary_area / self.k if self.k > 0 else None

    def boundary_embedding(self) -> Optional[Embedding]:
        if self.k == 0:
            return None
        return equatorial_sphere(self.k, self.n, self.nodes)

    def boundary_points(self) -> Optional[np.ndarray]:
        if self.k > 0:
            return None
        points = np.full((2, self.n), 0.5 * math.pi)
        points[:, -1] = [0.0, math.pi]
        return points

    def boundary_weights(self) -> np.ndarray:
        """``da_N`` on the parameter grid of :meth:`boundary_embedding` (``g0 = round / 4``)."""
        if self.k == 0:
            return np.ones(2)
        nodes = self.nodes or settings.grid_nodes(self.k)
        return sphere_grid(self.k, 0.5, nodes).weights


def geodesic_between(p, q) -> GeodesicArc:
    """Geodesic of ``H^{n+1}`` joining boundary points given as unit vectors of ``R^{n+1}``."""
    arc = GeodesicArc(p, q)
    logger.info(f"Built {arc.describe()}: apex r={arc.r_top:.6g}")
    return arc


def totally_geodesic(k: int, n: int, nodes: Optional[int] = None) -> TotallyGeodesic:
    return TotallyGeodesic(k, n, nodes)
