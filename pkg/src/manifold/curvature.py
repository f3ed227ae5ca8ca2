import logging
from typing import Callable, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.errors import DimensionUnsupportedError
from config import settings
from manifold.metric_families import MetricFamily
from manifold.tensors import (
    christoffel_first,
    christoffel_second,
    covariant_derivative,
    inverse_metric,
    raise_all,
    richardson_derivative,
    ricci,
    riemann,
)

logger = logging.getLogger(__name__)

_MIN_DIMENSION = {
    "riemann": 2,
    "ricci": 2,
    "scalar": 2,
    "schouten": 3,
    "weyl": 3,
    "cotton": 3,
    "bach": 4,
}


class CurvaturePack(BaseModel):
    """Pointwise curvature of a boundary metric at ``N`` chart points.

    Quantities undefined at the given dimension are ``None``; use :meth:`require`
    to fetch one with a dimension check.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dimension: int
    points: np.ndarray
    metric: np.ndarray
    inverse_metric: np.ndarray
    riemann: Optional[np.ndarray] = None
    ricci: Optional[np.ndarray] = None
    scalar: Optional[np.ndarray] = None
    schouten: Optional[np.ndarray] = None
    weyl: Optional[np.ndarray] = None
    cotton: Optional[np.ndarray] = None
    bach: Optional[np.ndarray] = None

    def require(self, name: str) -> np.ndarray:
        minimum = _MIN_DIMENSION[name]
        if self.dimension < minimum:
            raise DimensionUnsupportedError(
                f"{name} is not defined for n={self.dimension} (needs n >= {minimum})"
            )
        value = getattr(self, name)
        if value is None:
            raise DimensionUnsupportedError(f"{name} was not computed for this pack")
        return value

    @property
    def schouten_trace(self) -> np.ndarray:
        return np.einsum("nij,nij->n", self.inverse_metric, self.require("schouten"))


class CurvatureEvaluator:
    """Pointwise curvature functions of a family, usable as finite-difference targets."""

    def __init__(self, family: MetricFamily, step: Optional[float] = None, nested_step: Optional[float] = None):
        self.family = family
        self.n = family.dimension
        self.step = step or settings.FD_STEP
        self.nested_step = nested_step or settings.NESTED_FD_STEP

    def local(self, x: np.ndarray) -> Dict[str, np.ndarray]:
        x = np.atleast_2d(x)
        g = self.family.metric(x)
        g_inv = inverse_metric(g)
        dg = self.family.d_metric(x)
        ddg = self.family.dd_metric(x)
        gamma2 = christoffel_second(g_inv, christoffel_first(dg))
        rm = riemann(dg, ddg, g_inv)
        rc = ricci(rm, g_inv)
        scalar = np.einsum("nij,nij->n", g_inv, rc)
        out = dict(metric=g, inverse_metric=g_inv, gamma=gamma2, riemann=rm, ricci=rc, scalar=scalar)
        if self.n >= 3:
            schouten = (rc - scalar[:, None, None] * g / (2.0 * (self.n - 1))) / (self.n - 2)
            out["schouten"] = schouten
            out["weyl"] = rm - kulkarni_nomizu(schouten, g)
        return out

    def gamma(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        g_inv = inverse_metric(self.family.metric(x))
        return christoffel_second(g_inv, christoffel_first(self.family.d_metric(x)))

    def schouten(self, x: np.ndarray) -> np.ndarray:
        self._need(3, "Schouten tensor")
        return self.local(x)["schouten"]

    def weyl(self, x: np.ndarray) -> np.ndarray:
        self._need(3, "Weyl tensor")
        return self.local(x)["weyl"]

    def _covariant(self, fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float) -> np.ndarray:
        x = np.atleast_2d(x)
        return covariant_derivative(fn(x), richardson_derivative(fn, x, step), self.gamma(x))

    def nabla_schouten(self, x: np.ndarray) -> np.ndarray:
        """``P_{ij,k}``."""
        return self._covariant(self.schouten, x, self.step)

    def cotton(self, x: np.ndarray) -> np.ndarray:
        dp = self.nabla_schouten(x)
        return dp - np.swapaxes(dp, 2, 3)

    def nabla_nabla_schouten(self, x: np.ndarray) -> np.ndarray:
        """``P_{ij,kl}``."""
        return self._covariant(self.nabla_schouten, x, self.nested_step)

    def nabla_weyl(self, x: np.ndarray) -> np.ndarray:
        return self._covariant(self.weyl, x, self.step)

    def nabla_cotton(self, x: np.ndarray) -> np.ndarray:
        return self._covariant(self.cotton, x, self.nested_step)

    def bach(self, x: np.ndarray) -> np.ndarray:
        self._need(4, "Bach tensor")
        x = np.atleast_2d(x)
        base = self.local(x)
        ddp = self.nabla_nabla_schouten(x)
        g_inv = base["inverse_metric"]
        p_up = raise_all(base["schouten"], g_inv)
        return (
            np.einsum("nkl,nijkl->nij", g_inv, ddp)
            - np.einsum("nkl,nikjl->nij", g_inv, ddp)
            - np.einsum("nkl,nkijl->nij", p_up, base["weyl"])
        )

    def _need(self, minimum: int, what: str):
        if self.n < minimum:
            raise DimensionUnsupportedError(f"{what} requires n >= {minimum}, got n={self.n}")


def kulkarni_nomizu(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``P_ik g_jl + P_jl g_ik - P_il g_jk - P_jk g_il``."""
    return (
        np.einsum("nik,njl->nijkl", p, g)
        + np.einsum("njl,nik->nijkl", p, g)
        - np.einsum("nil,njk->nijkl", p, g)
        - np.einsum("njk,nil->nijkl", p, g)
    )


def in_chunks(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, multiplicity: int = 1) -> np.ndarray:
    """Evaluate ``fn`` over ``x`` in blocks sized by ``settings.CURVATURE_CHUNK``."""
    x = np.atleast_2d(x)
    size = max(1, settings.CURVATURE_CHUNK // max(1, multiplicity))
    parts = [fn(x[start : start + size]) for start in range(0, x.shape[0], size)]
    return np.concatenate(parts, axis=0)


def curvature_pack(family: MetricFamily, x: np.ndarray, with_bach: bool = True) -> CurvaturePack:
    """All curvature quantities of ``family`` at chart points ``x``.

    Cotton needs third partials of ``g`` and Bach fourth partials; both come from
    Richardson differences of the analytic Schouten tensor.
    """
    n = family.dimension
    if n < 2:
        raise DimensionUnsupportedError(f"Curvature requires n >= 2, got n={n}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    evaluator = CurvatureEvaluator(family)
    base = in_chunks(lambda pts: _stack_local(evaluator, pts), x)
    fields = _unstack_local(base, n)
    if n >= 3:
        fields["cotton"] = in_chunks(evaluator.cotton, x, multiplicity=4 * n)
    if n >= 4 and with_bach:
        fields["bach"] = in_chunks(evaluator.bach, x, multiplicity=16 * n * n)
    logger.debug(f"Curvature pack of {family.describe()} at {x.shape[0]} points")
    return CurvaturePack(dimension=n, points=x, **fields)


_LOCAL_KEYS = ("metric", "inverse_metric", "riemann", "ricci", "scalar", "schouten", "weyl")


def _stack_local(evaluator: CurvatureEvaluator, x: np.ndarray) -> np.ndarray:
    local = evaluator.local(x)
    return np.concatenate(
        [local[key].reshape(x.shape[0], -1) for key in _LOCAL_KEYS if key in local], axis=1
    )


def _unstack_local(flat: np.ndarray, n: int) -> Dict[str, np.ndarray]:
    shapes = dict(metric=2, inverse_metric=2, riemann=4, ricci=2, scalar=0, schouten=2, weyl=4)
    out, offset = {}, 0
    for key in _LOCAL_KEYS:
        if key in ("schouten", "weyl") and n < 3:
            continue
        size = n ** shapes[key]
        out[key] = flat[:, offset : offset + size].reshape((flat.shape[0],) + (n,) * shapes[key])
        offset += size
    return out
