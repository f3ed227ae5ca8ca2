"""Truncated power series in ``r`` with array-valued coefficients.

A :class:`TensorSeries` of order ``m`` stores ``c[0] + c[1] r + ... + c[m] r^m`` where every
coefficient is an array of the same shape, usually ``(N, n, n)`` for a metric sampled at
``N`` boundary points. Coefficients above ``m`` are unknown, not zero, so every product
is truncated at the smaller order of its operands.
"""
from typing import Union

import numpy as np

Number = Union[int, float]


class TensorSeries:
    def __init__(self, coeffs: np.ndarray, order: int = None):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 0:
            raise ValueError("TensorSeries needs a leading order axis")
        if order is None:
            order = coeffs.shape[0] - 1
        if order < 0:
            raise ValueError(f"order cannot be less than zero: order = {order}")
        if coeffs.shape[0] > order + 1:
            coeffs = coeffs[: order + 1]
        elif coeffs.shape[0] < order + 1:
            padded = np.zeros((order + 1,) + coeffs.shape[1:])
            padded[: coeffs.shape[0]] = coeffs
            coeffs = padded
        self.c = coeffs

    @classmethod
    def constant(cls, value: np.ndarray, order: int) -> "TensorSeries":
        return cls(np.asarray(value, dtype=float)[None], order=order)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def shape(self):
        return self.c.shape[1:]

    def __getitem__(self, j: int) -> np.ndarray:
        return self.c[j]

    def truncate(self, order: int) -> "TensorSeries":
        return TensorSeries(self.c, order=min(order, self.order))

    def __add__(self, other) -> "TensorSeries":
        if isinstance(other, TensorSeries):
            order = min(self.order, other.order)
            return TensorSeries(self.c[: order + 1] + other.c[: order + 1])
        out = self.c.copy()
        out[0] = out[0] + other
        return TensorSeries(out)

    __radd__ = __add__

    def __neg__(self) -> "TensorSeries":
        return TensorSeries(-self.c)

    def __sub__(self, other) -> "TensorSeries":
        return self + (-other)

    def __rsub__(self, other) -> "TensorSeries":
        return (-self) + other

    def __mul__(self, other) -> "TensorSeries":
        if isinstance(other, TensorSeries):
            return self.contract("...,...->...", other)
        return TensorSeries(self.c * other)

    __rmul__ = __mul__

    def contract(self, subscripts: str, other: "TensorSeries") -> "TensorSeries":
        """Cauchy product with an ``np.einsum`` contraction between coefficients."""
        order = min(self.order, other.order)
        terms = [
            sum(
                np.einsum(subscripts, self.c[i], other.c[k - i])
                for i in range(k + 1)
            )
            for k in range(order + 1)
        ]
        return TensorSeries(np.stack(terms))

    def map(self, subscripts: str, operand: np.ndarray) -> "TensorSeries":
        """Coefficientwise contraction with a fixed array."""
        return TensorSeries(np.stack([np.einsum(subscripts, operand, c) for c in self.c]))

    def deriv(self) -> "TensorSeries":
        """``d/dr``; the order drops by one."""
        scale = np.arange(1, self.order + 1).reshape((-1,) + (1,) * len(self.shape))
        if self.order == 0:
            return TensorSeries(np.zeros_like(self.c))
        return TensorSeries(self.c[1:] * scale, order=self.order - 1)

    def shift(self, power: int, order: int = None) -> "TensorSeries":
        """Multiply by ``r**power``."""
        order = self.order + power if order is None else order
        out = np.zeros((order + 1,) + self.shape)
        count = max(0, min(self.order + 1, order + 1 - power))
        out[power : power + count] = self.c[:count]
        return TensorSeries(out)

    def __call__(self, r: float) -> np.ndarray:
        out = np.zeros(self.shape)
        for coefficient in self.c[::-1]:
            out = out * r + coefficient
        return out

    def __repr__(self) -> str:
        return f"TensorSeries(order={self.order}, shape={self.shape})"


def matrix_inverse(series: TensorSeries) -> TensorSeries:
    """Inverse of a series of invertible matrices: ``B_k = -B_0 sum_{j>=1} A_j B_{k-j}``."""
    b0 = np.linalg.inv(series.c[0])
    terms = [b0]
    for k in range(1, series.order + 1):
        acc = sum(np.einsum("...ij,...jk->...ik", series.c[j], terms[k - j]) for j in range(1, k + 1))
        terms.append(-np.einsum("...ij,...jk->...ik", b0, acc))
    return TensorSeries(np.stack(terms))


def scalar_exp(series: TensorSeries) -> TensorSeries:
    """``exp`` of a scalar series (nested Horner form)."""
    f0 = np.exp(series.c[0])
    x = series - series.c[0]
    ans = TensorSeries.constant(np.ones_like(series.c[0]), series.order)
    for k in range(series.order, 0, -1):
        ans = 1.0 + x * ans * (1.0 / k)
    return TensorSeries(ans.c * f0)


def scalar_power(series: TensorSeries, alpha: float) -> TensorSeries:
    """``series**alpha`` for a scalar series with positive constant term."""
    f0 = series.c[0]
    log_series = scalar_log(TensorSeries(series.c / f0[None]))
    return TensorSeries(scalar_exp(log_series * alpha).c * (f0**alpha)[None])


def scalar_log(series: TensorSeries) -> TensorSeries:
    """``log`` of a scalar series whose constant term is positive."""
    f0 = series.c[0]
    x = -(series - f0) * (1.0 / f0)
    ans = TensorSeries.constant(np.log(f0), series.order)
    xn = TensorSeries.constant(np.ones_like(f0), series.order)
    for k in range(1, series.order + 1):
        xn = xn * x
        ans = ans - xn * (1.0 / k)
    return ans


def sqrt_det_ratio(metric: TensorSeries) -> TensorSeries:
    """Series of ``(det g_r / det g_0)^{1/2}`` for a matrix series ``g_r``.

    Uses ``log det(1 + M) = sum_p (-1)^{p+1} tr(M^p) / p`` with ``M = g_0^{-1}(g_r - g_0)``.
    """
    g0_inv = np.linalg.inv(metric.c[0])
    m = (metric - metric.c[0]).map("...ij,...jk->...ik", g0_inv)
    trace_log = TensorSeries(np.zeros((metric.order + 1,) + metric.shape[:-2]))
    power = m
    for p in range(1, metric.order + 1):
        trace = TensorSeries(np.einsum("k...ii->k...", power.c))
        trace_log = trace_log + trace * ((-1.0) ** (p + 1) / p)
        power = power.contract("...ij,...jk->...ik", m)
    return scalar_exp(trace_log * 0.5)
