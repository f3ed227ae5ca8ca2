from typing import Callable

import numpy as np

from common.errors import SingularMetricError

_LETTERS = "abcdefghijklm"


def richardson_derivative(
    fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float
) -> np.ndarray:
    """Chart partials of ``fn`` by Richardson-extrapolated central differences.

    Args:
        fn: Maps points of shape ``(N, n)`` to values of shape ``(N, ...)``.
        x: Points of shape ``(N, n)``.
        step: Base step ``h``; the stencil uses ``+-h`` and ``+-2h``.

    Returns:
        Array of shape ``(N, ..., n)``, derivative index last.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    count, n = x.shape
    shifts = np.array([step, -step, 2.0 * step, -2.0 * step])
    offsets = np.einsum("s,kd->skd", shifts, np.eye(n))
    shifted = x[None, None, :, :] + offsets[:, :, None, :]
    values = fn(shifted.reshape(-1, n))
    values = values.reshape((4, n, count) + values.shape[1:])
    d_h = (values[0] - values[1]) / (2.0 * step)
    d_2h = (values[2] - values[3]) / (4.0 * step)
    derivative = (4.0 * d_h - d_2h) / 3.0
    return np.moveaxis(derivative, 0, -1)


def inverse_metric(g: np.ndarray, condition_limit: float = 1e12) -> np.ndarray:
    g = np.asarray(g)
    eigen = np.linalg.eigvalsh(g)
    smallest = eigen[..., 0]
    if np.any(smallest <= 0.0) or np.any(eigen[..., -1] / np.abs(smallest) > condition_limit):
        raise SingularMetricError(
            f"Metric is not positive definite or is singular (min eigenvalue {smallest.min():.3e})"
        )
    return np.linalg.inv(g)


def christoffel_first(dg: np.ndarray) -> np.ndarray:
    """``Gamma_{k,ij}`` from ``dg[:, a, b, c] = d_a g_bc``."""
    return 0.5 * (
        np.einsum("nijk->nkij", dg) + np.einsum("njik->nkij", dg) - dg
    )


def christoffel_second(g_inv: np.ndarray, gamma_first: np.ndarray) -> np.ndarray:
    return np.einsum("npk,nkij->npij", g_inv, gamma_first)


def riemann(dg: np.ndarray, ddg: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """All-lower Riemann tensor; constant curvature ``c`` gives ``c (g_ik g_jl - g_il g_jk)``.

    ``ddg[:, a, b, c, d] = d_a d_b g_cd``.
    """
    gamma1 = christoffel_first(dg)
    gamma2 = christoffel_second(g_inv, gamma1)
    second = 0.5 * (
        np.einsum("njkil->nijkl", ddg)
        + np.einsum("niljk->nijkl", ddg)
        - np.einsum("njlik->nijkl", ddg)
        - np.einsum("nikjl->nijkl", ddg)
    )
    quadratic = np.einsum("npjk,npil->nijkl", gamma1, gamma2) - np.einsum(
        "npjl,npik->nijkl", gamma1, gamma2
    )
    return second + quadratic


def ricci(riemann_tensor: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    return np.einsum("nik,nijkl->njl", g_inv, riemann_tensor)


def covariant_derivative(
    tensor: np.ndarray, partials: np.ndarray, gamma2: np.ndarray
) -> np.ndarray:
    """``T_{i...;l}`` for an all-lower tensor, derivative index last.

    Args:
        tensor: Shape ``(N, n, ..., n)``.
        partials: Chart partials of ``tensor``, shape ``(N, n, ..., n, n)``, derivative last.
        gamma2: ``Gamma^p_{ij}`` of shape ``(N, n, n, n)``.
    """
    rank = tensor.ndim - 1
    slots = _LETTERS[:rank]
    out = partials.copy()
    for a in range(rank):
        source = slots[:a] + "p" + slots[a + 1 :]
        out -= np.einsum(f"npz{slots[a]},n{source}->n{slots}z", gamma2, tensor)
    return out


def raise_all(tensor: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    out = tensor
    rank = tensor.ndim - 1
    slots = _LETTERS[:rank]
    for a in range(rank):
        target = slots[:a] + "z" + slots[a + 1 :]
        out = np.einsum(f"nz{slots[a]},n{slots}->n{target}", g_inv, out)
    return out


def full_contraction(left: np.ndarray, right: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """``left_{i...} right^{i...}`` pointwise."""
    raised = raise_all(right, g_inv)
    rank = left.ndim - 1
    return np.einsum(f"n{_LETTERS[:rank]},n{_LETTERS[:rank]}->n", left, raised)


def central_difference_weights(derivative: int, half_width: int) -> np.ndarray:
    """Weights ``w_k, k = -s..s`` with ``f^(p)(0) ~= sum_k w_k f(k h) / h^p``.

    Matches the Taylor expansion through order ``2s``, so ``2s >= p`` is required.
    """
    if 2 * half_width < derivative:
        raise ValueError(f"Half width {half_width} too small for derivative order {derivative}")
    offsets = np.arange(-half_width, half_width + 1, dtype=float)
    powers = np.arange(2 * half_width + 1)
    system = offsets[None, :] ** powers[:, None]
    rhs = np.zeros(powers.size)
    rhs[derivative] = float(np.prod(np.arange(1, derivative + 1)))
    return np.linalg.solve(system, rhs)
