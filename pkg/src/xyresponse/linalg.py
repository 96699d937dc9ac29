"""Dense linear-algebra kernels: Pfaffians and Toeplitz determinants."""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg


def pfaffian(a: np.ndarray) -> float:
    """Pfaffian of a real antisymmetric matrix.

    Parlett-Reid tridiagonalization with partial pivoting.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("pfaffian needs a square matrix")
    if n % 2:
        return 0.0
    if n == 0:
        return 1.0
    result = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.abs(a[k + 1 :, k]).argmax())
        if kp != k + 1:
            a[[k + 1, kp], k:] = a[[kp, k + 1], k:]
            a[k:, [k + 1, kp]] = a[k:, [kp, k + 1]]
            result = -result
        pivot = a[k, k + 1]
        if pivot == 0.0:
            return 0.0
        result *= pivot
        if k + 2 < n:
            tau = a[k, k + 2 :] / pivot
            col = a[k + 2 :, k + 1].copy()
            a[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return float(result)


def pfaffian_bruteforce(a: np.ndarray) -> float:
    """Pfaffian by explicit expansion over perfect matchings (tiny matrices only)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n % 2:
        return 0.0
    if n == 0:
        return 1.0
    total = 0.0
    for j in range(1, n):
        rest = [k for k in range(1, n) if k != j]
        sub = a[np.ix_(rest, rest)]
        total += (-1) ** (j + 1) * a[0, j] * pfaffian_bruteforce(sub)
    return total


def toeplitz_matrix(g, size: int, shift: int) -> np.ndarray:
    """The ``size x size`` matrix with entries ``g(i - j + shift)``."""
    col = np.array([g(i + shift) for i in range(size)], dtype=float)
    row = np.array([g(shift - j) for j in range(size)], dtype=float)
    return scipy.linalg.toeplitz(col, row)


def determinant(m: np.ndarray) -> float:
    """Determinant through LU with partial pivoting, sign tracked separately."""
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0.0:
        return 0.0
    return float(sign * math.exp(logdet))


def toeplitz_determinant(g, size: int, shift: int) -> float:
    if size == 0:
        return 1.0
    return determinant(toeplitz_matrix(g, size, shift))
