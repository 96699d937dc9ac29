"""Adaptive Gauss-Legendre quadrature for vector-valued integrands.

Every panel is integrated twice, once whole and once as two halves; the
difference is the panel's error estimate. Panels whose estimate exceeds their
share of the tolerance are bisected, all pending panels being evaluated in a
single vectorized call per sweep.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureFailure


@lru_cache(maxsize=8)
def _legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


@dataclass(frozen=True)
class QuadratureResult:
    value: np.ndarray
    error: float
    panels: int


def integrate(
    f,
    a: float,
    b: float,
    tol: float = 1e-10,
    order: int = 20,
    initial_panels: int = 8,
    max_panels: int = 1 << 16,
    breakpoints=(),
) -> QuadratureResult:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    ``f`` maps a 1-d array of abscissae of shape ``(m,)`` to an array of shape
    ``(m,)`` or ``(m, k)``; the tolerance applies to every component.
    ``breakpoints`` are forced panel edges (integrable kinks or jumps).
    """
    if not b > a:
        raise ValueError("integration interval must have b > a")
    xg, wg = _legendre(order)
    edges = np.unique(np.concatenate([[a, b], [p for p in breakpoints if a < p < b]]))
    starts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(lo, hi, initial_panels + 1)
        starts.extend(zip(cuts[:-1], cuts[1:]))
    pending = np.array(starts, dtype=float)
    length = b - a
    total = None
    error = 0.0
    accepted = 0

    def panel_sums(lo, hi):
        # lo, hi: (p,) arrays; returns (p, ...) panel integrals
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = mid[:, None] + half[:, None] * xg[None, :]
        vals = np.asarray(f(nodes.ravel()), dtype=float)
        vals = vals.reshape(len(lo), order, *vals.shape[1:])
        return np.tensordot(wg, vals, axes=([0], [1])) * half.reshape(-1, *[1] * (vals.ndim - 2))

    while len(pending):
        lo, hi = pending[:, 0], pending[:, 1]
        mid = 0.5 * (lo + hi)
        whole = panel_sums(lo, hi)
        halves = panel_sums(np.concatenate([lo, mid]), np.concatenate([mid, hi]))
        n = len(lo)
        refined = halves[:n] + halves[n:]
        diff = np.abs(refined - whole)
        err = diff.reshape(n, -1).max(axis=1)
        budget = tol * (hi - lo) / length
        ok = err <= budget
        if total is None:
            total = np.zeros(refined.shape[1:])
        total = total + refined[ok].sum(axis=0)
        error += float(err[ok].sum())
        accepted += int(ok.sum())
        bad = ~ok
        if not bad.any():
            break
        if accepted + 2 * int(bad.sum()) > max_panels:
            raise QuadratureFailure(
                f"adaptive quadrature on [{a}, {b}] exceeded {max_panels} panels "
                f"(residual error {float(err[bad].max()):.3e} > tol {tol:.1e})"
            )
        blo, bhi, bmid = lo[bad], hi[bad], mid[bad]
        pending = np.stack([np.concatenate([blo, bmid]), np.concatenate([bmid, bhi])], axis=1)
    return QuadratureResult(value=total, error=error, panels=accepted)
