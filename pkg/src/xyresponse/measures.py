"""Unitary-response correlation measures for two qubits.

The response of a state to a local unitary ``U_A = n.sigma (x) I`` (Hermitian,
eigenvalues +-1) is the squared distance between the state and its image.
Minimizing over the Bloch direction ``n`` gives the discord of response; for
pure states the trace-distance version coincides with the entanglement of
response, whose convex roof on two qubits is the squared concurrence.
"""

from __future__ import annotations

import contextlib
import enum
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .density import PAULI, TwoSiteDensityMatrix
from .errors import OptimizerNotConverged
from .params import ModelParams, format_size

_SIGMA = np.stack([PAULI["x"], PAULI["y"], PAULI["z"]]).astype(complex)
_YY = np.kron(PAULI["y"], PAULI["y"]).real

LATTICE_SIZE = 256
N_SEEDS = 3
SIMPLEX_STEP = 0.05
XATOL = 1e-10
FATOL = 1e-14
MAXITER = 4000

_observers: list = []


@contextlib.contextmanager
def observe(callback):
    """Call ``callback(result)`` for every :func:`optimize_over_sphere` run."""
    _observers.append(callback)
    try:
        yield
    finally:
        _observers.remove(callback)


class Metric(str, enum.Enum):
    TRACE = "trace"
    HILBERT_SCHMIDT = "hs"


def _matrix(rho) -> np.ndarray:
    return np.asarray(rho.elements if isinstance(rho, TwoSiteDensityMatrix) else rho)


def trace_distance(rho, sigma) -> float:
    d = _matrix(rho) - _matrix(sigma)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(d)).sum())


def hilbert_schmidt_distance(rho, sigma) -> float:
    """Frobenius distance scaled so orthogonal pure states are at distance 1."""
    d = _matrix(rho) - _matrix(sigma)
    return math.sqrt(0.5 * float(np.sum(np.abs(d) ** 2)))


def concurrence(rho) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``."""
    m = _matrix(rho)
    tilde = _YY @ m.conj() @ _YY
    w, v = np.linalg.eigh(m)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(root @ tilde @ root), 0.0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1:].sum()))


def entanglement_of_response(rho) -> float:
    return concurrence(rho) ** 2


# ---------------------------------------------------------------------------
# optimization over the Bloch sphere


@dataclass(frozen=True)
class BlochDirection:
    theta: float
    phi: float

    @property
    def vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    @classmethod
    def from_vector(cls, n) -> "BlochDirection":
        n = np.asarray(n, dtype=float)
        n = n / np.linalg.norm(n)
        # U and -U act identically; report the upper hemisphere
        if n[2] < 0:
            n = -n
        theta = math.acos(min(1.0, max(-1.0, n[2])))
        phi = math.atan2(n[1], n[0]) % (2 * math.pi) if theta > 1e-12 else 0.0
        if phi > 2 * math.pi - 1e-12:
            phi = 0.0
        return cls(theta, phi)


@dataclass(frozen=True)
class SphereMinimum:
    value: float
    argmin: BlochDirection
    evaluations: int
    converged: bool

    def __iter__(self):
        yield self.value
        yield self.argmin


def fibonacci_hemisphere(n: int = LATTICE_SIZE) -> np.ndarray:
    k = np.arange(n)
    z = 1.0 - (k + 0.5) / n
    rho = np.sqrt(1.0 - z * z)
    ang = k * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([rho * np.cos(ang), rho * np.sin(ang), z], axis=1)


def _tangent_frame(n0):
    helper = np.array([1.0, 0.0, 0.0]) if abs(n0[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    a = np.cross(n0, helper)
    a /= np.linalg.norm(a)
    return a, np.cross(n0, a)


def optimize_over_sphere(objective, batch_objective=None, lattice: int = LATTICE_SIZE, seeds: int = N_SEEDS,
                         strict: bool = False) -> SphereMinimum:
    """Deterministic global minimization of ``objective(n)`` over unit vectors.

    A Fibonacci lattice on the upper hemisphere (antipodal points are
    equivalent) is scanned first; Nelder-Mead then refines the best ``seeds``
    lattice points in a local tangent chart. ``batch_objective`` maps an
    ``(m, 3)`` array to ``(m,)`` and speeds up the scan. With ``strict`` a
    stalled refinement raises :class:`OptimizerNotConverged`; otherwise it
    is flagged in the result.
    """
    pts = fibonacci_hemisphere(lattice)
    if batch_objective is not None:
        vals = np.asarray(batch_objective(pts), dtype=float)
    else:
        vals = np.array([objective(p) for p in pts])
    evals = lattice
    best_val, best_n, ok = math.inf, pts[0], True
    for idx in np.argsort(vals, kind="stable")[:seeds]:
        n0 = pts[idx]
        a, b = _tangent_frame(n0)

        def chart(t, n0=n0, a=a, b=b):
            v = n0 + t[0] * a + t[1] * b
            return v / np.linalg.norm(v)

        res = minimize(
            lambda t: objective(chart(t)),
            np.zeros(2),
            method="Nelder-Mead",
            options=dict(
                initial_simplex=np.array([[0.0, 0.0], [SIMPLEX_STEP, 0.0], [0.0, SIMPLEX_STEP]]),
                xatol=XATOL,
                fatol=FATOL,
                maxiter=MAXITER,
                maxfev=2 * MAXITER,
            ),
        )
        evals += int(res.nfev)
        val, n = (float(res.fun), chart(res.x)) if res.fun <= vals[idx] else (float(vals[idx]), n0)
        if val < best_val:
            best_val, best_n, ok = val, n, bool(res.success)
    if strict and not ok:
        raise OptimizerNotConverged(f"simplex refinement stalled at value {best_val:.3e}")
    result = SphereMinimum(best_val, BlochDirection.from_vector(best_n), evals, ok)
    for cb in _observers:
        cb(result)
    return result


def _local_unitaries(ns: np.ndarray) -> np.ndarray:
    u = np.einsum("mk,kab->mab", ns, _SIGMA)
    return np.einsum("mab,cd->macbd", u, np.eye(2)).reshape(-1, 4, 4)


def response_objective(rho, metric: Metric = Metric.TRACE):
    """Batched squared response distance ``n -> D(rho, U rho U^dag)^2``."""
    m = _matrix(rho).astype(complex)
    metric = Metric(metric)

    def batch(ns):
        ns = np.atleast_2d(ns)
        u = _local_unitaries(ns)
        d = m[None] - u @ m @ np.conj(np.transpose(u, (0, 2, 1)))
        if metric is Metric.TRACE:
            return (0.5 * np.abs(np.linalg.eigvalsh(d)).sum(axis=1)) ** 2
        return 0.5 * np.sum(np.abs(d) ** 2, axis=(1, 2))

    return batch


def discord_of_response(rho, metric: Metric = Metric.TRACE, strict: bool = False) -> SphereMinimum:
    """Minimal squared distance between ``rho`` and its image under ``n.sigma (x) I``."""
    batch = response_objective(rho, metric)
    return optimize_over_sphere(lambda n: float(batch(n)[0]), batch, strict=strict)


def pure_entanglement_of_response(psi, strict: bool = False) -> SphereMinimum:
    """Direct minimization for a normalized pure state ``psi`` of 4 amplitudes.

    The squared trace distance between two pure states is ``1 - |<a|b>|^2``.
    """
    psi = np.asarray(psi, dtype=complex).reshape(4)
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise ValueError("pure_entanglement_of_response needs a normalized state")

    def batch(ns):
        u = _local_unitaries(np.atleast_2d(ns))
        amp = np.einsum("a,mab,b->m", psi.conj(), u, psi)
        return 1.0 - np.abs(amp) ** 2

    return optimize_over_sphere(lambda n: float(batch(n)[0]), batch, strict=strict)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureRecord:
    params: ModelParams
    r: float | int
    concurrence: float
    entanglement_of_response: float
    discord_tr: float
    discord_hs: float
    argmin_direction: BlochDirection
    optimizer_evals: int
    converged: bool
    source: str = "freefermion"

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "r": format_size(self.r),
            "concurrence": self.concurrence,
            "E": self.entanglement_of_response,
            "Q_tr": self.discord_tr,
            "Q_hs": self.discord_hs,
            "argmin": asdict(self.argmin_direction),
            "evals": self.optimizer_evals,
            "converged": self.converged,
            "source": self.source,
        }


def measure_state(rho: TwoSiteDensityMatrix, params: ModelParams, r, source: str = "freefermion") -> MeasureRecord:
    c = concurrence(rho)
    tr = discord_of_response(rho, Metric.TRACE)
    hs = discord_of_response(rho, Metric.HILBERT_SCHMIDT)
    return MeasureRecord(
        params=params,
        r=r,
        concurrence=c,
        entanglement_of_response=c * c,
        discord_tr=tr.value,
        discord_hs=hs.value,
        argmin_direction=tr.argmin,
        optimizer_evals=tr.evaluations + hs.evaluations,
        converged=tr.converged and hs.converged,
        source=source,
    )
