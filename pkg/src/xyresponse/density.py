"""Two-site reduced density matrices and their diagnostics.

Basis ordering is ``|uu>, |ud>, |du>, |dd>`` with the site-i spin first and
``sigma^z |u> = +|u>``.
"""

from __future__ import annotations

import contextlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .correlators import CorrelatorSet
from .errors import DegenerateAngle, PositivityViolation
from .params import ModelParams, Sector, format_size, is_infinite, parse_size

BASIS = ("uu", "ud", "du", "dd")

PAULI = {
    "0": np.eye(2),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "y": np.array([[0.0, -1j], [1j, 0.0]]),
    "z": np.diag([1.0, -1.0]),
}

#: entries allowed to be nonzero in a phase-flip symmetric (X) state
X_MASK = np.eye(4, dtype=bool) | np.fliplr(np.eye(4, dtype=bool))

CLAMP_LIMIT = 1e-6

_observers: list = []


@contextlib.contextmanager
def observe(callback):
    """Call ``callback(rho)`` for every matrix produced by :func:`build_rho`."""
    _observers.append(callback)
    try:
        yield
    finally:
        _observers.remove(callback)


def pauli_pair(a: str, b: str) -> np.ndarray:
    return np.kron(PAULI[a], PAULI[b])


@dataclass(frozen=True)
class TwoSiteDensityMatrix:
    elements: np.ndarray = field(repr=False)
    sector: Sector = Sector.SYMMETRIC
    r: float | int = 1
    params: ModelParams | None = None

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.elements, dtype=dtype)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.elements)

    @property
    def purity(self) -> float:
        return float(np.trace(self.elements @ self.elements).real)

    def expectation(self, a: str, b: str) -> float:
        return float(np.trace(self.elements @ pauli_pair(a, b)).real)

    def is_x_state(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.elements[~X_MASK]) <= tol))

    def check(self, tol: float = 1e-12) -> None:
        """Raise ``AssertionError`` unless Hermitian, unit-trace and PSD."""
        m = self.elements
        assert np.max(np.abs(m - m.conj().T)) <= tol, "not Hermitian"
        assert abs(np.trace(m).real - 1.0) <= tol, "trace differs from 1"
        assert self.eigenvalues.min() >= -1e-10, "not positive semidefinite"
        if self.sector is Sector.SYMMETRIC:
            assert self.is_x_state(tol), "symmetric-sector state is not an X-state"

    def to_json(self) -> str:
        return json.dumps(
            {
                "basis": list(BASIS),
                "elements": [float(v) for v in np.real(self.elements).ravel()],
                "sector": self.sector.value,
                "r": format_size(self.r),
                "params": None if self.params is None else self.params.to_dict(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "TwoSiteDensityMatrix":
        d = json.loads(text)
        if tuple(d["basis"]) != BASIS:
            raise ValueError(f"unsupported basis ordering {d['basis']}")
        params = None if d.get("params") is None else ModelParams.from_dict(d["params"])
        return cls(
            np.array(d["elements"], dtype=float).reshape(4, 4),
            Sector(d["sector"]),
            parse_size(d["r"]),
            params,
        )


def _stabilize(m: np.ndarray) -> np.ndarray:
    """Clamp rounding-level negative eigenvalues and restore unit trace."""
    w, v = np.linalg.eigh(m)
    if w.min() < -CLAMP_LIMIT:
        raise PositivityViolation(
            f"density matrix has eigenvalue {w.min():.3e} < -{CLAMP_LIMIT:g}; "
            "correlators are mutually inconsistent"
        )
    if w.min() >= 0.0:
        return m
    w = np.clip(w, 0.0, None)
    out = (v * (w / w.sum())) @ v.T
    return 0.5 * (out + out.T)


def build_rho(c: CorrelatorSet) -> TwoSiteDensityMatrix:
    """``rho = 1/4 sum_ab <sigma^a_i sigma^b_j> sigma^a (x) sigma^b``."""
    coeffs = {
        ("0", "0"): 1.0,
        ("z", "0"): c.sz,
        ("0", "z"): c.sz,
        ("x", "x"): c.xx,
        ("y", "y"): c.yy,
        ("z", "z"): c.zz,
    }
    if c.sector is Sector.BROKEN:
        coeffs.update(
            {
                ("x", "0"): c.mx,
                ("0", "x"): c.mx_partner,
                ("x", "z"): c.xz,
                ("z", "x"): c.zx,
            }
        )
    m = np.zeros((4, 4))
    for (a, b), v in coeffs.items():
        m += 0.25 * v * pauli_pair(a, b).real
    m = _stabilize(m)
    if c.sector is Sector.SYMMETRIC:
        m = np.where(X_MASK, m, 0.0)
    rho = TwoSiteDensityMatrix(m, c.sector, c.r, c.params)
    for cb in _observers:
        cb(rho)
    return rho


def classical_pointer_angle(c: CorrelatorSet) -> float:
    """Angle of the local pointer observable ``cos(b) sigma^z + sin(b) sigma^x``."""
    if abs(c.mx) < 1e-12 and abs(c.sz) < 1e-12:
        raise DegenerateAngle("both <sigma^x> and <sigma^z> vanish; pointer angle undefined")
    return math.atan2(c.mx, c.sz)


def _pointer_basis(beta: float) -> np.ndarray:
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    return np.array([[c, -s], [s, c]])


def classicality_defect(rho: TwoSiteDensityMatrix, beta: float) -> float:
    """Distance of ``rho`` from its dephased version in the pointer product basis.

    Site i uses ``O_i = cos(beta) sigma^z + sin(beta) sigma^x``; site j uses the
    sublattice-mirrored angle ``(-1)^r beta``. The Frobenius norm of the
    off-diagonal part of ``rho`` in the product eigenbasis is returned, which
    vanishes iff ``rho`` is a classical mixture of ``O_i O_j`` eigenvectors.
    """
    r = rho.r
    beta_j = beta if is_infinite(r) or int(r) % 2 == 0 else -beta
    u = np.kron(_pointer_basis(beta), _pointer_basis(beta_j))
    rot = u.T @ np.asarray(rho.elements) @ u
    off = rot - np.diag(np.diag(rot))
    return float(np.linalg.norm(off))
