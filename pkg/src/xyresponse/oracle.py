"""Exact diagonalization of short periodic chains.

Basis states are bit strings with site 0 as the most significant bit and
bit 0 meaning spin up, which reproduces ``np.kron`` ordering of single-site
operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .correlators import CorrelatorSet
from .density import TwoSiteDensityMatrix, pauli_pair
from .errors import BudgetExceeded, InvalidParameters
from .measures import MeasureRecord, measure_state
from .params import ModelParams, Sector

MAX_SITES = 14
DENSE_GROUND_STATE_MAX = 10
GIBBS_MAX = 12
DEFAULT_BUDGET = 1 << 30  # bytes


@dataclass(frozen=True)
class OracleConfig:
    """An exact-diagonalization problem.

    ``pinning_epsilon`` adds the staggered field ``-eps sum_i (-1)^i sigma^x_i``,
    which selects the antiferromagnetic ground state with ``<sigma^x_0> > 0``.
    """

    N: int
    gamma: float
    h: float
    temperature: float = 0.0
    pinning_epsilon: float = 0.0
    memory_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if not 2 <= self.N <= MAX_SITES:
            raise InvalidParameters(f"oracle chain length must lie in 2..{MAX_SITES}, got {self.N}")
        ModelParams(self.gamma, self.h, self.temperature, self.N)
        if self.pinning_epsilon < 0:
            raise InvalidParameters("pinning_epsilon must be >= 0")
        if self.pinning_epsilon > 0 and self.temperature > 0:
            raise InvalidParameters("pinning field is only supported at temperature 0")

    @property
    def dim(self) -> int:
        return 1 << self.N

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.gamma, self.h, self.temperature, self.N)

    @property
    def pinned(self) -> bool:
        return self.pinning_epsilon > 0

    def dense_bytes(self) -> int:
        return 8 * self.dim * self.dim


def _bits(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1


def sparse_hamiltonian(config: OracleConfig) -> sp.csr_matrix:
    n, g, h, eps = config.N, config.gamma, config.h, config.pinning_epsilon
    dim = config.dim
    idx = np.arange(dim)
    spins = 1 - 2 * _bits(n)  # +1 up, -1 down
    rows, cols, vals = [idx], [idx], [-h * spins.sum(axis=1).astype(float)]
    for i in range(n):
        j = (i + 1) % n
        mask = (1 << (n - 1 - i)) | (1 << (n - 1 - j))
        parallel = spins[:, i] == spins[:, j]
        # xx + yy flip amplitude: gamma for parallel pairs, 1 for antiparallel
        rows.append(idx)
        cols.append(idx ^ mask)
        vals.append(np.where(parallel, g, 1.0))
    if eps > 0:
        for i in range(n):
            rows.append(idx)
            cols.append(idx ^ (1 << (n - 1 - i)))
            vals.append(np.full(dim, -eps * (-1) ** i))
    m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
    return m.tocsr()


def build_hamiltonian(config: OracleConfig) -> np.ndarray:
    """Dense ``2^N x 2^N`` Hamiltonian, pinning field included."""
    if config.dense_bytes() > config.memory_budget:
        raise BudgetExceeded(
            f"dense 2^{config.N} Hamiltonian needs {config.dense_bytes()} bytes, budget {config.memory_budget}"
        )
    return sparse_hamiltonian(config).toarray()


def parity_diagonal(n: int) -> np.ndarray:
    """Eigenvalues of the global phase flip ``prod_i sigma^z_i`` per basis state."""
    return np.where(_bits(n).sum(axis=1) % 2 == 0, 1, -1)


@dataclass(frozen=True)
class GroundState:
    vector: np.ndarray
    energy: float
    parity: int
    parity_crossing: bool


def _lowest(h: sp.csr_matrix, dense: bool):
    if dense or h.shape[0] <= 64:
        w, v = np.linalg.eigh(h.toarray())
        return float(w[0]), v[:, 0]
    w, v = spla.eigsh(h, k=1, which="SA", tol=1e-14, ncv=min(h.shape[0], 40))
    return float(w[0]), v[:, 0]


@lru_cache(maxsize=32)
def ground_state_info(config: OracleConfig) -> GroundState:
    """Lowest eigenvector; unpinned chains are restricted to even phase-flip parity.

    ``parity_crossing`` flags that the odd sector holds a strictly lower level.
    """
    h = sparse_hamiltonian(config)
    dense = config.N <= DENSE_GROUND_STATE_MAX
    if not dense and config.N > MAX_SITES:
        raise BudgetExceeded("chain too long for the oracle")
    if config.pinned:
        e, v = _lowest(h, dense)
        return GroundState(_fix_phase(v), e, 0, False)
    par = parity_diagonal(config.N)
    levels = {}
    for p in (1, -1):
        sel = np.flatnonzero(par == p)
        e, v = _lowest(h[sel][:, sel], dense)
        full = np.zeros(config.dim)
        full[sel] = v
        levels[p] = (e, full)
    e_even, v_even = levels[1]
    crossing = levels[-1][0] < e_even - 1e-12
    return GroundState(_fix_phase(v_even), e_even, 1, bool(crossing))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * math.copysign(1.0, v[k]) / np.linalg.norm(v)


def ground_state(config: OracleConfig) -> np.ndarray:
    return ground_state_info(config).vector


@lru_cache(maxsize=32)
def gibbs_state(config: OracleConfig) -> np.ndarray:
    """``exp(-H/T) / Z`` from the full spectrum, block diagonal in parity."""
    if config.N > GIBBS_MAX:
        raise BudgetExceeded(f"Gibbs states need full spectra; N <= {GIBBS_MAX}")
    if config.temperature == 0:
        v = ground_state(config)
        return np.outer(v, v)
    h = sparse_hamiltonian(config)
    if config.dense_bytes() > config.memory_budget:
        raise BudgetExceeded("dense Gibbs state exceeds the memory budget")
    par = parity_diagonal(config.N)
    blocks = []
    for p in (1, -1):
        sel = np.flatnonzero(par == p)
        w, v = np.linalg.eigh(h[sel][:, sel].toarray())
        blocks.append((sel, w, v))
    e0 = min(b[1][0] for b in blocks)
    rho = np.zeros((config.dim, config.dim))
    z = 0.0
    for sel, w, v in blocks:
        p = np.exp(-(w - e0) / config.temperature)
        z += p.sum()
        rho[np.ix_(sel, sel)] = (v * p) @ v.T
    return rho / z


def reduce_to_pair(state, i: int, j: int, params: ModelParams | None = None, sector=Sector.SYMMETRIC,
                   r=None) -> TwoSiteDensityMatrix:
    """Two-site marginal of a pure state (vector) or a density matrix."""
    state = np.asarray(state)
    if i == j:
        raise InvalidParameters("reduce_to_pair needs two distinct sites")
    pure = state.ndim == 1
    n = int(round(math.log2(state.shape[0])))
    if pure:
        t = np.moveaxis(state.reshape((2,) * n), (i, j), (0, 1)).reshape(4, -1)
        m = t @ t.conj().T
    else:
        t = state.reshape((2,) * (2 * n))
        t = np.moveaxis(t, (i, j, n + i, n + j), (0, 1, 2, 3)).reshape(4, 4, -1, 1 << (n - 2))
        m = np.einsum("abkk->ab", t.reshape(4, 4, 1 << (n - 2), 1 << (n - 2)))
    m = np.real_if_close(0.5 * (m + m.conj().T))
    if r is None:
        r = (j - i) % n
    return TwoSiteDensityMatrix(np.asarray(m, dtype=float), Sector(sector), r, params)


def oracle_rho(config: OracleConfig, r: int) -> TwoSiteDensityMatrix:
    if not 1 <= r < config.N:
        raise InvalidParameters(f"separation must lie in 1..{config.N - 1}")
    sector = Sector.BROKEN if config.pinned else Sector.SYMMETRIC
    state = ground_state(config) if config.temperature == 0 else gibbs_state(config)
    return reduce_to_pair(state, 0, r, config.params, sector, r)


def correlators_from_rho(rho: TwoSiteDensityMatrix, params: ModelParams, r) -> CorrelatorSet:
    e = rho.expectation
    broken = rho.sector is Sector.BROKEN
    return CorrelatorSet(
        sz=e("z", "0"),
        xx=e("x", "x"),
        yy=e("y", "y"),
        zz=e("z", "z"),
        r=r,
        params=params,
        mx=e("x", "0") if broken else 0.0,
        xz=e("x", "z") if broken else 0.0,
        zx=e("z", "x") if broken else 0.0,
        sector=rho.sector,
    )


def oracle_correlators(config: OracleConfig, r: int) -> CorrelatorSet:
    return correlators_from_rho(oracle_rho(config, r), config.params, r)


def oracle_contraction(config: OracleConfig, k: int) -> float:
    """``<B_0 A_k>`` of the rotated chain, read off the exact state."""
    n = config.N
    if not 0 <= abs(k) < n:
        raise InvalidParameters("offset must satisfy |k| < N")
    state = ground_state(config) if config.temperature == 0 else gibbs_state(config)
    a, b = majorana_operators(n)
    op = b[0] @ a[k % n] if k >= 0 else b[-k % n] @ a[0]
    # rotation of odd sites maps A_j, B_j -> (-1)^j A_j, (-1)^j B_j in the AF chain
    sign = (-1) ** (abs(k) % 2)
    if state.ndim == 1:
        val = state @ op @ state
    else:
        val = np.trace(op @ state)
    return float(np.real(val)) * sign


@lru_cache(maxsize=4)
def majorana_operators(n: int):
    """Dense Jordan-Wigner Majoranas ``A_j = prod_{l<j} sigma^z_l sigma^x_j`` and
    ``B_j = prod_{l<j} sigma^z_l (-i sigma^y_j)``."""
    from functools import reduce

    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    isy = np.array([[0.0, 1.0], [-1.0, 0.0]])  # i sigma^y, real
    eye = np.eye(2)

    def chain(j, last):
        return reduce(np.kron, [sz] * j + [last] + [eye] * (n - j - 1))

    return [chain(j, sx) for j in range(n)], [chain(j, -isy) for j in range(n)]


def oracle_measures(config: OracleConfig, r: int) -> MeasureRecord:
    return measure_state(oracle_rho(config, r), config.params, r, source="oracle")


def pinned_extrapolation(gamma: float, h: float, r: int, N: int = 12, epsilons=(0.05, 0.02, 0.01)):
    """Broken-sector correlators from pinned chains extrapolated to zero field.

    A polynomial through the pinned values in ``epsilon`` is evaluated at 0.
    """
    eps = np.asarray(epsilons, dtype=float)
    rows = []
    for e in eps:
        c = oracle_correlators(OracleConfig(N, gamma, h, pinning_epsilon=float(e)), r)
        rows.append([c.sz, c.xx, c.yy, c.zz, c.mx, c.xz, c.zx])
    rows = np.array(rows)
    coeffs = np.polyfit(eps, rows, len(eps) - 1)
    at0 = coeffs[-1]
    keys = ("sz", "xx", "yy", "zz", "mx", "xz", "zx")
    return dict(zip(keys, map(float, at0)))
