r"""Spin correlation functions of the periodic transverse-field XY chain.

The chain is

.. math::

    H = \sum_i \tfrac{1+\gamma}{2}\sigma^x_i\sigma^x_{i+1}
        + \tfrac{1-\gamma}{2}\sigma^y_i\sigma^y_{i+1} - h\sigma^z_i ,

mapped by Jordan-Wigner onto free fermions with Majorana operators
:math:`A_j = c_j^\dagger + c_j`, :math:`B_j = c_j^\dagger - c_j`. All spin
correlators reduce to the contraction :math:`G(k) = \langle B_j A_{j+k}\rangle`
of the ferromagnetically rotated chain (odd sites rotated by pi about z). The
antiferromagnetic sign is restored through sublattice factors
:math:`(-1)^r` on every operator with an x or y component at an odd site.
Sign and index conventions are documented in ``docs/conventions.md``.

Finite chains at zero temperature are evaluated in the even-parity
(antiperiodic-fermion) sector. Finite chains at nonzero temperature use the
exact parity-projected Gibbs state, a signed mixture of four Gaussian terms.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from . import linalg
from .errors import ConvergenceFailure, InvalidParameters, PfaffianDegeneracy
from .params import INF, ModelParams, Sector, is_infinite
from .quadrature import integrate

#: Absolute tolerance of the thermodynamic-limit momentum integrals.
QUADRATURE_TOL = 1e-10
#: Relaxed tolerance used within ``CRITICAL_WINDOW`` of h = 1.
QUADRATURE_TOL_CRITICAL = 1e-8
CRITICAL_WINDOW = 1e-2

#: r-doubling schedule for asymptotic (r = inf) limits.
LIMIT_START = 16
LIMIT_CAP = 512
LIMIT_TOL = 1e-8

_ZERO_MODE = 1e-10


@dataclass(frozen=True)
class Conventions:
    """Sign and index conventions of the Jordan-Wigner reduction.

    Frozen by agreement with exact diagonalization; only the oracle self-check
    ever swaps them (to confirm that a corrupted convention is detected).
    """

    pairing_sign: float = 1.0
    xx_shift: int = 1
    yy_shift: int = -1
    staggered: bool = True


_conventions = Conventions()


def current_conventions() -> Conventions:
    return _conventions


@contextlib.contextmanager
def use_conventions(conv: Conventions):
    global _conventions
    previous = _conventions
    _conventions = conv
    _ensemble.cache_clear()
    try:
        yield
    finally:
        _conventions = previous
        _ensemble.cache_clear()


def _stagger(r) -> float:
    if not _conventions.staggered or is_infinite(r):
        return 1.0
    return -1.0 if int(r) % 2 else 1.0


# ---------------------------------------------------------------------------
# single-mode building blocks


def dispersion(phi, params: ModelParams):
    """Single-mode energy scale ``sqrt((cos phi - h)^2 + gamma^2 sin^2 phi)``.

    Quasiparticle excitation energies of the chain are twice this value.
    """
    phi = np.asarray(phi, dtype=float)
    w = np.sqrt((np.cos(phi) - params.h) ** 2 + (params.gamma * np.sin(phi)) ** 2)
    return float(w) if w.ndim == 0 else w


def thermal_factor(energy, temperature):
    """Occupation weight ``tanh(energy / 2T)``; 1 at T = 0 (also for zero energy)."""
    energy = np.asarray(energy, dtype=float)
    if np.any(energy < 0):
        raise InvalidParameters("thermal_factor needs energy >= 0")
    if temperature < 0:
        raise InvalidParameters("thermal_factor needs temperature >= 0")
    if temperature == 0:
        out = np.ones_like(energy)
    else:
        out = np.tanh(energy / (2.0 * temperature))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# contraction tables


@dataclass(frozen=True)
class ContractionTable:
    """Values of ``G(k)`` for ``-kmax <= k <= kmax``."""

    params: ModelParams
    values: np.ndarray = field(repr=False)
    quadrature_tolerance: float = 0.0

    @property
    def kmax(self) -> int:
        return (len(self.values) - 1) // 2

    def __call__(self, k: int) -> float:
        k = int(k)
        if abs(k) > self.kmax:
            raise IndexError(f"offset {k} outside table range +-{self.kmax}")
        return float(self.values[k + self.kmax])

    @property
    def entries(self) -> dict[int, float]:
        return {k: self(k) for k in range(-self.kmax, self.kmax + 1)}


def _mode_terms(phis, params: ModelParams, ks, weight_fn):
    """Contributions ``-(1/N) [cos(k phi)(h - cos phi) - s gamma sin(k phi) sin phi] F / w``.

    Modes without pairing partner (``gamma sin phi == 0``) are diagonal in
    the plain fermions; they carry the signed energy ``h - cos phi`` and the
    ratio ``(h - cos phi) / w`` is identically one.
    Returns ``(terms[k_index, mode], x)`` where ``x = w / T`` (signed for
    unpaired modes) and ``weight_fn(x, w_signed)`` supplies ``F``.
    """
    g, h = params.gamma, params.h
    s = _conventions.pairing_sign
    sin, cos = np.sin(phis), np.cos(phis)
    unpaired = np.abs(g * sin) < 1e-14
    w_abs = np.sqrt((cos - h) ** 2 + (g * sin) ** 2)
    w = np.where(unpaired, h - cos, w_abs)
    ratio_diag = np.where(unpaired, 1.0, np.divide(h - cos, w_abs, out=np.zeros_like(w), where=w_abs > 0))
    ratio_pair = np.where(unpaired, 0.0, np.divide(g * sin, w_abs, out=np.zeros_like(w), where=w_abs > 0))
    F = weight_fn(w)
    kp = np.outer(ks, phis)
    terms = -(np.cos(kp) * ratio_diag - s * np.sin(kp) * ratio_pair) * F
    return terms, w


def momentum_grid(n: int, periodic: bool) -> np.ndarray:
    j = np.arange(n)
    return 2 * np.pi * j / n if periodic else np.pi * (2 * j + 1) / n


@dataclass(frozen=True)
class _GaussianTerm:
    """One Gaussian contribution ``sign * exp(log_weight) * X`` to the state.

    ``regular + c * singular`` is the contraction table with ``c`` the (divergent)
    coth factor of ``zero_modes`` exactly-zero-energy modes in a parity-twisted
    trace. Observables are then read off the leading coefficient in ``c``.
    """

    log_weight: float
    sign: float
    regular: np.ndarray
    singular: np.ndarray | None = None
    zero_modes: int = 0

    def evaluate(self, functional, params: ModelParams) -> float:
        if not self.zero_modes:
            return functional(ContractionTable(params, self.regular))
        m = self.zero_modes
        # m-th forward difference at unit step / m! = leading coefficient
        total = 0.0
        for d in range(m + 1):
            coeff = (-1) ** (m - d) * math.comb(m, d) / math.factorial(m)
            total += coeff * functional(ContractionTable(params, self.regular + d * self.singular))
        return total

    def norm(self) -> float:
        return 0.0 if self.zero_modes else 1.0


@dataclass(frozen=True)
class _Ensemble:
    params: ModelParams
    terms: tuple[_GaussianTerm, ...]
    kmax: int
    tolerance: float

    def expect(self, functional) -> float:
        if len(self.terms) == 1:
            return self.terms[0].evaluate(functional, self.params)
        top = max(t.log_weight for t in self.terms)
        num = den = 0.0
        for t in self.terms:
            scale = t.sign * math.exp(t.log_weight - top)
            if scale == 0.0:
                continue
            den += scale * t.norm()
            num += scale * t.evaluate(functional, self.params)
        return num / den

    def average_table(self) -> ContractionTable:
        values = np.array([self.expect(lambda t, k=k: t(k)) for k in range(-self.kmax, self.kmax + 1)])
        return ContractionTable(self.params, values, self.tolerance)


def _finite_terms(params: ModelParams, kmax: int) -> tuple[_GaussianTerm, ...]:
    n = int(params.size)
    ks = np.arange(-kmax, kmax + 1)
    if params.temperature == 0.0:
        phis = momentum_grid(n, periodic=False)
        terms, _ = _mode_terms(phis, params, ks, lambda w: np.sign(w))
        return (_GaussianTerm(0.0, 1.0, terms.sum(axis=1) / n),)
    beta = params.beta
    out = []
    for periodic in (False, True):
        phis = momentum_grid(n, periodic)
        for twisted in (False, True):
            if not twisted:
                terms, w = _mode_terms(phis, params, ks, lambda w: np.tanh(beta * w))
                x = np.abs(beta * w)
                log_w = float(np.sum(x + np.log1p(np.exp(-2 * x))))
                out.append(_GaussianTerm(log_w, 1.0, terms.sum(axis=1) / n))
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                terms, w = _mode_terms(phis, params, ks, lambda w: 1.0 / np.tanh(beta * w))
            x = beta * w
            zero = np.abs(x) < _ZERO_MODE
            unit, _ = _mode_terms(phis, params, ks, lambda w: np.ones_like(w))
            ax = np.abs(x[~zero])
            log_w = float(np.sum(ax + np.log(-np.expm1(-2 * ax)))) + zero.sum() * math.log(2.0)
            sign = float(np.prod(np.sign(x[~zero])))
            if periodic:
                sign = -sign
            regular = terms[:, ~zero].sum(axis=1) / n
            singular = unit[:, zero].sum(axis=1) / n
            out.append(_GaussianTerm(log_w, sign, regular, singular, int(zero.sum())))
    return tuple(out)


def _quadrature_tol(params: ModelParams) -> float:
    return QUADRATURE_TOL_CRITICAL if abs(params.h - 1.0) < CRITICAL_WINDOW else QUADRATURE_TOL


def _infinite_table(params: ModelParams, kmax: int) -> np.ndarray:
    g, h, beta = params.gamma, params.h, params.beta
    s = _conventions.pairing_sign
    kk = np.arange(kmax + 1)

    def integrand(phi):
        cos, sin = np.cos(phi), np.sin(phi)
        w = np.sqrt((cos - h) ** 2 + (g * sin) ** 2)
        safe = np.where(w > 0, w, 1.0)
        if math.isinf(beta):
            F = np.ones_like(w)
            a = np.where(w > 0, (h - cos) / safe, 0.0)
            b = np.where(w > 0, g * sin / safe, 0.0)
        else:
            F = np.where(w > 0, np.tanh(beta * w) / safe, beta)
            a = (h - cos) * F
            b = g * sin * F
        kp = np.outer(phi, kk)
        return np.concatenate([np.cos(kp) * a[:, None], np.sin(kp) * b[:, None]], axis=1) / np.pi

    breaks = []
    if g == 0.0 and h < 1.0:
        breaks.append(math.acos(h))
    tol = _quadrature_tol(params)
    res = integrate(integrand, 0.0, math.pi, tol=tol, breakpoints=breaks, initial_panels=max(8, kmax // 4))
    cos_part, sin_part = res.value[: kmax + 1], res.value[kmax + 1 :]
    values = np.empty(2 * kmax + 1)
    for k in range(-kmax, kmax + 1):
        values[k + kmax] = -(cos_part[abs(k)] - s * math.copysign(1.0, k) * sin_part[abs(k)])
    return values


def _table_size(kmax: int) -> int:
    return max(8, 1 << max(0, int(math.ceil(math.log2(max(kmax, 1))))))


@lru_cache(maxsize=512)
def _ensemble(params: ModelParams, kmax: int) -> _Ensemble:
    params = params.symmetric()
    if params.infinite:
        values = _infinite_table(params, kmax)
        term = _GaussianTerm(0.0, 1.0, values)
        return _Ensemble(params, (term,), kmax, _quadrature_tol(params))
    if int(params.size) % 2:
        raise InvalidParameters("the free-fermion pipeline needs an even chain length")
    return _Ensemble(params, _finite_terms(params, kmax), kmax, 0.0)


def ensemble(params: ModelParams, kmax: int) -> _Ensemble:
    return _ensemble(params.symmetric(), _table_size(kmax))


def contraction_table(params: ModelParams, kmax: int = 8) -> ContractionTable:
    """Physical contractions ``<B_0 A_k>`` for ``|k| <= kmax``."""
    return ensemble(params, kmax).average_table()


def g_contraction(k: int, params: ModelParams) -> float:
    ens = ensemble(params, abs(int(k)) + 1)
    return ens.expect(lambda t: t(k))


# ---------------------------------------------------------------------------
# correlators as functionals of a contraction table


def _check_separation(r, params: ModelParams):
    if is_infinite(r):
        return
    if int(r) != r or r < 1:
        raise InvalidParameters(f"separation must be a positive integer or inf, got {r}")
    if not params.infinite and r >= params.size:
        raise InvalidParameters(f"separation {r} must be smaller than the chain length {params.size}")


def _sz(t: ContractionTable) -> float:
    return -t(0)


def _xx(t: ContractionTable, r: int) -> float:
    return linalg.toeplitz_determinant(t, r, _conventions.xx_shift)


def _yy(t: ContractionTable, r: int) -> float:
    return linalg.toeplitz_determinant(t, r, _conventions.yy_shift)


def _zz(t: ContractionTable, r: int) -> float:
    return t(0) ** 2 - t(r) * t(-r)


def majorana_expectation(t: ContractionTable, string) -> float:
    """Wick expectation of an ordered product of Majoranas ``[("A"|"B", site), ...]``.

    Contractions: ``<A_i A_j> = delta_ij``, ``<B_i B_j> = -delta_ij``,
    ``<B_i A_j> = G(j - i)``, ``<A_i B_j> = -G(i - j)``.
    """
    n = len(string)
    m = np.zeros((n, n))
    for a in range(n):
        ta, sa = string[a]
        for b in range(a + 1, n):
            tb, sb = string[b]
            if ta == tb:
                v = (1.0 if ta == "A" else -1.0) if sa == sb else 0.0
            elif ta == "B":
                v = t(sb - sa)
            else:
                v = -t(sa - sb)
            m[a, b] = v
            m[b, a] = -v
    return linalg.pfaffian(m)


def x_string(start: int, stop: int, skip=()) -> list:
    """Majorana string of ``sigma^x_start sigma^x_stop`` (rotated frame), with the
    ``sigma^z`` sites in ``skip`` absorbed."""
    out = []
    for l in range(start, stop):
        out.append(("B", l))
        out.append(("A", l + 1))
    # sigma^z_m = A_m B_m cancels the adjacent (A_m, B_m) pair of the string
    for m_ in skip:
        if not start < m_ < stop:
            raise ValueError("sigma^z insertion must lie strictly inside the string")
        i = out.index(("A", m_))
        assert out[i + 1] == ("B", m_)
        del out[i : i + 2]
    return out


def _three_point(t: ContractionTable, z_site: int, stop: int) -> float:
    """``<sigma^x_0 sigma^z_m sigma^x_R>`` in the rotated (ferromagnetic) frame."""
    return majorana_expectation(t, x_string(0, stop, skip=(z_site,)))


# ---------------------------------------------------------------------------
# public correlators


def transverse_magnetization(params: ModelParams) -> float:
    return ensemble(params, 1).expect(_sz)


def xx_correlator(r, params: ModelParams) -> float:
    _check_separation(r, params)
    if is_infinite(r):
        return _limit(params, lambda t, rr: _xx(t, rr))
    r = int(r)
    return _stagger(r) * ensemble(params, r + 1).expect(lambda t: _xx(t, r))


def yy_correlator(r, params: ModelParams) -> float:
    _check_separation(r, params)
    if is_infinite(r):
        return _limit(params, lambda t, rr: _yy(t, rr))
    r = int(r)
    return _stagger(r) * ensemble(params, r + 1).expect(lambda t: _yy(t, r))


def zz_correlator(r, params: ModelParams) -> float:
    _check_separation(r, params)
    if is_infinite(r):
        return _limit(params, lambda t, rr: _zz(t, rr))
    r = int(r)
    return ensemble(params, r + 1).expect(lambda t: _zz(t, r))


def _doubling(f, start: int = LIMIT_START, cap: int = LIMIT_CAP, tol: float = LIMIT_TOL, what="limit"):
    prev = f(start)
    r = start
    change = math.inf
    while r < cap:
        r *= 2
        cur = f(r)
        change = abs(cur - prev)
        if change < tol:
            return cur
        prev = cur
    raise ConvergenceFailure(f"{what} not converged to {tol:g} by r = {cap} (last change {change:.2e})")


def _limit(params: ModelParams, functional, what="r -> inf limit") -> float:
    if not params.infinite:
        raise InvalidParameters("r = inf requires an infinite chain")
    # even separations: the antiferromagnetic sublattice sign is +1
    return _doubling(lambda r: ensemble(params, r + 2).expect(lambda t: functional(t, r)), what=what)


def spontaneous_magnetization(params: ModelParams) -> float:
    """Staggered order parameter ``m_x = (-1)^i <sigma^x_i>`` of the broken ground state.

    Obtained from the cluster limit of the symmetric-sector ``xx`` correlator;
    zero outside the ordered phase.
    """
    if not params.infinite or params.temperature != 0.0:
        raise InvalidParameters("spontaneous magnetization needs N = inf and T = 0")
    if params.h >= 1.0 or params.gamma == 0.0:
        return 0.0
    m2 = _spontaneous_m2(params.symmetric())
    return math.sqrt(max(m2, 0.0))


@lru_cache(maxsize=256)
def _spontaneous_m2(params: ModelParams) -> float:
    return _limit(params, lambda t, r: _xx(t, r), what="spontaneous magnetization")


def _broken_prefactor(params: ModelParams) -> float:
    if params.sector is not Sector.BROKEN:
        raise InvalidParameters("mixed x-z correlators are defined in the broken sector only")
    m = spontaneous_magnetization(params)
    if m < 1e-8:
        raise PfaffianDegeneracy("order parameter vanishes; asymptotic factorization is degenerate")
    return m


@lru_cache(maxsize=1024)
def _xz_rotated(params: ModelParams, r: int, z_first: bool) -> float:
    m = _broken_prefactor(params)
    if z_first:
        # <sigma^x_{-R} sigma^z_0 sigma^x_r>, translated by R
        f = lambda big: ensemble(params, big + r + 2).expect(lambda t: _three_point(t, big, big + r))
    else:
        f = lambda big: ensemble(params, big + 2).expect(lambda t: _three_point(t, r, big))
    start = max(LIMIT_START, 1 << int(math.ceil(math.log2(r + 2))))
    return _doubling(f, start=start, what="three-point cluster limit") / m


def xz_correlator(r, params: ModelParams) -> float:
    """``<sigma^x_i sigma^z_{i+r}>`` in the broken sector, site i on the even sublattice."""
    _check_separation(r, params)
    if is_infinite(r):
        return spontaneous_magnetization(params) * transverse_magnetization(params)
    return _xz_rotated(params, int(r), False)


def zx_correlator(r, params: ModelParams) -> float:
    """``<sigma^z_i sigma^x_{i+r}>`` in the broken sector, site i on the even sublattice."""
    _check_separation(r, params)
    if is_infinite(r):
        return spontaneous_magnetization(params) * transverse_magnetization(params)
    return _stagger(int(r)) * _xz_rotated(params, int(r), True)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelatorSet:
    """One- and two-point functions for the pair (i, i + r), i on the even sublattice.

    ``mx`` is the site-i value of ``<sigma^x>``; the partner site carries the
    sublattice sign, see :attr:`mx_partner`. For ``r = inf`` the even-r limit
    is reported.
    """

    sz: float
    xx: float
    yy: float
    zz: float
    r: float | int
    params: ModelParams
    mx: float = 0.0
    xz: float = 0.0
    zx: float = 0.0
    sector: Sector | None = None

    def __post_init__(self):
        if self.sector is None:
            object.__setattr__(self, "sector", self.params.sector)

    @property
    def mx_partner(self) -> float:
        return _stagger(self.r) * self.mx

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("sz", "xx", "yy", "zz", "mx", "xz", "zx")}


def correlator_set(r, params: ModelParams) -> CorrelatorSet:
    _check_separation(r, params)
    sym = params.symmetric()
    base = dict(
        sz=transverse_magnetization(sym),
        xx=xx_correlator(r, sym),
        yy=yy_correlator(r, sym),
        zz=zz_correlator(r, sym),
        r=r,
        params=params,
    )
    if params.sector is Sector.BROKEN:
        if is_infinite(r):
            m = spontaneous_magnetization(params)
            base.update(xx=m * m, yy=0.0, zz=base["sz"] ** 2)
        base.update(
            mx=spontaneous_magnetization(params),
            xz=xz_correlator(r, params),
            zx=zx_correlator(r, params),
        )
    return CorrelatorSet(**base)


def sector_energy(params: ModelParams) -> float:
    """Ground energy of the even-parity sector of a finite chain, ``-sum_k w(k)``."""
    if params.infinite:
        raise InvalidParameters("sector energy is defined for finite chains")
    phis = momentum_grid(int(params.size), periodic=False)
    return -float(np.sum(dispersion(phis, params)))


def free_fermion_spectrum(params: ModelParams) -> np.ndarray:
    """All 2^N many-body levels reconstructed from both parity sectors."""
    n = int(params.size)
    levels = []
    for periodic, parity in ((False, 0), (True, 1)):
        phis = momentum_grid(n, periodic)
        sin = np.sin(phis)
        unpaired = np.abs(params.gamma * sin) < 1e-14
        w = np.where(unpaired, params.h - np.cos(phis), dispersion(phis, params))
        for occ in product((0, 1), repeat=n):
            if sum(occ) % 2 != parity:
                continue
            levels.append(float(np.sum(w * (2 * np.array(occ) - 1))))
    return np.sort(np.array(levels))
