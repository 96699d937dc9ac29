"""End-to-end evaluation: parameters -> correlators -> density matrix -> measures.

Also hosts the scaling pipelines that combine sweeps with the fits of
:mod:`xyresponse.scaling`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correlators import correlator_set
from .density import TwoSiteDensityMatrix, build_rho
from .measures import (
    MeasureRecord,
    Metric,
    concurrence,
    discord_of_response,
    measure_state,
)
from .params import CRITICAL_FIELD, ModelParams
from .scaling import (
    Abscissa,
    FitResult,
    Series,
    critical_exponent,
    exp_decay_fit,
    locate_extremum,
    log_linear_fit,
    numeric_derivative,
)

#: Extremum search windows in h: the entanglement derivative has its maximum
#: above the critical shoulder, the discord derivative its minimum below.
PEAK_WINDOWS = {"E": ((0.97, 1.1), "max"), "Q": ((0.9, 1.03), "min")}
COARSE_STEP = 2.5e-3
FINE_STEP = 1e-3
FINE_HALF_WIDTH = 6
#: Thermodynamic-limit fit windows in |h_c - h|. Below h_c the discord minimizer
#: switches branch near its maximum (|h_c - h| ~ 0.03 at gamma = 0.5), so the
#: discord window stops short of it.
TL_WINDOWS = {"E": (1e-3, 5e-2), "Q": (1e-3, 2e-2)}


def density_matrix(params: ModelParams, r) -> TwoSiteDensityMatrix:
    return build_rho(correlator_set(r, params))


def measure_point(params: ModelParams, r) -> MeasureRecord:
    return measure_state(density_matrix(params, r), params, r)


def entanglement(params: ModelParams, r=1) -> float:
    return concurrence(density_matrix(params, r)) ** 2


def discord(params: ModelParams, r=1, metric: Metric = Metric.TRACE) -> float:
    return discord_of_response(density_matrix(params, r), metric).value


MEASURES = {"E": entanglement, "Q": discord}


def measure_function(name: str):
    try:
        return MEASURES[name]
    except KeyError:
        raise ValueError(f"unknown measure {name!r}; choose from {sorted(MEASURES)}") from None


def field_series(measure: str, base: ModelParams, hs, r=1) -> Series:
    f = measure_function(measure)
    hs = np.asarray(hs, dtype=float)
    return Series(hs, [f(base.with_(h=float(h)), r) for h in hs], measure)


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


@dataclass(frozen=True)
class Peak:
    N: float | int
    h_m: float
    value: float
    derivative: Series = field(repr=False)


def derivative_peak(measure: str, gamma: float, N, window=None, kind=None, r=1, temperature=0.0,
                    coarse_step: float = COARSE_STEP, fine_step: float = FINE_STEP) -> Peak:
    """Extremum of ``d y / d h`` near the critical field for chain length ``N``.

    A coarse scan brackets the extremum; a fine grid of step ``fine_step``
    with a half-step companion then gives a Richardson derivative whose
    extremum is refined parabolically.
    """
    default_window, default_kind = PEAK_WINDOWS[measure]
    window = window or default_window
    kind = kind or default_kind
    base = ModelParams(gamma, window[0], temperature, N)
    coarse = field_series(measure, base, _grid(window[0], window[1], coarse_step), r)
    dcoarse = numeric_derivative(coarse)
    h0, _ = locate_extremum(dcoarse, kind)
    lo = h0 - FINE_HALF_WIDTH * fine_step
    fine_x = _grid(lo, lo + 2 * FINE_HALF_WIDTH * fine_step, fine_step)
    half_x = _grid(lo, lo + 2 * FINE_HALF_WIDTH * fine_step, 0.5 * fine_step)
    half = field_series(measure, base, half_x, r)
    fine = Series(half.x[::2], half.y[::2], measure)
    assert np.allclose(fine.x, fine_x)
    d = numeric_derivative(fine, half)
    h_m, value = locate_extremum(d, kind)
    return Peak(N, h_m, value, d)


def thermodynamic_derivative(measure: str, gamma: float, h: float, r=1, temperature=0.0) -> float:
    """Richardson central derivative with a step shrinking toward the critical field."""
    f = measure_function(measure)
    step = min(FINE_STEP, 0.1 * abs(h - CRITICAL_FIELD)) if h != CRITICAL_FIELD else FINE_STEP
    base = ModelParams(gamma, h, temperature)

    def central(s):
        return (f(base.with_(h=h + s), r) - f(base.with_(h=h - s), r)) / (2 * s)

    return (4 * central(step / 2) - central(step)) / 3


def critical_series(measure: str, gamma: float, window=None, side: str = "below", points: int = 12,
                    r=1) -> Series:
    """``d y / d h`` in the thermodynamic limit at log-spaced distances from h_c."""
    window = window or TL_WINDOWS[measure]
    dist = np.geomspace(window[0], window[1], points)
    hs = CRITICAL_FIELD - dist if side == "below" else CRITICAL_FIELD + dist
    hs = np.sort(hs)
    return Series(hs, [thermodynamic_derivative(measure, gamma, float(h), r) for h in hs], f"d{measure}/dh")


@dataclass(frozen=True)
class ScalingReport:
    measure: str
    gamma: float
    peaks: tuple[Peak, ...]
    size_fit: FitResult
    field_fit: FitResult
    nu: float
    side: str

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "gamma": self.gamma,
            "nu": self.nu,
            "slope_N": self.size_fit.slope,
            "slope_h": self.field_fit.slope,
            "residual_N": self.size_fit.rms_residual,
            "residual_h": self.field_fit.rms_residual,
            "side": self.side,
            "peaks": [{"N": p.N, "h_m": p.h_m, "value": p.value} for p in self.peaks],
            "size_fit": self.size_fit.to_json(),
            "field_fit": self.field_fit.to_json(),
        }


def scaling_analysis(measure: str, gamma: float, sizes, side: str = "below", window=None,
                     peak_window=None, mapper=map) -> ScalingReport:
    """Both logarithmic fits and the exponent ``nu`` for one measure.

    ``mapper`` may be a parallel ``map``; it receives one chain length per call.
    """
    sizes = sorted(sizes)
    peaks = tuple(mapper(_PeakJob(measure, gamma, peak_window), sizes))
    size_series = Series([p.N for p in peaks], [p.value for p in peaks], f"peak d{measure}/dh")
    size_fit = log_linear_fit(size_series, Abscissa.LN_N)
    field_fit = log_linear_fit(critical_series(measure, gamma, window, side), Abscissa.LN_DISTANCE_TO_HC)
    return ScalingReport(measure, gamma, peaks, size_fit, field_fit,
                         critical_exponent(size_fit.slope, field_fit.slope), side)


@dataclass(frozen=True)
class _PeakJob:
    measure: str
    gamma: float
    window: tuple | None = None

    def __call__(self, N):
        return derivative_peak(self.measure, self.gamma, N, self.window)


@dataclass(frozen=True)
class DecayReport:
    gamma: float
    sizes: tuple
    entanglement_fit: FitResult
    discord_fit: FitResult
    discord_limit: float

    @property
    def rate_ratio(self) -> float:
        return self.entanglement_fit.rate / self.discord_fit.rate


def factorization_decay(gamma: float, sizes=tuple(range(8, 26, 2)), r=1) -> DecayReport:
    """Finite-size approach of E and Q to their limits at the factorizing field.

    E itself decays to zero; for Q the deviation ``|Q(N) - Q(inf)|`` is fitted.
    """
    hf = math.sqrt(1 - gamma * gamma)
    q_inf = discord(ModelParams(gamma, hf), r)
    es, dq = [], []
    for n in sizes:
        p = ModelParams(gamma, hf, 0.0, n)
        rho = density_matrix(p, r)
        es.append(concurrence(rho) ** 2)
        dq.append(abs(discord_of_response(rho).value - q_inf))
    return DecayReport(
        gamma,
        tuple(sizes),
        exp_decay_fit(Series(sizes, es, "E")),
        exp_decay_fit(Series(sizes, dq, "|Q - Q_inf|")),
        q_inf,
    )
