import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xyresponse.errors import (
    DegenerateFit,
    DivisionByZeroSlope,
    InvalidParameters,
    NoInteriorExtremum,
    NonPositiveValue,
    NonUniformGrid,
)
from xyresponse.scaling import (
    Abscissa,
    FitKind,
    Series,
    collapse_check,
    critical_exponent,
    exp_decay_fit,
    locate_extremum,
    log_linear_fit,
    numeric_derivative,
)


def test_derivative_exact_for_quadratics():
    x = np.linspace(-1, 2, 31)
    d = numeric_derivative(Series(x, 3 * x**2 - x + 2))
    assert np.allclose(d.y, 6 * x - 1, atol=1e-12)


def test_richardson_companion_improves_accuracy():
    x = np.linspace(0, 1, 11)
    xc = np.linspace(0, 1, 21)
    plain = numeric_derivative(Series(x, np.sin(3 * x)))
    rich = numeric_derivative(Series(x, np.sin(3 * x)), Series(xc, np.sin(3 * xc)))
    exact = 3 * np.cos(3 * x)
    inner = slice(1, -1)
    assert np.max(np.abs(rich.y - exact)[inner]) < 0.1 * np.max(np.abs(plain.y - exact)[inner])


def test_derivative_rejects_bad_grids():
    with pytest.raises(NonUniformGrid):
        numeric_derivative(Series([0, 1, 3], [0, 1, 2]))
    with pytest.raises(InvalidParameters):
        numeric_derivative(Series([0, 1], [0, 1]))
    with pytest.raises(NonUniformGrid):
        numeric_derivative(Series([0, 1, 2], [0, 1, 2]), Series([0, 1, 2], [0, 1, 2]))


def test_series_validation():
    with pytest.raises(InvalidParameters):
        Series([0, 1], [1])
    with pytest.raises(InvalidParameters):
        Series([1, 0], [0, 0])
    s = Series.from_points([(0, 1), (1, 2)])
    assert s.points == [(0.0, 1.0), (1.0, 2.0)]


def test_locate_extremum_refines_parabola():
    x = np.linspace(0, 1, 11)
    xm, ym = locate_extremum(Series(x, -((x - 0.537) ** 2) + 2), "max")
    assert xm == pytest.approx(0.537, abs=1e-12)
    assert ym == pytest.approx(2.0, abs=1e-12)
    xm, _ = locate_extremum(Series(x, (x - 0.31) ** 2), "auto")
    assert xm == pytest.approx(0.31, abs=1e-12)


def test_locate_extremum_boundary():
    x = np.linspace(0, 1, 11)
    with pytest.raises(NoInteriorExtremum):
        locate_extremum(Series(x, x), "max")
    with pytest.raises(InvalidParameters):
        locate_extremum(Series(x, x), "saddle")


def test_log_linear_fit_recovers_line():
    n = np.array([30, 40, 60, 90, 120, 180.0])
    fit = log_linear_fit(Series(n, 0.15 * np.log(n) + 0.7), Abscissa.LN_N)
    assert fit.slope == pytest.approx(0.15, abs=1e-12)
    assert fit.intercept == pytest.approx(0.7, abs=1e-12)
    assert fit.rms_residual < 1e-12
    assert fit.kind is FitKind.LOG_LINEAR_N
    h = 1 - np.geomspace(1e-3, 1e-1, 8)
    h = np.sort(h)
    fh = log_linear_fit(Series(h, -0.15 * np.log(1 - h)), "LnDistanceToHc")
    assert fh.slope == pytest.approx(-0.15, abs=1e-12)
    assert fh.kind is FitKind.LOG_LINEAR_H


def test_fit_errors():
    with pytest.raises(DegenerateFit):
        log_linear_fit(Series([1, 2, 3], [0, 1, 2]))
    with pytest.raises(NonPositiveValue):
        log_linear_fit(Series([0.9, 0.95, 1.0, 1.05], [0, 1, 2, 3]), Abscissa.LN_DISTANCE_TO_HC)
    with pytest.raises(NonPositiveValue):
        exp_decay_fit(Series([1, 2, 3, 4], [1, 0, 1, 1]))


def test_exp_decay_fit():
    n = np.arange(8, 26, 2.0)
    fit = exp_decay_fit(Series(n, 3.0 * np.exp(-1.1 * n)))
    assert fit.rate == pytest.approx(1.1, abs=1e-12)
    d = json.loads(fit.to_json())
    assert d["kind"] == "ExpDecay" and d["rate"] == pytest.approx(1.1)
    assert len(d["points"]) == len(n)


def test_critical_exponent_examples():
    assert critical_exponent(0.15, -0.15) == pytest.approx(1.0)
    assert critical_exponent(-0.59, 0.59) == pytest.approx(1.0)
    assert critical_exponent(0.1, -0.2) == pytest.approx(2.0)
    with pytest.raises(DivisionByZeroSlope):
        critical_exponent(0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(-5, 5))
def test_exponent_from_synthetic_scaling(a, nu, c):
    # y_N = a ln N, y_h = -(a / nu) ln|h_c - h| * (-1) => nu = -slope_h / slope_N
    n = np.array([30, 40, 60, 90, 120, 180.0])
    fn = log_linear_fit(Series(n, a * np.log(n) + c))
    h = np.sort(1 - np.geomspace(1e-3, 5e-2, 10))
    fh = log_linear_fit(Series(h, -a * nu * np.log(1 - h) + c), Abscissa.LN_DISTANCE_TO_HC)
    assert critical_exponent(fn.slope, fh.slope) == pytest.approx(nu, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-3, 3))
def test_exponent_invariant_under_rescaling(k, shift):
    n = np.array([30, 40, 60, 90, 120, 180.0])
    yn = 0.15 * np.log(n)
    h = np.sort(1 - np.geomspace(1e-3, 5e-2, 10))
    yh = 0.15 * np.log(1 - h)
    nu0 = critical_exponent(log_linear_fit(Series(n, yn)).slope,
                            log_linear_fit(Series(h, yh), Abscissa.LN_DISTANCE_TO_HC).slope)
    nu1 = critical_exponent(log_linear_fit(Series(n, k * yn + shift)).slope,
                            log_linear_fit(Series(h, k * yh + shift), Abscissa.LN_DISTANCE_TO_HC).slope)
    assert nu1 == pytest.approx(nu0, rel=1e-9)


def _family(nu_true, sizes=(20, 40, 80)):
    out = []
    for n in sizes:
        hm = 1.0 + 0.5 / n
        x = np.linspace(hm - 0.2, hm + 0.2, 801)
        out.append((n, Series(x, 0.3 * math.log(n) - np.log1p((n ** (1 / nu_true) * (x - hm)) ** 2))))
    return out


def test_collapse_quality_picks_true_exponent():
    fam = _family(1.0)
    good = collapse_check(fam, 1.0, "max")
    assert good < 1e-3
    assert collapse_check(fam, 0.5, "max") > 10 * good
    assert collapse_check(fam, 2.0, "max") > 10 * good


def test_collapse_errors():
    fam = _family(1.0)
    with pytest.raises(InvalidParameters):
        collapse_check(fam[:2], 1.0)
    with pytest.raises(InvalidParameters):
        collapse_check(fam, -1.0)
