"""Derivatives, extrema and fits for finite-size and critical scaling."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateFit,
    DivisionByZeroSlope,
    InsufficientOverlap,
    InvalidParameters,
    NoInteriorExtremum,
    NonPositiveValue,
    NonUniformGrid,
)
from .params import CRITICAL_FIELD

MIN_FIT_POINTS = 4


class FitKind(str, enum.Enum):
    LOG_LINEAR_N = "LogLinearN"
    LOG_LINEAR_H = "LogLinearH"
    EXP_DECAY = "ExpDecay"


class Abscissa(str, enum.Enum):
    LN_N = "LnN"
    LN_DISTANCE_TO_HC = "LnDistanceToHc"


@dataclass(frozen=True)
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise InvalidParameters("series x and y must have equal length")
        if len(x) > 1 and not np.all(np.diff(x) > 0):
            raise InvalidParameters("series abscissae must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_points(cls, points, label: str = "") -> "Series":
        pts = list(points)
        return cls([p[0] for p in pts], [p[1] for p in pts], label)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def __len__(self) -> int:
        return len(self.x)

    def step(self) -> float:
        d = np.diff(self.x)
        if len(d) == 0:
            raise NonUniformGrid("a single point has no grid step")
        if np.ptp(d) > 1e-12 * max(1.0, float(np.abs(self.x).max())):
            raise NonUniformGrid(f"grid is not uniform (step spread {np.ptp(d):.2e})")
        return float(d.mean())


def _gradient(s: Series) -> np.ndarray:
    if len(s) < 3:
        raise InvalidParameters("a derivative needs at least 3 points")
    return np.gradient(s.y, s.step(), edge_order=2)


def numeric_derivative(series: Series, companion: Series | None = None) -> Series:
    """Second-order finite-difference derivative on a uniform grid.

    Central differences inside, one-sided second-order stencils at the ends.
    With a ``companion`` series sampled at half the step (and containing
    every point of ``series``) the two estimates are Richardson-combined,
    removing the leading ``O(step^2)`` error.
    """
    d = _gradient(series)
    if companion is not None:
        if not math.isclose(companion.step(), 0.5 * series.step(), rel_tol=1e-9):
            raise NonUniformGrid("companion series must have exactly half the step")
        dc = _gradient(companion)
        idx = np.searchsorted(companion.x, series.x)
        idx = np.clip(idx, 0, len(companion) - 1)
        tol = 1e-9 * companion.step()
        if np.any(np.abs(companion.x[idx] - series.x) > tol):
            raise InvalidParameters("companion series must contain every coarse grid point")
        d = (4.0 * dc[idx] - d) / 3.0
    return Series(series.x, d, series.label and f"d({series.label})")


def _refine(x, y, i):
    x0, x1, x2 = x[i - 1 : i + 2]
    y0, y1, y2 = y[i - 1 : i + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a == 0.0:
        return float(x1), float(y1)
    c = y0 - a * x0 * x0 - b * x0
    xm = -b / (2 * a)
    xm = min(max(xm, x0), x2)
    return float(xm), float(a * xm * xm + b * xm + c)


def locate_extremum(series: Series, kind: str = "auto") -> tuple[float, float]:
    """Interior maximum or minimum, refined by the parabola through its bracket.

    ``kind`` is ``"max"``, ``"min"`` or ``"auto"`` (the more pronounced of the
    two interior candidates).
    """
    x, y = series.x, series.y
    if len(x) < 3:
        raise NoInteriorExtremum("need at least 3 points")
    candidates = {"max": int(np.argmax(y)), "min": int(np.argmin(y))}
    if kind != "auto":
        if kind not in candidates:
            raise InvalidParameters(f"unknown extremum kind {kind!r}")
        candidates = {kind: candidates[kind]}
    med = float(np.median(y))
    inner = {k: i for k, i in candidates.items() if 0 < i < len(x) - 1}
    if not inner:
        raise NoInteriorExtremum(f"the {kind} extremum lies on the boundary of [{x[0]}, {x[-1]}]")
    best = max(inner, key=lambda k: abs(y[inner[k]] - med))
    return _refine(x, y, inner[best])


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    rms_residual: float
    n_points: int
    kind: FitKind
    window: tuple[float, float] = (math.nan, math.nan)
    points: tuple = field(default=(), repr=False)

    @property
    def rate(self) -> float:
        """Decay rate ``-slope`` of an exponential fit."""
        return -self.slope

    def to_json(self) -> str:
        d = {
            "kind": self.kind.value,
            "slope": self.slope,
            "intercept": self.intercept,
            "rms_residual": self.rms_residual,
            "n_points": self.n_points,
            "window": list(self.window),
            "points": [list(p) for p in self.points],
        }
        if self.kind is FitKind.EXP_DECAY:
            d["rate"] = self.rate
        return json.dumps(d)


def _line_fit(X, Y, kind, series: Series) -> FitResult:
    n = len(X)
    if n < MIN_FIT_POINTS:
        raise DegenerateFit(f"a fit needs at least {MIN_FIT_POINTS} points, got {n}")
    if np.ptp(X) == 0:
        raise DegenerateFit("all transformed abscissae coincide")
    A = np.stack([X, np.ones_like(X)], axis=1)
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ coef
    return FitResult(
        float(coef[0]),
        float(coef[1]),
        float(np.sqrt(np.mean(resid**2))),
        n,
        kind,
        (float(series.x[0]), float(series.x[-1])),
        tuple(series.points),
    )


def log_linear_fit(series: Series, abscissa: Abscissa = Abscissa.LN_N, h_c: float = CRITICAL_FIELD) -> FitResult:
    """Least-squares ``y = slope * X + intercept`` with ``X = ln N`` or ``ln|h_c - h|``."""
    abscissa = Abscissa(abscissa)
    if abscissa is Abscissa.LN_N:
        arg, kind = series.x, FitKind.LOG_LINEAR_N
    else:
        arg, kind = np.abs(h_c - series.x), FitKind.LOG_LINEAR_H
    if np.any(arg <= 0):
        raise NonPositiveValue(f"{abscissa.value} needs strictly positive arguments")
    return _line_fit(np.log(arg), series.y, kind, series)


def exp_decay_fit(series: Series) -> FitResult:
    """Least-squares line of ``ln y`` against ``x``; the decay rate is ``-slope``."""
    if np.any(series.y <= 0):
        raise NonPositiveValue("exponential fit needs strictly positive values")
    return _line_fit(series.x, np.log(series.y), FitKind.EXP_DECAY, series)


def critical_exponent(slope_N: float, slope_h: float) -> float:
    """``nu = -slope_h / slope_N`` from the two logarithmic prefactors."""
    if slope_N == 0 or not math.isfinite(slope_N):
        raise DivisionByZeroSlope("finite-size slope is zero")
    return -slope_h / slope_N


def collapse_check(family, nu: float, kind: str = "auto", grid_points: int = 101) -> float:
    """RMS spread of rescaled derivative curves ``y - y_m`` against ``N^(1/nu) (h - h_m)``.

    ``family`` is a sequence of ``(N, Series)``. Curves are interpolated onto
    a common grid spanning the overlap of their rescaled abscissae.
    """
    family = list(family)
    if len(family) < 3:
        raise InvalidParameters("collapse check needs at least 3 sizes")
    if nu <= 0:
        raise InvalidParameters("nu must be positive")
    curves = []
    for n, s in family:
        xm, ym = locate_extremum(s, kind)
        curves.append((n ** (1.0 / nu) * (s.x - xm), s.y - ym))
    lo = max(c[0][0] for c in curves)
    hi = min(c[0][-1] for c in curves)
    if not hi > lo:
        raise InsufficientOverlap("rescaled curves have no common abscissa range")
    grid = np.linspace(lo, hi, grid_points)
    stack = np.array([np.interp(grid, cx, cy) for cx, cy in curves])
    return float(np.sqrt(np.mean(np.var(stack, axis=0))))
