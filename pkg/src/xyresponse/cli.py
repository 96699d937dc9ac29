"""Command-line driver: ``xyresponse {measure,sweep,scaling,oracle-check}``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .correlators import Conventions, correlator_set, use_conventions
from .density import build_rho
from .errors import InvalidParameters, NumericalFailure, XYResponseError
from .measures import Metric, concurrence, discord_of_response
from .params import ModelParams, Sector, format_size, is_infinite, parse_size

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
WORKERS_ENV = "XYRESPONSE_WORKERS"
CORRUPT_ENV = "XYRESPONSE_CORRUPT_CONVENTION"

CSV_COLUMNS = (
    "gamma", "h", "T", "N", "sector", "r", "concurrence", "E", "Q_tr", "Q_hs",
    "argmin_theta", "argmin_phi", "evals", "converged",
)
METRICS = ("E", "Q_tr", "Q_hs")

EPILOG = """exit codes:
  0  success
  1  a cross-check exceeded its threshold (oracle-check)
  2  invalid flags or configuration
  3  numerical failure (quadrature, asymptotic limit, optimizer, fits)

environment:
  XYRESPONSE_WORKERS  default worker count for sweeps and scaling
"""


class UsageError(Exception):
    pass


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".12g")


# ---------------------------------------------------------------------------
# sweep configuration


def expand_axis(spec, name: str, sizes: bool = False) -> list:
    """A list of values, a scalar, or ``{"start", "stop", "step"}`` (inclusive)."""
    if isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except (KeyError, TypeError, ValueError):
            raise InvalidParameters(f"{name}: a range needs numeric start, stop and step") from None
        if step <= 0 or stop < start:
            raise InvalidParameters(f"{name}: range needs step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9))
        values = [round(start + k * step, 12) for k in range(n + 1)]
    elif isinstance(spec, list):
        values = spec
    else:
        values = [spec]
    if not values:
        raise InvalidParameters(f"{name}: empty axis")
    if sizes:
        return [parse_size(v) for v in values]
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise InvalidParameters(f"{name}: values must be numeric") from None


@dataclass
class SweepConfig:
    gamma: object
    h: object
    temperature: object = 0.0
    r: object = 1
    N: object = "inf"
    sector: str = "symmetric"
    metrics: list = field(default_factory=lambda: list(METRICS))
    output: str | None = None
    parallelism: int | None = None

    FIELDS = ("gamma", "h", "temperature", "r", "N", "sector", "metrics", "output", "parallelism")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        unknown = set(d) - set(cls.FIELDS)
        if unknown:
            raise InvalidParameters(f"unknown sweep config keys: {sorted(unknown)}")
        for key in ("gamma", "h"):
            if key not in d:
                raise InvalidParameters(f"sweep config needs '{key}'")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParameters(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise InvalidParameters("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return {
            k: getattr(self, k)
            for k in self.FIELDS
            if getattr(self, k) is not None or k in ("gamma", "h")
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def validate(self) -> None:
        if self.sector not in ("symmetric", "broken"):
            raise InvalidParameters(f"sector must be 'symmetric' or 'broken', got {self.sector!r}")
        bad = set(self.metrics) - set(METRICS)
        if bad:
            raise InvalidParameters(f"unknown metrics {sorted(bad)}; choose from {list(METRICS)}")
        if self.parallelism is not None and int(self.parallelism) < 1:
            raise InvalidParameters("parallelism must be >= 1")
        for p, r in self.points():
            if is_infinite(r) and not p.infinite:
                raise InvalidParameters(f"r=inf needs N=inf, got N={format_size(p.size)}")
            if not is_infinite(r) and (r < 1 or (not p.infinite and r >= p.size)):
                raise InvalidParameters(f"separation r={r} invalid for N={format_size(p.size)}")

    def points(self) -> list[tuple[ModelParams, object]]:
        out = []
        for g in expand_axis(self.gamma, "gamma"):
            for h in expand_axis(self.h, "h"):
                for t in expand_axis(self.temperature, "temperature"):
                    for n in expand_axis(self.N, "N", sizes=True):
                        p = ModelParams(g, h, t, n, self.sector)
                        for r in expand_axis(self.r, "r", sizes=True):
                            out.append((p, r))
        return out


def evaluate_row(task) -> dict:
    """One CSV row; numerical failures become ``converged=false`` rows."""
    params, r, metrics = task
    row = {
        "gamma": params.gamma, "h": params.h, "T": params.temperature,
        "N": format_size(params.size), "sector": params.sector.value, "r": format_size(r),
    }
    try:
        rho = build_rho(correlator_set(r, params))
        c = concurrence(rho)
        row.update(concurrence=c, E=c * c if "E" in metrics else None)
        evals, ok = 0, True
        if "Q_tr" in metrics:
            tr = discord_of_response(rho, Metric.TRACE)
            row.update(Q_tr=tr.value, argmin_theta=tr.argmin.theta, argmin_phi=tr.argmin.phi)
            evals, ok = evals + tr.evaluations, ok and tr.converged
        if "Q_hs" in metrics:
            hs = discord_of_response(rho, Metric.HILBERT_SCHMIDT)
            row.update(Q_hs=hs.value)
            evals, ok = evals + hs.evaluations, ok and hs.converged
        row.update(evals=evals, converged=ok, error=None)
    except NumericalFailure as exc:
        row.update(converged=False, error=f"{exc.stage}: {exc}")
    return row


def format_row(row: dict) -> list[str]:
    return [row[k] if k in ("N", "sector", "r") else fmt(row.get(k)) for k in CSV_COLUMNS]


def worker_count(requested=None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameters(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return 1


@contextlib.contextmanager
def worker_map(workers: int):
    if workers <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=workers) as ex:
        yield lambda f, items: ex.map(f, items, chunksize=1)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> tuple[str, list[dict]]:
    tasks = [(p, r, tuple(cfg.metrics)) for p, r in cfg.points()]
    with worker_map(workers) as mapper:
        rows = list(mapper(evaluate_row, tasks))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(format_row(row))
    return buf.getvalue(), rows


# ---------------------------------------------------------------------------
# subcommands


def cmd_measure(args) -> int:
    params = ModelParams(args.gamma, args.h, args.temperature, parse_size(args.N), args.sector)
    r = parse_size(args.r)
    row = evaluate_row((params, r, METRICS))
    if row.get("error"):
        raise _Numerical(row["error"])
    if args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerow(format_row(row))
        return EXIT_OK
    record = {
        "params": params.to_dict(),
        "r": format_size(r),
        "concurrence": row["concurrence"],
        "E": row["E"],
        "Q_tr": row["Q_tr"],
        "Q_hs": row["Q_hs"],
        "argmin": {"theta": row["argmin_theta"], "phi": row["argmin_phi"]},
        "evals": row["evals"],
        "converged": row["converged"],
        "source": "freefermion",
    }
    print(json.dumps(record))
    return EXIT_OK


class _Numerical(Exception):
    pass


def _read_config(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None


def _load_json(path: str):
    try:
        return json.loads(_read_config(path))
    except json.JSONDecodeError as exc:
        raise InvalidParameters(f"{path} is not valid JSON: {exc}") from None


def cmd_sweep(args) -> int:
    cfg = SweepConfig.from_json(_read_config(args.config))
    if args.print_config:
        print(cfg.to_json())
        return EXIT_OK
    workers = worker_count(args.workers if args.workers is not None else cfg.parallelism)
    text, rows = run_sweep(cfg, workers)
    out = args.output or cfg.output
    if out and out != "-":
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = [r for r in rows if r.get("error")]
    for r in failed:
        print(f"warning: point gamma={r['gamma']} h={r['h']} T={r['T']} N={r['N']} r={r['r']} failed: {r['error']}",
              file=sys.stderr)
    if failed:
        print(f"warning: {len(failed)} of {len(rows)} points failed", file=sys.stderr)
    if rows and len(failed) == len(rows):
        return EXIT_NUMERICAL
    return EXIT_OK


SCALING_KEYS = {"analysis", "measure", "gamma", "sizes", "side", "tl_window", "peak_window",
                "size_series", "field_series", "parallelism"}


def cmd_scaling(args) -> int:
    from . import pipeline
    from .scaling import Abscissa, Series, critical_exponent, log_linear_fit

    cfg = _load_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise InvalidParameters("scaling config must be a JSON object")
    unknown = set(cfg) - SCALING_KEYS
    if unknown:
        raise InvalidParameters(f"unknown scaling config keys: {sorted(unknown)}")
    for key in ("analysis", "measure", "gamma", "sizes", "side"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    analysis = cfg.get("analysis", "critical")
    measure = cfg.get("measure", "E")
    if measure not in pipeline.MEASURES:
        raise InvalidParameters(f"measure must be one of {sorted(pipeline.MEASURES)}")
    if "size_series" in cfg or "field_series" in cfg:
        if not ("size_series" in cfg and "field_series" in cfg):
            raise InvalidParameters("injected data needs both size_series and field_series")
        fit_n = log_linear_fit(Series.from_points(cfg["size_series"]), Abscissa.LN_N)
        fit_h = log_linear_fit(Series.from_points(cfg["field_series"]), Abscissa.LN_DISTANCE_TO_HC)
        report = {
            "measure": measure, "nu": critical_exponent(fit_n.slope, fit_h.slope),
            "slope_N": fit_n.slope, "slope_h": fit_h.slope,
            "residual_N": fit_n.rms_residual, "residual_h": fit_h.rms_residual,
            "size_fit": fit_n.to_json(), "field_fit": fit_h.to_json(),
        }
        print(json.dumps(report))
        return EXIT_OK
    gamma = float(cfg.get("gamma", 0.5))
    if analysis == "factorization":
        sizes = [int(n) for n in cfg.get("sizes", list(range(8, 26, 2)))]
        rep = pipeline.factorization_decay(gamma, sizes)
        print(json.dumps({
            "analysis": "factorization", "gamma": gamma, "sizes": sizes,
            "rate_E": rep.entanglement_fit.rate, "rate_Q": rep.discord_fit.rate,
            "ratio": rep.rate_ratio, "Q_inf": rep.discord_limit,
            "residual_E": rep.entanglement_fit.rms_residual, "residual_Q": rep.discord_fit.rms_residual,
            "fit_E": rep.entanglement_fit.to_json(), "fit_Q": rep.discord_fit.to_json(),
        }))
        return EXIT_OK
    if analysis != "critical":
        raise InvalidParameters("analysis must be 'critical' or 'factorization'")
    sizes = [int(n) for n in cfg.get("sizes", [30, 40, 60, 90, 120, 180])]
    workers = worker_count(args.workers if args.workers is not None else cfg.get("parallelism"))
    with worker_map(workers) as mapper:
        rep = pipeline.scaling_analysis(
            measure, gamma, sizes, side=cfg.get("side", "below"),
            window=tuple(cfg["tl_window"]) if "tl_window" in cfg else None,
            peak_window=tuple(cfg["peak_window"]) if "peak_window" in cfg else None,
            mapper=mapper,
        )
    print(json.dumps(rep.to_dict()))
    return EXIT_OK


DEFAULT_ORACLE_GRID = {
    "N": [6, 8, 10], "gamma": [0.3, 0.5, 1.0], "h": [0.3, 1.0, 1.7],
    "temperature": [0.0, 0.5], "r": [1, 2], "threshold": 1e-6,
}


def oracle_deviations(grid: dict) -> dict:
    from . import oracle
    from .measures import measure_state

    dev = {"correlators": 0.0, "rho": 0.0, "E": 0.0, "Q_tr": 0.0}
    notes = []
    for n in grid["N"]:
        for g in grid["gamma"]:
            for h in grid["h"]:
                for t in grid["temperature"]:
                    cfg = oracle.OracleConfig(int(n), g, h, t)
                    if t == 0 and oracle.ground_state_info(cfg).parity_crossing:
                        notes.append(f"N={n} gamma={g} h={h}: odd-parity level below the even ground state")
                    for r in grid["r"]:
                        p = ModelParams(g, h, t, int(n))
                        c = correlator_set(r, p)
                        rho = build_rho(c)
                        ref = oracle.oracle_rho(cfg, r)
                        cref = oracle.correlators_from_rho(ref, p, r)
                        a, b = c.as_dict(), cref.as_dict()
                        dev["correlators"] = max(dev["correlators"], max(abs(a[k] - b[k]) for k in a))
                        dev["rho"] = max(dev["rho"], float(np.abs(rho.elements - ref.elements).max()))
                        m1 = measure_state(rho, p, r)
                        m2 = measure_state(ref, p, r, source="oracle")
                        dev["E"] = max(dev["E"], abs(m1.entanglement_of_response - m2.entanglement_of_response))
                        dev["Q_tr"] = max(dev["Q_tr"], abs(m1.discord_tr - m2.discord_tr))
    return {"deviations": dev, "notes": notes}


def pinned_check(gamma=0.5, h=0.6, rs=(1, 2), N=12) -> dict:
    from . import oracle

    worst = 0.0
    for r in rs:
        ff = correlator_set(r, ModelParams(gamma, h, sector=Sector.BROKEN)).as_dict()
        ed = oracle.pinned_extrapolation(gamma, h, r, N)
        for k in ("sz", "xx", "zz", "mx", "xz", "zx"):
            if abs(ff[k]) > 1e-3:
                worst = max(worst, abs(ff[k] - ed[k]) / abs(ff[k]))
    return {"relative_deviation": worst, "threshold": 0.1,
            "note": f"pinned N={N} chains, staggered field extrapolated to zero"}


def cmd_oracle_check(args) -> int:
    grid = dict(DEFAULT_ORACLE_GRID)
    if args.config:
        user = _load_json(args.config)
        unknown = set(user) - set(grid) - {"pinned"}
        if unknown:
            raise InvalidParameters(f"unknown oracle-check keys: {sorted(unknown)}")
        grid.update(user)
    if any(int(n) > 14 for n in grid["N"]):
        raise InvalidParameters("oracle chains are limited to N <= 14")
    corrupt = args.corrupt_convention or os.environ.get(CORRUPT_ENV) == "1"
    conv = Conventions(pairing_sign=-1.0) if corrupt else Conventions()
    with use_conventions(conv):
        report = oracle_deviations(grid)
        if args.pinned or grid.get("pinned"):
            report["pinned"] = pinned_check()
    thr = float(grid["threshold"])
    failed = [k for k, v in report["deviations"].items() if v > thr]
    if "pinned" in report and report["pinned"]["relative_deviation"] > report["pinned"]["threshold"]:
        failed.append("pinned")
    print(f"{'quantity':<12} {'max deviation':>14} {'threshold':>10}")
    for k, v in report["deviations"].items():
        print(f"{k:<12} {v:>14.3e} {thr:>10.1e}  {'FAIL' if v > thr else 'ok'}")
    if "pinned" in report:
        pr = report["pinned"]
        bad = pr["relative_deviation"] > pr["threshold"]
        print(f"{'pinned':<12} {pr['relative_deviation']:>14.3e} {pr['threshold']:>10.1e}  "
              f"{'FAIL' if bad else 'ok'}  ({pr['note']})")
    for note in report["notes"]:
        print(f"note: {note}")
    return EXIT_CHECK if failed else EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="xyresponse", description="Entanglement and discord of response in XY chains.",
                epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("measure", help="evaluate one parameter point", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    m.add_argument("--gamma", type=float, required=True)
    m.add_argument("--h", type=float, required=True)
    m.add_argument("--temperature", "--T", type=float, default=0.0)
    m.add_argument("--N", default="inf", help="chain length or 'inf'")
    m.add_argument("--r", default="1", help="separation or 'inf'")
    m.add_argument("--sector", choices=["symmetric", "broken"], default="symmetric")
    m.add_argument("--csv", action="store_true", help="print a CSV header and row instead of JSON")
    m.set_defaults(func=cmd_measure)

    s = sub.add_parser("sweep", help="evaluate a parameter grid to CSV", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("config", help="sweep config JSON")
    s.add_argument("--output", "-o", help="CSV path (default: config 'output' or stdout)")
    s.add_argument("--workers", type=int, help=f"worker processes (default: config or ${WORKERS_ENV})")
    s.add_argument("--print-config", action="store_true", help="print the parsed config and exit")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("scaling", help="critical-exponent or factorization-decay pipeline", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    c.add_argument("config", nargs="?", help="scaling config JSON")
    c.add_argument("--analysis", choices=["critical", "factorization"])
    c.add_argument("--measure", choices=["E", "Q"])
    c.add_argument("--gamma", type=float)
    c.add_argument("--sizes", type=lambda s: [int(v) for v in s.split(",")])
    c.add_argument("--side", choices=["below", "above"])
    c.add_argument("--workers", type=int)
    c.set_defaults(func=cmd_scaling)

    o = sub.add_parser("oracle-check", help="compare free-fermion and exact-diagonalization pipelines",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    o.add_argument("config", nargs="?", help="grid override JSON")
    o.add_argument("--pinned", action="store_true", help="also run the pinned broken-sector check")
    o.add_argument("--corrupt-convention", action="store_true", help=argparse.SUPPRESS)
    o.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, InvalidParameters) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _Numerical as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalFailure as exc:
        print(f"numerical failure in stage {exc.stage}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except XYResponseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
