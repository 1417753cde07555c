"""Command-line interface: evaluation, sweeps, benchmarks and monotonicity reports.

Exit codes: 0 success, 1 numerical or domain failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import monotonicity, oxr
from .chebyshev import DEFAULT_ORDER
from .errors import DomainError, NumericalFailure, StageError
from .ode import SolverOptions
from .phase import DEFAULT_BETA, DEFAULT_C, ProlateEvaluator, build_evaluator

CACHE_ENV = "PROLATE_CACHE_DIR"
OXR_GAMMA_CAP = 1e4
DESK_COUNT = 10
FULL_COUNT = 100

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2

EVAL_COLUMNS = """\
eval columns: z, phase (PS_n by the phase method), oxr (Legendre expansion),
abs_diff (|phase - oxr|, only with --method both)."""

SWEEP_COLUMNS = """\
sweep columns (one row per cell): gamma, sigma, n, status, plus
  coefs:    coefficients_30, coefficients, riccati_intervals, appell_intervals
  accuracy: max_error
  bench:    seconds (build mode: per build; eval mode: per point), points,
            coefficients_30, riccati_intervals, appell_intervals
The last CSV line, starting with '#', carries the block summary; JSON output
holds the same data under "rows" and "summary"."""


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """Grid of (gamma, sigma) cells with n = round(gamma * sigma)."""

    gamma_lo: float
    gamma_hi: float
    gamma_count: int
    sigma_lo: float
    sigma_hi: float
    sigma_count: int

    def __post_init__(self):
        if self.gamma_count < 1 or self.sigma_count < 1:
            raise ValueError("sweep counts must be at least 1")
        if not (0 < self.gamma_lo <= self.gamma_hi and math.isfinite(self.gamma_hi)):
            raise ValueError("gamma range must satisfy 0 < lo <= hi < inf")
        if not (0 <= self.sigma_lo <= self.sigma_hi <= 1.2 and self.sigma_hi > 0):
            raise ValueError("sigma range must lie in [0, 1.2] with hi > 0")

    @staticmethod
    def _axis(lo, hi, count):
        return np.array([lo]) if count == 1 else np.linspace(lo, hi, count)

    @property
    def gammas(self) -> np.ndarray:
        return self._axis(self.gamma_lo, self.gamma_hi, self.gamma_count)

    @property
    def sigmas(self) -> np.ndarray:
        return self._axis(self.sigma_lo, self.sigma_hi, self.sigma_count)

    def cells(self) -> list[tuple[float, float, int]]:
        return [(float(g), float(s), int(round(g * s))) for g in self.gammas for s in self.sigmas]


def cache_key(gamma: float, n: int, beta: float, k: int, c: float = DEFAULT_C) -> str:
    raw = json.dumps([repr(float(gamma)), int(n), repr(float(beta)), int(k), repr(float(c))])
    return hashlib.sha256(raw.encode()).hexdigest()[:32]


def cached_evaluator(gamma: float, n: int, beta: float = DEFAULT_BETA, c: float = DEFAULT_C,
                     chi: float | None = None, cache_dir: str | os.PathLike | None = None
                     ) -> ProlateEvaluator:
    """Build an evaluator, reusing a copy on disk when a cache directory is set."""
    k = DEFAULT_ORDER
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    path = None
    if cache_dir and chi is None:
        path = Path(cache_dir) / f"{cache_key(gamma, n, beta, k, c)}.json"
        if path.is_file():
            return ProlateEvaluator.loads(path.read_text())
    e = build_evaluator(gamma, n, chi=chi, beta=beta, c=c, opts=SolverOptions(order=k))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(e.dumps())
        os.replace(tmp, path)
    return e


def _emit(rows: list[dict], fmt: str, out, summary: dict | None = None):
    if fmt == "json":
        doc = {"rows": rows}
        if summary is not None:
            doc["summary"] = summary
        json.dump(doc, out, indent=2, default=_json_default)
        out.write("\n")
        return
    if rows:
        fields = list(rows[0])
        for r in rows[1:]:
            fields += [f for f in r if f not in fields]
        w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    if summary is not None:
        out.write("# " + ",".join(f"{k}={_fmt(v)}" for k, v in summary.items()) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(type(v).__name__)


def _positive(text):
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _count(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a count of at least 1, got {text!r}")
    return v


def _resolve_n(args) -> int:
    if args.n is not None:
        if args.n < 0:
            raise UsageError("--n must be nonnegative")
        return args.n
    return int(round(args.gamma * args.sigma))


def _eval_points(args) -> np.ndarray:
    if args.z is not None:
        return np.asarray(args.z, dtype=float)
    return np.linspace(0.0, 1.0, args.grid + 2)[1:-1]


def cmd_eval(args, out) -> int:
    n = _resolve_n(args)
    z = _eval_points(args)
    rows = [{"z": float(v)} for v in z]
    phase_vals = oxr_vals = None
    if args.method in ("phase", "both"):
        e = cached_evaluator(args.gamma, n, args.beta, args.c, args.chi)
        phase_vals = np.atleast_1d(e.eval(z))
    if args.method in ("oxr", "both"):
        exp = oxr.ps_expansion(args.gamma, n, seed=args.seed)
        oxr_vals = np.atleast_1d(oxr.eval_ps_oxr(exp, z))
    for i, r in enumerate(rows):
        if phase_vals is not None:
            r["phase"] = float(phase_vals[i])
        if oxr_vals is not None:
            r["oxr"] = float(oxr_vals[i])
        if phase_vals is not None and oxr_vals is not None:
            r["abs_diff"] = abs(float(phase_vals[i]) - float(oxr_vals[i]))
    _emit(rows, args.format, out)
    return EXIT_OK


def _sweep_from_args(args) -> SweepSpec:
    count = FULL_COUNT if args.full else DESK_COUNT
    g = args.gamma_range
    s = args.sigma_range
    if len(g) not in (2, 3) or len(s) not in (2, 3):
        raise UsageError("ranges take LO HI [COUNT]")
    gc = int(g[2]) if len(g) == 3 else count
    sc = int(s[2]) if len(s) == 3 else count
    return SweepSpec(float(g[0]), float(g[1]), gc, float(s[0]), float(s[1]), sc)


def _cell_coefs(cell, beta, c):
    g, s, n = cell
    e = cached_evaluator(g, n, beta, c)
    st = e.stats
    return {"coefficients_30": st.psi_coefficients_30, "coefficients": st.psi_coefficients,
            "riccati_intervals": st.riccati_intervals, "appell_intervals": st.appell_intervals}


def accuracy_points(count: int = 100) -> np.ndarray:
    return np.linspace(0.0, 1.0, count + 2)[1:-1]


def cell_error(gamma: float, n: int, evaluator: ProlateEvaluator | None = None,
               points: int = 100, seed: int | None = None) -> float:
    """max |PS_phase - PS_oxr| over equispaced interior points of (0, 1)."""
    z = accuracy_points(points)
    e = evaluator if evaluator is not None else build_evaluator(gamma, n)
    ref = oxr.eval_ps_oxr(oxr.ps_expansion(gamma, n, seed=seed), z)
    return float(np.max(np.abs(e.eval(z) - ref)))


def _cell_accuracy(cell, beta, c, points, seed, full):
    g, s, n = cell
    if g > OXR_GAMMA_CAP and not full:
        return {"status": "skipped", "max_error": float("nan")}
    e = cached_evaluator(g, n, beta, c)
    return {"max_error": cell_error(g, n, e, points, seed)}


def _cell_bench(cell, beta, c, mode, points, repeat):
    g, s, n = cell
    if mode == "build":
        t0 = time.perf_counter()
        for _ in range(repeat):
            e = build_evaluator(g, n, beta=beta, c=c)
        sec = (time.perf_counter() - t0) / repeat
        npts = 0
    else:
        e = cached_evaluator(g, n, beta, c)
        z = np.random.default_rng(0).uniform(-1.0, 1.0, points) * e.zmax
        e.eval(z[:8])
        t0 = time.perf_counter()
        for _ in range(repeat):
            e.eval(z)
        sec = (time.perf_counter() - t0) / (repeat * points)
        npts = points
    st = e.stats
    return {"seconds": sec, "points": npts, "coefficients_30": st.psi_coefficients_30,
            "riccati_intervals": st.riccati_intervals, "appell_intervals": st.appell_intervals}


def _run_cell(task):
    fn, cell, extra = task
    g, s, n = cell
    row = {"gamma": g, "sigma": s, "n": n, "status": "ok"}
    try:
        row.update(fn(cell, *extra))
    except (NumericalFailure, StageError, DomainError, ValueError) as exc:
        row["status"] = f"failed: {exc}"
    return row


def run_sweep(fn, spec: SweepSpec, extra: tuple, workers: int = 1) -> list[dict]:
    tasks = [(fn, cell, extra) for cell in spec.cells()]
    if workers <= 1:
        return [_run_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell, tasks))


def _block_max(rows, key):
    vals = [r[key] for r in rows if r.get("status") == "ok" and key in r and not math.isnan(r[key])]
    return max(vals) if vals else float("nan")


def _block(spec: SweepSpec) -> dict:
    return {"gamma_lo": spec.gamma_lo, "gamma_hi": spec.gamma_hi,
            "sigma_lo": spec.sigma_lo, "sigma_hi": spec.sigma_hi,
            "cells": spec.gamma_count * spec.sigma_count}


def cmd_coefs(args, out) -> int:
    spec = _sweep_from_args(args)
    rows = run_sweep(_cell_coefs, spec, (args.beta, args.c), args.workers)
    summary = _block(spec)
    summary["max_coefficients_30"] = _block_max(rows, "coefficients_30")
    summary["failed"] = sum(r["status"] != "ok" for r in rows)
    _emit(rows, args.format, out, summary)
    return EXIT_OK


def cmd_accuracy(args, out) -> int:
    spec = _sweep_from_args(args)
    rows = run_sweep(_cell_accuracy, spec, (args.beta, args.c, args.points, args.seed, args.full),
                     args.workers)
    summary = _block(spec)
    summary["max_error"] = _block_max(rows, "max_error")
    summary["failed"] = sum(r["status"] not in ("ok", "skipped") for r in rows)
    _emit(rows, args.format, out, summary)
    return EXIT_OK


def cmd_bench(args, out) -> int:
    spec = _sweep_from_args(args)
    rows = run_sweep(_cell_bench, spec, (args.beta, args.c, args.mode, args.points, args.repeat),
                     args.workers)
    ok = [r["seconds"] for r in rows if r["status"] == "ok"]
    summary = _block(spec)
    summary["mode"] = args.mode
    summary["average_seconds"] = float(np.mean(ok)) if ok else float("nan")
    summary["max_over_min"] = float(max(ok) / min(ok)) if ok else float("nan")
    _emit(rows, args.format, out, summary)
    return EXIT_OK


def cmd_monotonicity(args, out) -> int:
    if args.gamma == 0:
        raise UsageError("gamma = 0 is not supported: the Legendre Q limit is not implemented")
    if not args.gamma > 0:
        raise UsageError("--gamma must be positive")
    n = _resolve_n(args)
    reports = {}
    if args.profile in ("modulus", "both"):
        e = cached_evaluator(args.gamma, n)
        reports["modulus"] = monotonicity.check_conjecture1(args.gamma, n, args.orders, evaluator=e)
    if args.profile in ("imaginary", "both"):
        reports["imaginary"] = monotonicity.check_imaginary_axis_monotone(args.gamma, n, args.orders)
    doc = {k: r.to_dict() for k, r in reports.items()}
    out.write(json.dumps(doc if len(doc) > 1 else next(iter(doc.values())), sort_keys=True, indent=2))
    out.write("\n")
    return EXIT_OK


def _add_sweep(p):
    p.add_argument("--gamma-range", nargs="+", type=float, default=[100.0, 500.0],
                   metavar="LO HI [COUNT]", help="bandlimit range and optional count")
    p.add_argument("--sigma-range", nargs="+", type=float, default=[0.0, 0.25],
                   metavar="LO HI [COUNT]", help="sigma = n / gamma range and optional count")
    p.add_argument("--full", action="store_true",
                   help=f"{FULL_COUNT}x{FULL_COUNT} grid and no gamma cap on reference checks")
    p.add_argument("--workers", type=_count, default=1, help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prolate",
        description="Evaluate angular prolate spheroidal functions PS_n(z; gamma).",
        epilog=f"Set {CACHE_ENV} to cache phase functions on disk. "
               "Exit codes: 0 success, 1 numerical failure, 2 usage error.",
    )
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--beta", type=_positive, default=DEFAULT_BETA,
                        help="right end of the phase-function domain in x")
    parser.add_argument("--c", type=_positive, default=DEFAULT_C,
                        help="imaginary-axis point where the Riccati solution is started")
    parser.add_argument("--seed", type=int, default=None,
                        help="inverse-iteration seed for the Legendre expansion (default: n)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate PS_n at points", epilog=EVAL_COLUMNS,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--gamma", type=_positive, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--sigma", type=float, help="n = round(gamma * sigma)")
    pts = p.add_mutually_exclusive_group(required=True)
    pts.add_argument("--z", type=float, nargs="+")
    pts.add_argument("--grid", type=_count, help="equispaced interior points of (0, 1)")
    p.add_argument("--chi", type=_positive, help="eigenvalue, if known")
    p.add_argument("--method", choices=("phase", "oxr", "both"), default="phase")
    p.set_defaults(func=cmd_eval)

    for name, fn, helptext in (("coefs", cmd_coefs, "coefficient counts of Psi on [0, 30)"),
                               ("accuracy", cmd_accuracy, "maximum error against the Legendre expansion"),
                               ("bench", cmd_bench, "build and evaluation timings")):
        p = sub.add_parser(name, help=helptext, epilog=SWEEP_COLUMNS,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_sweep(p)
        if name == "accuracy":
            p.add_argument("--points", type=_count, default=100)
        if name == "bench":
            p.add_argument("--mode", choices=("build", "eval"), default="build")
            p.add_argument("--points", type=_count, default=100000, help="evaluation points (eval mode)")
            p.add_argument("--repeat", type=_count, default=1)
        p.set_defaults(func=fn)

    p = sub.add_parser("monotonicity", help="monotonicity report as JSON")
    p.add_argument("--gamma", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--sigma", type=float)
    p.add_argument("--orders", type=int, default=3, help="highest derivative order J")
    p.add_argument("--profile", choices=("modulus", "imaginary", "both"), default="modulus")
    p.set_defaults(func=cmd_monotonicity)
    return parser


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"prolate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        if isinstance(exc, DomainError):
            print(f"prolate: domain error: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        parser.print_usage(sys.stderr)
        print(f"prolate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"prolate: numerical failure {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NumericalFailure, DomainError) as exc:
        print(f"prolate: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
