"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line."""

import io
import json
import math

import numpy as np
import pytest

from prolate import cli, oxr
from prolate.legendre import legendre_central, legendre_p
from prolate.monotonicity import PASS, check_conjecture1
from prolate.phase import (
    ACCELERATED_END,
    basis_wronskian,
    build_evaluator_accelerated,
    harvest_seed,
    kummer_residual,
    modulus_identity,
)

from conftest import evaluator, expansion

Z100 = np.linspace(0.0, 1.0, 102)[1:-1]


def grid(glo, ghi, gcount, slo, shi, scount):
    return [(float(g), float(s), int(round(g * s)))
            for g in np.linspace(glo, ghi, gcount) for s in np.linspace(slo, shi, scount)]


def oracle_error(gamma, n, z=Z100):
    return float(np.max(np.abs(evaluator(gamma, n).eval(z) - oxr.eval_ps_oxr(expansion(gamma, n), z))))


def sample_x(phase, count, rng):
    """Random off-node points, one piece at a time, over the whole partition."""
    b = phase.psi.breakpoints
    i = rng.integers(0, b.size - 1, count)
    return b[i] + rng.uniform(0.02, 0.98, count) * (b[i + 1] - b[i])


def test_criterion_01_oracle_desk(acceptance_log):
    cells = grid(100, 500, 10, 0.05, 0.95, 10)
    errs = {(g, n): oracle_error(g, n) for g, _, n in cells}
    worst = max(errs, key=errs.get)
    ok = errs[worst] <= 5e-12
    acceptance_log(1, ok, f"max |phase - oxr| = {errs[worst]:.2e} at (gamma, n) = {worst}; tol 5e-12")
    assert ok


def test_criterion_02_oracle_extended(acceptance_log):
    cells = grid(1000, 5000, 5, 0.05, 0.95, 5)
    errs = {(g, n): oracle_error(g, n) for g, _, n in cells}
    worst = max(errs, key=errs.get)
    ok = errs[worst] <= 5e-11
    acceptance_log(2, ok, f"max |phase - oxr| = {errs[worst]:.2e} at (gamma, n) = {worst}; tol 5e-11")
    assert ok


BANDS = [((0.0, 0.25), 504), ((0.25, 0.5), 504), ((0.5, 0.75), 432), ((0.75, 1.0), 144)]


def test_criterion_03_coefficient_budget(acceptance_log):
    counts = {(g, s): evaluator(g, n).stats.psi_coefficients_30 for g, s, n in grid(100, 500, 10, 0.0, 1.0, 10)}
    parts, ok = [], True
    for (lo, hi), budget in BANDS:
        band = [c for (g, s), c in counts.items() if lo - 1e-12 <= s <= hi + 1e-12]
        top = max(band)
        ok &= top <= budget
        parts.append(f"[{lo},{hi}] {top}/{budget}")
    for s in (0.5, 0.9):
        c = evaluator(1e5, int(round(1e5 * s))).stats.psi_coefficients_30
        ok &= c <= 800
        parts.append(f"gamma=1e5 sigma={s} {c}/800")
    acceptance_log(3, ok, "max coefficients on [0,30): " + ", ".join(parts))
    assert ok


def test_criterion_04_small_bandlimit(acceptance_log):
    gamma = 1e-6
    z = np.linspace(-0.98, 0.98, 50)
    worst = {"phase": 0.0, "oxr": 0.0}
    for n in range(11):
        p, _ = legendre_p(n, z)
        worst["phase"] = max(worst["phase"], float(np.max(np.abs(evaluator(gamma, n).eval(z) - p))))
        worst["oxr"] = max(worst["oxr"], float(np.max(np.abs(oxr.eval_ps_oxr(expansion(gamma, n), z) - p))))
    ok = max(worst.values()) <= 1e-8
    acceptance_log(4, ok, f"max |PS - P_n|: phase {worst['phase']:.2e}, oxr {worst['oxr']:.2e}; tol 1e-8")
    assert ok


def test_criterion_05_eigenvalues(acceptance_log):
    monotone = True
    resid = {}
    for gamma in (1.0, 10.0, 100.0, 1000.0):
        chis = []
        for n in range(61):
            e = expansion(gamma, n)
            chis.append(e.chi)
            resid[(gamma, n)] = oxr.eigen_residual(e)
        monotone &= bool(np.all(np.diff(chis) > 0))
    limit = max(abs(oxr.chi(1e-8, n) - n * (n + 1)) for n in range(61))
    worst = max(resid, key=resid.get)
    failing = sorted({g for (g, n), r in resid.items() if r > 1e-12})
    ok = monotone and limit <= 1e-5 and resid[worst] <= 1e-12
    acceptance_log(5, ok, f"monotone in n: {monotone}; max |chi(1e-8,n) - n(n+1)| = {limit:.1e}; "
                          f"max residual {resid[worst]:.2e} at {worst} (tol 1e-12; over tol for gamma in {failing})")
    assert ok


IDENTITY_PAIRS = [(20.0, 10), (500.0, 100), (100.0, 25), (100.0, 80), (1000.0, 900)]


def test_criterion_06_identities(acceptance_log):
    rng = np.random.default_rng(6)
    worst = [0.0, 0.0, 0.0]
    for gamma, n in IDENTITY_PAIRS:
        ph = evaluator(gamma, n).phase
        x = sample_x(ph, 1000, rng)
        worst[0] = max(worst[0], float(np.max(np.abs(modulus_identity(ph, x) - 1))))
        worst[1] = max(worst[1], float(np.max(np.abs(basis_wronskian(ph, x) - 1))))
        worst[2] = max(worst[2], float(np.max(kummer_residual(ph, x))))
    ok = worst[0] <= 1e-11 and worst[1] <= 1e-10 and worst[2] <= 1e-9
    acceptance_log(6, ok, f"Psi' w / gamma - 1: {worst[0]:.1e} (1e-11); Wronskian - 1: {worst[1]:.1e} (1e-10); "
                          f"ODE residual: {worst[2]:.1e} (1e-9)")
    assert ok


def test_criterion_07_parity_normalization(acceptance_log):
    gamma = 1e3
    z = np.random.default_rng(7).uniform(0, 1, 200)
    parity_ok, worst = True, 0.0
    for n in list(range(9)) + [101, 1001]:
        e = evaluator(gamma, n)
        parity_ok &= bool(np.array_equal(e.eval(-z), (-1) ** n * e.eval(z)))
        c = legendre_central(n)
        got, ref = (e.eval(0.0), c.p0) if n % 2 == 0 else (e.eval_derivative(0.0), c.dp0)
        worst = max(worst, abs(got / ref - 1))
    ok = parity_ok and worst <= 1e-12
    acceptance_log(7, ok, f"parity exact: {parity_ok}; max relative normalization error {worst:.1e} (1e-12)")
    assert ok


def test_criterion_08_monotonicity(acceptance_log):
    positive, worst = True, math.inf
    for gamma in (10.0, 100.0, 1000.0):
        for sigma in (0.1, 0.5, 0.9):
            n = int(round(gamma * sigma))
            rep = check_conjecture1(gamma, n, J=1, evaluator=evaluator(gamma, n))
            positive &= rep.verdict(0) == PASS
            worst = min(worst, rep.minima[1])
    ok = positive and worst >= -1e-10
    acceptance_log(8, ok, f"M > 0: {positive}; min M'/M over grid {worst:.3e} (>= -1e-10)")
    assert ok


ACCELERATED_PAIRS = [(200.0, 50), (100.0, 25), (100.0, 80), (500.0, 400), (1000.0, 900)]


def test_criterion_09_accelerated(acceptance_log):
    errs = {}
    for gamma, n in ACCELERATED_PAIRS:
        full = evaluator(gamma, n)
        acc = build_evaluator_accelerated(gamma, n, harvest_seed(full))
        z = np.concatenate([np.linspace(0.0, 0.999, 200), 1 - np.geomspace(1e-3, 1.0001 * math.exp(-ACCELERATED_END), 100)])
        errs[(gamma, n)] = float(np.max(np.abs(acc.eval(z) - full.eval(z))))
    ok = all(v <= 1e-12 for v in errs.values())
    detail = ", ".join(f"({g:g},{n}) {v:.1e}" for (g, n), v in errs.items())
    acceptance_log(9, ok, f"max |accelerated - full| per pair: {detail}; tol 1e-12")
    assert ok


def test_criterion_10_eval_timing_shape(acceptance_log):
    out = io.StringIO()
    code = cli.main(["--format", "json", "bench", "--mode", "eval", "--points", "200000", "--repeat", "3",
                     "--gamma-range", "100", "100000", "4", "--sigma-range", "0.5", "0.5", "1"], out=out)
    doc = json.loads(out.getvalue())
    ratio = doc["summary"]["max_over_min"]
    ok = code == 0 and ratio < 3
    times = ", ".join(f"{r['gamma']:g}: {r['seconds']:.2e}s" for r in doc["rows"])
    acceptance_log(10, ok, f"per-point eval time {times}; max/min {ratio:.2f} (< 3)")
    assert ok
