"""Finite-order numerical evidence for monotonicity of prolate profiles.

Two profiles are examined:

* ``M_n(z) = w(-log(1 - z)) / (1 + z)`` on (0, 1), whose derivatives are
  expected to be nonnegative (absolute monotonicity);
* ``g(t) = exp(int s) / sqrt(1 + t^2)`` on (0, inf), built from the
  logarithmic derivative ``s`` of the decaying solution on the imaginary
  axis, whose derivatives are expected to alternate in sign.

Both profiles can be far outside the binary64 range, so the checks work
with relative derivatives ``f^(j) / f``.  These have the sign of ``f^(j)``
and follow from the logarithmic derivative ``h = f' / f`` through the
Taylor recurrence for ``exp(int h)``.  The results are reports, not proofs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .chebyshev import PiecewiseChebyshev, adaptive_fit
from .phase import ProlateEvaluator, ProlateParams, build_evaluator, riccati_solution
from .ode import SolverOptions
from . import oxr

DELTA = 1e-6
NOISE_FLOOR = 1e-8
MAX_ORDER = 8
RELIABLE_ORDER = 6
IMAG_GRID = (1e-3, 1e3)

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"


@dataclass
class MonotonicityReport:
    """Per-order minima of the signed derivatives over a sample grid.

    ``minima[j]`` is the minimum of ``(-1)^j f^(j)`` (complete
    monotonicity) or ``f^(j)`` (absolute monotonicity) over the grid,
    divided by ``f`` when ``relative`` is set.  An order is
    indeterminate when its minimum is negative but within
    ``NOISE_FLOOR`` times the local scale of that derivative.
    """

    gamma: Optional[float]
    n: Optional[int]
    kind: str
    interval: tuple[float, float]
    orders: list[int]
    minima: list[float]
    verdicts: list[str]
    grid_size: int
    relative: bool = False
    note: str = ""

    def __post_init__(self):
        if len(self.minima) != len(self.orders) or len(self.verdicts) != len(self.orders):
            raise ValueError("one minimum and one verdict per order")

    @property
    def max_order(self) -> int:
        return max(self.orders, default=-1)

    @property
    def passed(self) -> bool:
        return all(v == PASS for v in self.verdicts)

    def verdict(self, j: int) -> str:
        return self.verdicts[self.orders.index(j)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interval"] = list(self.interval)
        d["minima"] = [None if not math.isfinite(v) else v for v in self.minima]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _refused(gamma, n, kind, interval, J, grid_size=0) -> MonotonicityReport:
    orders = list(range(J + 1))
    return MonotonicityReport(
        gamma, n, kind, tuple(interval), orders, [math.nan] * len(orders),
        [INDETERMINATE] * len(orders), grid_size,
        note=f"orders above {MAX_ORDER} refused: spectral differentiation noise dominates")


def _verdicts(values: np.ndarray, scales: np.ndarray) -> tuple[list[float], list[str]]:
    """Minimum over the grid and verdict for each row of ``values``."""
    minima, verdicts = [], []
    for v, s in zip(values, scales):
        i = int(np.argmin(v))
        m = float(v[i])
        minima.append(m)
        if m >= 0:
            verdicts.append(PASS)
        elif -m <= NOISE_FLOOR * s[i]:
            verdicts.append(INDETERMINATE)
        else:
            verdicts.append(FAIL)
    return minima, verdicts


def sample_grid(interval, size: int = 400) -> np.ndarray:
    """Interior points: equispaced, plus a cluster geometric toward the right end.

    Endpoints are excluded; at z = 0 the odd derivatives of an even profile
    vanish and their sign carries no information.
    """
    a, b = interval
    lin = np.linspace(a, b, size // 2 + 2)[1:-1]
    geo = b - (b - a) * np.geomspace(1.0, 1e-12, size - size // 2 + 1)[1:]
    return np.unique(np.concatenate([lin, geo]))


def relative_derivatives(h_taylor: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Relative derivatives f^(j)/f, j = 0..J, from Taylor data of h = f'/f.

    ``h_taylor[i]`` holds the i-th Taylor coefficient ``h^(i)/i!`` at each
    sample point (shape ``(J, npts)``).  Returns the values and a majorant
    obtained by running the same recurrence on ``|h_taylor|``; the
    majorant bounds the size of the terms that cancel.
    """
    J = h_taylor.shape[0]
    npts = h_taylor.shape[1]
    G = np.zeros((J + 1, npts))
    A = np.zeros((J + 1, npts))
    G[0] = A[0] = 1.0
    habs = np.abs(h_taylor)
    for k in range(J):
        # (exp H)' = h exp H, coefficientwise
        G[k + 1] = np.einsum("in,in->n", h_taylor[: k + 1], G[k::-1]) / (k + 1)
        A[k + 1] = np.einsum("in,in->n", habs[: k + 1], A[k::-1]) / (k + 1)
    fact = np.array([math.factorial(j) for j in range(J + 1)], dtype=float)[:, None]
    return G * fact, A * fact


def spectral_derivatives(f: PiecewiseChebyshev, J: int) -> list[PiecewiseChebyshev]:
    """[f, f', ..., f^(J)] by repeated differentiation of the expansion."""
    out = [f]
    for _ in range(J):
        out.append(out[-1].derivative())
    return out


def _chop(coeffs: np.ndarray, tol: float) -> np.ndarray:
    """Zero the trailing coefficients below ``tol`` relative to the largest one.

    Rounding noise in the discarded tail would otherwise be amplified by
    roughly k^2 per differentiation.
    """
    out = coeffs.copy()
    for row in out:
        big = np.nonzero(np.abs(row) > tol * np.max(np.abs(row)))[0]
        row[(big[-1] + 1 if big.size else 1):] = 0.0
    return out


def fit_on(f: Callable, interval, tol: float = 1e-14, breaks=None) -> PiecewiseChebyshev:
    """Adaptive piecewise fit of ``f`` with chopped tails.

    ``breaks`` are points where ``f`` may be only approximately smooth
    (for instance the partition of an underlying solver); they are used
    as initial breakpoints so that no piece straddles one.
    """
    a, b = interval
    edges = [a]
    if breaks is not None:
        edges += [float(x) for x in np.unique(breaks) if a < x < b]
    edges.append(b)
    bps, rows = [a], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        part = adaptive_fit(f, lo, hi, tol=tol, max_depth=80)
        bps.extend(part.breakpoints[1:])
        rows.append(part.coeffs)
    return PiecewiseChebyshev(bps, _chop(np.vstack(rows), tol))


def check_absolute_monotone(f: Callable, interval=(0.0, 1.0 - DELTA), J: int = 3, *,
                            log_derivative: bool = False, gamma=None, n=None,
                            grid_size: int = 400, breaks=None,
                            fit_tol: float = 1e-14) -> MonotonicityReport:
    """Check f^(j) >= 0 for j = 0..J on ``interval``.

    Parameters
    ----------
    f : callable
        Vectorized function of z.  With ``log_derivative=True`` it is the
        logarithmic derivative h = F'/F of a positive profile F, and the
        report concerns F through F^(j)/F.
    interval : tuple of float
        Closed subinterval of the real line; ``(0, 1 - 1e-6)`` by default.
    J : int
        Highest order checked.  Orders above 8 are refused and reported
        as indeterminate.
    breaks : array_like, optional
        Points where ``f`` is only piecewise smooth.
    fit_tol : float
        Tail tolerance of the piecewise fit; it should sit just above the
        rounding noise of ``f``.
    """
    interval = (float(interval[0]), float(interval[1]))
    if not interval[0] < interval[1]:
        raise ValueError("interval must have positive length")
    if J < 0:
        raise ValueError("J must be nonnegative")
    if J > MAX_ORDER:
        return _refused(gamma, n, "absolute", interval, J)
    z = sample_grid(interval, grid_size)
    fit = fit_on(f, interval, fit_tol, breaks)
    if log_derivative:
        ders = spectral_derivatives(fit, max(J - 1, 0))
        taylor = np.array([d(z) / math.factorial(i) for i, d in enumerate(ders)])[:J]
        values, scales = relative_derivatives(taylor.reshape(J, z.size))
        relative = True
    else:
        ders = spectral_derivatives(fit, J)
        values = np.array([d(z) for d in ders])
        scales = np.repeat(np.max(np.abs(values), axis=1, keepdims=True), z.size, axis=1)
        relative = False
    minima, verdicts = _verdicts(values, scales)
    note = "" if J <= RELIABLE_ORDER else f"orders above {RELIABLE_ORDER} are near the noise limit"
    return MonotonicityReport(gamma, n, "absolute", interval, list(range(J + 1)),
                              minima, verdicts, int(z.size), relative, note)


def modulus_log_derivative(e: ProlateEvaluator) -> Callable:
    """z -> M'(z)/M(z) for M(z) = w(-log(1 - z)) / (1 + z).

    The ratio w'/w is formed from mantissas, so it is finite even where
    w itself overflows.
    """
    phase = e.phase

    def h(z):
        z = np.asarray(z, dtype=float)
        x = -np.log1p(-z)
        wm, _ = phase.w.eval_scaled(x)
        dwm, _ = phase.dw.eval_scaled(x)
        if np.any(~(wm > 0)):
            raise ValueError("modulus is not positive on the sample grid")
        return dwm / wm / (1.0 - z) - 1.0 / (1.0 + z)

    return h


def modulus_taylor(e: ProlateEvaluator, z: np.ndarray, J: int) -> tuple[np.ndarray, np.ndarray]:
    """Taylor coefficients in z of M_n / M_n(z) at each z, and a majorant.

    Derivatives of w in x come from spectral differentiation of the
    solver's own expansion of w' (pieces are O(1) wide in x); they are
    composed with x(z) = -log(1 - z) and divided by 1 + z as truncated
    power series.  All mantissas at a point share one exponent, which
    cancels in the ratio.
    """
    z = np.asarray(z, dtype=float)
    K = J + 1
    x = -np.log1p(-z)
    wm, _ = e.phase.w.eval_scaled(x)
    if np.any(~(wm > 0)):
        raise ValueError("modulus is not positive on the sample grid")
    W = np.zeros((K, z.size))
    W[0] = 1.0
    d = e.phase.dw
    d = PiecewiseChebyshev(d.breakpoints, _chop(d.coeffs, 1e-15), d.exponents if d.scaled else None)
    for k in range(1, K):
        m, _ = d.eval_scaled(x)
        W[k] = m / wm / math.factorial(k)
        if k + 1 < K:
            d = d.derivative()
    # x(z + tau) - x(z) = sum_k tau^k / (k (1 - z)^k)
    delta = np.zeros((K, z.size))
    r = 1.0 / (1.0 - z)
    for k in range(1, K):
        delta[k] = r ** k / k
    inv = np.array([(-1.0) ** k / (1.0 + z) ** k for k in range(K)])  # (1+z)/(1+z+tau)

    def compose(Wc):
        out = np.zeros((K, z.size))
        power = np.zeros((K, z.size))
        power[0] = 1.0
        for k in range(K):
            out += Wc[k] * power
            power = _series_mul(power, delta, K)
        return out

    vals = _series_mul(compose(W), inv, K)
    major = _series_mul(compose(np.abs(W)), np.abs(inv), K)
    fact = np.array([math.factorial(j) for j in range(K)], dtype=float)[:, None]
    return vals * fact, major * fact


def check_conjecture1(gamma: float, n: int, J: int = 3, *, evaluator: ProlateEvaluator | None = None,
                      delta: float = DELTA, grid_size: int = 400) -> MonotonicityReport:
    """Absolute monotonicity of M_n(z; gamma) on (0, 1 - delta) up to order J.

    Minima are reported for M^(j)/M, which has the sign of M^(j).
    """
    if gamma == 0:
        raise ValueError("gamma = 0 is not supported: the Legendre Q limit is not implemented")
    interval = (0.0, 1.0 - delta)
    if J < 0:
        raise ValueError("J must be nonnegative")
    if J > MAX_ORDER:
        return _refused(float(gamma), int(n), "absolute", interval, J)
    e = evaluator if evaluator is not None else build_evaluator(gamma, n)
    z = sample_grid(interval, grid_size)
    values, scales = modulus_taylor(e, z, J)
    minima, verdicts = _verdicts(values, scales)
    note = "" if J <= RELIABLE_ORDER else f"orders above {RELIABLE_ORDER} are near the noise limit"
    return MonotonicityReport(float(gamma), int(n), "absolute", interval, list(range(J + 1)),
                              minima, verdicts, int(z.size), True, note)


def _series_mul(a: np.ndarray, b: np.ndarray, K: int) -> np.ndarray:
    out = np.zeros((K,) + a.shape[1:])
    for k in range(K):
        out[k] = np.einsum("in,in->n", a[: k + 1], b[k::-1])
    return out


def _series_inv(a: np.ndarray, K: int) -> np.ndarray:
    out = np.zeros((K,) + a.shape[1:])
    out[0] = 1.0 / a[0]
    for k in range(1, K):
        out[k] = -np.einsum("in,in->n", a[1 : k + 1], out[k - 1 :: -1]) / a[0]
    return out


def imaginary_axis_taylor(params: ProlateParams, s: np.ndarray, t: np.ndarray, K: int) -> np.ndarray:
    """Taylor coefficients (K of them) of h = s - t/(1+t^2) at each t.

    The coefficients of s beyond the first follow from the Riccati
    equation s' = -s^2 - q1 with q1 = -gamma^2 - (chi - gamma^2)/d - 1/d^2
    and d = 1 + t^2.
    """
    t = np.asarray(t, dtype=float)
    npts = t.size
    d = np.zeros((K, npts))
    d[0] = 1.0 + t * t
    if K > 1:
        d[1] = 2.0 * t
    if K > 2:
        d[2] = 1.0
    inv_d = _series_inv(d, K)
    inv_d2 = _series_mul(inv_d, inv_d, K)
    g2 = params.gamma ** 2
    # -q1 - gamma^2 = (chi - gamma^2)/d + 1/d^2
    mq1 = (params.chi - g2) * inv_d + inv_d2
    S = np.zeros((K, npts))
    S[0] = s
    for k in range(K - 1):
        s2 = np.einsum("in,in->n", S[: k + 1], S[k::-1])
        # s' = -(s^2 - gamma^2) + (-q1 - gamma^2)
        rhs = -s2 + mq1[k]
        if k == 0:
            rhs = rhs + g2
        S[k + 1] = rhs / (k + 1)
    num = np.zeros((K, npts))
    num[0] = t
    if K > 1:
        num[1] = 1.0
    return S - _series_mul(num, inv_d, K)


def check_imaginary_axis_monotone(gamma: float, n: int, J: int = 6, *, chi: float | None = None,
                                  grid_size: int = 200, opts: SolverOptions | None = None
                                  ) -> MonotonicityReport:
    """Complete monotonicity of g(t) = exp(int s) / sqrt(1 + t^2) up to min(J, 2 + n, 6).

    g is positive by construction and known up to a positive constant;
    the report lists minima of (-1)^j g^(j)(t) / g(t) over a geometric grid.
    """
    if gamma == 0:
        raise ValueError("gamma = 0 is not supported: the Legendre Q limit is not implemented")
    interval = IMAG_GRID
    if J > MAX_ORDER:
        return _refused(float(gamma), int(n), "complete", interval, J)
    if chi is None:
        chi = oxr.chi(gamma, n)
    params = ProlateParams(float(gamma), int(n), float(chi))
    top = min(J, 2 + int(n), RELIABLE_ORDER)
    t = np.geomspace(*interval, grid_size)
    s = riccati_solution(params, opts=opts)[0](t)
    if np.any(~(s < 0)):
        raise ValueError("logarithmic derivative is not negative on the grid")
    taylor = imaginary_axis_taylor(params, s, t, max(top, 1))[:top]
    values, scales = relative_derivatives(taylor.reshape(top, t.size))
    signs = np.array([(-1.0) ** j for j in range(top + 1)])[:, None]
    minima, verdicts = _verdicts(values * signs, scales)
    note = ("g is a positively scaled real profile; a complex constant factor "
            "in the third-kind function does not enter")
    return MonotonicityReport(float(gamma), int(n), "complete", interval, list(range(top + 1)),
                              minima, verdicts, int(t.size), True, note)
