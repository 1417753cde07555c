"""Chebyshev expansions on intervals and piecewise Chebyshev expansions.

Every function in the package is ultimately represented here: a partition
``x_0 < x_1 < ... < x_m`` together with a degree-``k`` Chebyshev series on
each half-open piece ``[x_{i-1}, x_i)``.

Nodes are the Chebyshev extreme points (the Lobatto family), so both
endpoints of every piece are collocation points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NonconvergenceError

EPS = float(np.finfo(float).eps)
DEFAULT_ORDER = 29


def _check_interval(interval) -> tuple[float, float]:
    lo, hi = float(interval[0]), float(interval[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise ValueError(f"interval must satisfy lo < hi, got ({lo}, {hi})")
    return lo, hi


@lru_cache(maxsize=None)
def _reference_nodes(k: int) -> np.ndarray:
    nodes = -np.cos(np.pi * np.arange(k + 1) / k)
    if k % 2 == 0:
        nodes[k // 2] = 0.0
    nodes.flags.writeable = False
    return nodes


def cheb_nodes(k: int, interval=(-1.0, 1.0)) -> np.ndarray:
    """Return the ``k + 1`` Chebyshev extreme points on ``interval``, ascending.

    Examples
    --------
    >>> cheb_nodes(2, (0, 4))
    array([0., 2., 4.])
    """
    if k < 1:
        raise ValueError(f"order k must be >= 1, got {k}")
    lo, hi = _check_interval(interval)
    t = _reference_nodes(k)
    x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
    x[0], x[-1] = lo, hi
    return x


@lru_cache(maxsize=None)
def _transform(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrices (V, V^-1) with V[j, m] = T_m(t_j) at the ascending extreme points."""
    theta = np.pi * (k - np.arange(k + 1)) / k
    m = np.arange(k + 1)
    V = np.cos(np.outer(theta, m))
    # discrete cosine (type I) inverse: halve the end nodes and the end modes
    w = np.full(k + 1, 2.0 / k)
    w[0] = w[-1] = 1.0 / k
    Vinv = V.T * w
    Vinv[0] *= 0.5
    Vinv[-1] *= 0.5
    V.flags.writeable = False
    Vinv.flags.writeable = False
    return V, Vinv


def _v2c(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    k = values.shape[-1] - 1
    return values @ _transform(k)[1].T


def _c2v(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    k = coeffs.shape[-1] - 1
    return coeffs @ _transform(k)[0].T


def _clenshaw(c: np.ndarray, t):
    """Evaluate sum_j c[..., j] T_j(t); ``c`` rows broadcast against ``t``."""
    K = c.shape[-1]
    b1 = np.zeros(np.broadcast(c[..., 0], t).shape)
    b2 = np.zeros_like(b1)
    t2 = 2.0 * t
    for j in range(K - 1, 0, -1):
        b1, b2 = c[..., j] + t2 * b1 - b2, b1
    return c[..., 0] + t * b1 - b2


def derivative_coeffs(c: np.ndarray) -> np.ndarray:
    """Coefficients of d/dt of a Chebyshev series on the reference interval."""
    c = np.asarray(c, dtype=float)
    k = c.shape[-1] - 1
    d = np.zeros_like(c)
    if k == 0:
        return d
    d[..., k - 1] = 2 * k * c[..., k]
    for j in range(k - 1, 0, -1):
        d[..., j - 1] = d[..., j + 1] + 2 * j * c[..., j]
    d[..., 0] *= 0.5
    return d


def tail_ratio(coeffs) -> float:
    """Fraction of the coefficient 2-norm carried by degrees ceil(k/2)..k.

    Returns 0 for an all-zero vector.
    """
    a = np.asarray(coeffs, dtype=float)
    k = a.shape[-1] - 1
    scale = np.max(np.abs(a), axis=-1, keepdims=True)
    a = a / np.where(scale > 0, scale, 1.0)
    total = np.sqrt(np.sum(a * a, axis=-1))
    tail = np.sqrt(np.sum(a[..., (k + 1) // 2:] ** 2, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(total > 0, tail / np.where(total > 0, total, 1.0), 0.0)
    return float(r) if r.ndim == 0 else r


@dataclass(frozen=True)
class SpectralMatrices:
    """Coefficient-space integration and differentiation on [-1, 1].

    ``integ`` maps coefficients of f to those of the antiderivative that
    vanishes at -1 (the T_{k+1} term is dropped); ``diff`` maps
    coefficients of f to coefficients of f'.  Scale by (hi - lo)/2 or its
    reciprocal for a general interval.
    """

    order: int
    integ: np.ndarray
    diff: np.ndarray


def _antiderivative_full(k: int) -> np.ndarray:
    """(k+2) x (k+1) map from coefficients to antiderivative coefficients."""
    B = np.zeros((k + 2, k + 1))
    B[1, 0] = 1.0
    for j in range(1, k + 1):
        B[j + 1, j] += 1.0 / (2 * (j + 1))
        if j >= 2:
            B[j - 1, j] -= 1.0 / (2 * (j - 1))
    signs = (-1.0) ** np.arange(k + 2)
    B[0] = -(signs[1:] @ B[1:])
    return B


@lru_cache(maxsize=None)
def spectral_matrices(k: int) -> SpectralMatrices:
    if k < 1:
        raise ValueError(f"order k must be >= 1, got {k}")
    B = _antiderivative_full(k)
    integ = B[: k + 1].copy()
    # re-anchor after truncating T_{k+1}
    signs = (-1.0) ** np.arange(k + 1)
    integ[0] = 0.0
    integ[0] = -(signs @ integ)
    diff = derivative_coeffs(np.eye(k + 1)).T
    for M in (integ, diff):
        M.flags.writeable = False
    return SpectralMatrices(order=k, integ=integ, diff=diff)


@lru_cache(maxsize=None)
def value_integration_matrix(k: int) -> np.ndarray:
    """Node values of f -> node values of its antiderivative vanishing at -1.

    The antiderivative of the degree-k interpolant is integrated exactly
    (degree k + 1), so the matrix is exact on polynomials of degree <= k.
    """
    theta = np.pi * (k - np.arange(k + 1)) / k
    Vext = np.cos(np.outer(theta, np.arange(k + 2)))
    S = Vext @ _antiderivative_full(k) @ _transform(k)[1]
    S[0] = 0.0
    S.flags.writeable = False
    return S


@lru_cache(maxsize=None)
def value_differentiation_matrix(k: int) -> np.ndarray:
    """Node values of f -> node values of f' on the reference interval."""
    V, Vinv = _transform(k)
    D = V @ spectral_matrices(k).diff @ Vinv
    D.flags.writeable = False
    return D


class ChebyshevCoeffs:
    """A single Chebyshev series on a closed interval.

    Parameters
    ----------
    coeffs : array_like
        Coefficients a_0..a_k.
    interval : (float, float)
        Endpoints (lo, hi) with lo < hi.
    """

    def __init__(self, coeffs, interval=(-1.0, 1.0)):
        a = np.array(coeffs, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("coeffs must be a nonempty 1-d vector")
        self.coeffs = a
        self.coeffs.flags.writeable = False
        self.interval = _check_interval(interval)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __repr__(self):
        return f"ChebyshevCoeffs(order={self.order}, interval={self.interval})"

    def _reference(self, x):
        lo, hi = self.interval
        x = np.asarray(x, dtype=float)
        if np.any((x < lo) | (x > hi)) or np.any(np.isnan(x)):
            raise DomainError(f"point outside [{lo}, {hi}]")
        return np.clip((2.0 * x - (lo + hi)) / (hi - lo), -1.0, 1.0)

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        t = self._reference(x)
        out = _clenshaw(self.coeffs, t)
        return float(out) if np.ndim(out) == 0 else out

    def eval_d(self, x):
        t = self._reference(x)
        lo, hi = self.interval
        out = _clenshaw(derivative_coeffs(self.coeffs), t) * (2.0 / (hi - lo))
        return float(out) if np.ndim(out) == 0 else out

    def tail_ratio(self) -> float:
        return tail_ratio(self.coeffs)


def vals_to_coeffs(values, interval=(-1.0, 1.0), order: int | None = None) -> ChebyshevCoeffs:
    """Interpolate values sampled at ``cheb_nodes(k, interval)``."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("need at least two sampled values")
    if order is not None and values.size != order + 1:
        raise ValueError(f"expected {order + 1} values for order {order}, got {values.size}")
    return ChebyshevCoeffs(_v2c(values), interval)


def coeffs_to_vals(expansion: ChebyshevCoeffs) -> np.ndarray:
    return _c2v(expansion.coeffs)


class PiecewiseChebyshev:
    """Piecewise Chebyshev expansion of shared order on a partition.

    Piece ``i`` covers ``[breakpoints[i], breakpoints[i+1])``; the global
    right endpoint belongs to the last piece.

    Parameters
    ----------
    breakpoints : array_like, shape (m + 1,)
        Strictly increasing.
    coeffs : array_like, shape (m, k + 1)
    exponents : array_like of int, shape (m,), optional
        Binary exponent of each piece: piece ``i`` represents
        ``2**exponents[i]`` times its Chebyshev series.  This keeps
        functions whose range exceeds that of binary64 representable.
    """

    def __init__(self, breakpoints, coeffs, exponents=None):
        bp = np.array(breakpoints, dtype=float)
        c = np.array(coeffs, dtype=float)
        if c.ndim == 1:
            c = c[None, :]
        if bp.ndim != 1 or bp.size < 2 or c.shape[0] != bp.size - 1:
            raise ValueError("need m + 1 breakpoints for m coefficient rows")
        if not np.all(np.isfinite(bp)) or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be finite and strictly increasing")
        if exponents is None:
            ex = np.zeros(c.shape[0], dtype=np.int64)
        else:
            ex = np.array(exponents, dtype=np.int64).reshape(-1)
            if ex.size != c.shape[0]:
                raise ValueError("need one exponent per piece")
        bp.flags.writeable = False
        c.flags.writeable = False
        ex.flags.writeable = False
        self.breakpoints = bp
        self.coeffs = c
        self.exponents = ex

    @property
    def scaled(self) -> bool:
        return bool(np.any(self.exponents))

    @property
    def order(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def npieces(self) -> int:
        return self.coeffs.shape[0]

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def __repr__(self):
        lo, hi = self.domain
        return f"PiecewiseChebyshev(pieces={self.npieces}, order={self.order}, domain=[{lo:g}, {hi:g}])"

    def piece(self, i: int) -> ChebyshevCoeffs:
        """Piece ``i`` (its mantissa series when the piece carries an exponent)."""
        return ChebyshevCoeffs(self.coeffs[i], (self.breakpoints[i], self.breakpoints[i + 1]))

    def pieces(self) -> list[ChebyshevCoeffs]:
        return [self.piece(i) for i in range(self.npieces)]

    @cached_property
    def _dcoeffs(self) -> np.ndarray:
        h = np.diff(self.breakpoints)
        return derivative_coeffs(self.coeffs) * (2.0 / h)[:, None]

    def locate(self, x):
        """Index of the piece containing each x (half-open convention)."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any(~((x >= lo) & (x <= hi))):
            raise DomainError(f"point outside the domain [{lo:.17g}, {hi:.17g}]")
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.minimum(idx, self.npieces - 1)

    def _mantissa(self, coeffs, x):
        x = np.asarray(x, dtype=float)
        idx = self.locate(x)
        a, b = self.breakpoints[idx], self.breakpoints[idx + 1]
        t = np.clip((2.0 * x - (a + b)) / (b - a), -1.0, 1.0)
        return _clenshaw(coeffs[idx], t), self.exponents[idx]

    def _eval(self, coeffs, x):
        m, e = self._mantissa(coeffs, x)
        if self.scaled:
            with np.errstate(over="ignore", under="ignore"):
                out = np.ldexp(m, e)  # saturates to inf or 0 beyond binary64
        else:
            out = m
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, x):
        return self._eval(self.coeffs, x)

    def eval_d(self, x):
        return self._eval(self._dcoeffs, x)

    def eval_scaled(self, x, derivative: bool = False):
        """Return (mantissa, exponent) with value = mantissa * 2**exponent."""
        return self._mantissa(self._dcoeffs if derivative else self.coeffs, x)

    def derivative(self) -> "PiecewiseChebyshev":
        return PiecewiseChebyshev(self.breakpoints, self._dcoeffs, self.exponents)

    def node_values(self, scaled: bool = False) -> np.ndarray:
        """Values at each piece's Chebyshev nodes, shape (m, k + 1).

        With ``scaled=True`` the mantissas are returned without applying
        the per-piece exponents.
        """
        v = _c2v(self.coeffs)
        if scaled or not self.scaled:
            return v
        return np.ldexp(v, self.exponents[:, None])

    def nodes(self) -> np.ndarray:
        bp = self.breakpoints
        t = _reference_nodes(self.order)
        x = 0.5 * (bp[1:] - bp[:-1])[:, None] * t + 0.5 * (bp[1:] + bp[:-1])[:, None]
        x[:, 0], x[:, -1] = bp[:-1], bp[1:]
        return x

    def count_coefficients(self, lo: float | None = None, hi: float | None = None) -> int:
        """Number of coefficients in pieces that intersect [lo, hi)."""
        a, b = self.domain
        lo = a if lo is None else lo
        hi = b if hi is None else hi
        mask = (self.breakpoints[:-1] < hi) & (self.breakpoints[1:] > lo)
        return int(mask.sum()) * (self.order + 1)

    def to_dict(self) -> dict:
        d = {
            "order": self.order,
            "breakpoints": self.breakpoints.tolist(),
            "coeffs": self.coeffs.tolist(),
        }
        if self.scaled:
            d["exponents"] = self.exponents.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseChebyshev":
        obj = cls(d["breakpoints"], d["coeffs"], d.get("exponents"))
        if obj.order != int(d["order"]):
            raise ValueError("order field disagrees with coefficient rows")
        return obj

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, s: str) -> "PiecewiseChebyshev":
        return cls.from_dict(json.loads(s))


def piecewise_eval(f: PiecewiseChebyshev, x):
    return f(x)


def piecewise_eval_d(f: PiecewiseChebyshev, x):
    return f.eval_d(x)


def from_node_values(breakpoints: Sequence[float], values) -> PiecewiseChebyshev:
    """Build a piecewise expansion from values at each piece's nodes."""
    return PiecewiseChebyshev(breakpoints, _v2c(np.asarray(values, dtype=float)))


def adaptive_fit(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    k: int = DEFAULT_ORDER,
    tol: float = 100 * EPS,
    max_depth: int = 60,
    max_pieces: int = 20000,
) -> PiecewiseChebyshev:
    """Piecewise interpolant of a vectorized ``f`` on [a, b] by bisection.

    A piece is accepted once its tail ratio is at most ``tol``.
    """
    a, b = _check_interval((a, b))
    stack = [(a, b, 0)]
    bps, rows = [a], []
    while stack:
        lo, hi, depth = stack.pop()
        c = _v2c(np.asarray(f(cheb_nodes(k, (lo, hi))), dtype=float))
        r = tail_ratio(c)
        if r <= tol:
            rows.append(c)
            bps.append(hi)
            continue
        if depth >= max_depth or len(rows) + len(stack) >= max_pieces:
            raise NonconvergenceError(
                f"adaptive_fit did not resolve f on [{lo:g}, {hi:g}] (tail {r:.3g})",
                interval=(lo, hi), tail=r)
        mid = 0.5 * (lo + hi)
        stack.append((mid, hi, depth + 1))
        stack.append((lo, mid, depth + 1))
    return PiecewiseChebyshev(bps, np.array(rows))
