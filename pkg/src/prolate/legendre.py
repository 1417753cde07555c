"""Legendre polynomials, their central values and the orthonormal family."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Gamma(m + 1/2) / (sqrt(m) Gamma(m + 1)) ~ sum_i c_i m^{-i}
_RATIO_SERIES = (1.0, -1.0 / 8, 1.0 / 128, 5.0 / 1024, -21.0 / 32768,
                 -399.0 / 262144, 869.0 / 4194304)
_PRODUCT_CUTOFF = 100


def _check_z(z):
    z = np.asarray(z, dtype=float)
    if np.any(~(np.abs(z) <= 1.0)):
        raise DomainError("Legendre evaluation restricted to [-1, 1]")
    return z


def legendre_p(n: int, z):
    """Return (P_n(z), P_n'(z)) by upward recurrence."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    z = _check_z(z)
    p0, p1 = np.ones_like(z), z.copy()
    d0, d1 = np.zeros_like(z), np.ones_like(z)
    if n == 0:
        p, d = p0, d0
    else:
        for m in range(1, n):
            p0, p1 = p1, ((2 * m + 1) * z * p1 - m * p0) / (m + 1)
            # P'_{m+1} = P'_{m-1} + (2m + 1) P_m
            d0, d1 = d1, d0 + (2 * m + 1) * p0
        p, d = p1, d1
    if p.ndim == 0:
        return float(p), float(d)
    return p, d


def _half_ratio(m: int) -> float:
    """Gamma(m + 1/2) / (sqrt(pi) Gamma(m + 1)) = binom(2m, m) / 4^m."""
    if m < _PRODUCT_CUTOFF:
        r = 1.0
        for j in range(1, m + 1):
            r *= (2 * j - 1) / (2 * j)
        return r
    x = 1.0 / m
    s = 0.0
    for c in reversed(_RATIO_SERIES):
        s = s * x + c
    return s / math.sqrt(math.pi * m)


@dataclass(frozen=True)
class LegendreCentralValues:
    n: int
    p0: float
    dp0: float


def legendre_central(n: int) -> LegendreCentralValues:
    """P_n(0) and P_n'(0), accurate for very large n."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if n % 2 == 0:
        m = n // 2
        return LegendreCentralValues(n, (-1) ** m * _half_ratio(m), 0.0)
    # P_n'(0) = n P_{n-1}(0) for odd n
    m = (n - 1) // 2
    return LegendreCentralValues(n, 0.0, n * (-1) ** m * _half_ratio(m))


def legendre_pbar(n: int, z):
    """L2(-1, 1)-orthonormal Legendre polynomial sqrt(n + 1/2) P_n(z)."""
    p, _ = legendre_p(n, z)
    return p * math.sqrt(n + 0.5)
