"""Legendre-coefficient representation of the angular prolate functions.

The reduced spheroidal operator

    L[y] = -((1 - z^2) y')' + gamma^2 z^2 y

is tridiagonal in the orthonormal Legendre basis once even and odd
degrees are separated.  Its eigenvalues are the Sturm-Liouville values
chi_n(gamma) and its eigenvectors the Legendre coefficients of PS_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .chebyshev import EPS
from .errors import DomainError, NumericalFailure
from .legendre import legendre_central

CHI_RTOL = 1e-13
MAX_DIM = 1 << 22


@dataclass(frozen=True)
class SymTridiagonal:
    diag: np.ndarray
    offdiag: np.ndarray

    @property
    def dim(self) -> int:
        return self.diag.size

    def matvec(self, x):
        y = self.diag * x
        y[:-1] += self.offdiag * x[1:]
        y[1:] += self.offdiag * x[:-1]
        return y

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def build_matrix(gamma: float, parity: int, dim: int) -> SymTridiagonal:
    """Matrix of L restricted to P-bar_{2m + parity}, m = 0..dim-1."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if dim < 4:
        raise ValueError("dim must be at least 4")
    g2 = float(gamma) ** 2
    kap = 2.0 * np.arange(dim) + parity
    diag = kap * (kap + 1) + g2 * (2 * kap * (kap + 1) - 1) / ((2 * kap + 3) * (2 * kap - 1))
    k = kap[:-1]
    off = g2 * (k + 2) * (k + 1) / ((2 * k + 3) * np.sqrt((2 * k + 1) * (2 * k + 5)))
    return SymTridiagonal(diag, off)


@numba.njit(cache=True)
def _sturm_count(d, e2, x, pivmin):
    """Number of eigenvalues strictly below x."""
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, d.size):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


@numba.njit(cache=True)
def _bisect(d, e2, j, lo, hi, pivmin, maxit):
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_count(d, e2, mid, pivmin) <= j:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sturm_count(T: SymTridiagonal, x: float) -> int:
    e2 = T.offdiag ** 2
    return int(_sturm_count(T.diag, e2, float(x), _pivmin(T)))


def _pivmin(T: SymTridiagonal) -> float:
    return float(np.finfo(float).tiny) * max(1.0, float(np.max(T.offdiag ** 2, initial=1.0)))


def eigenvalue(T: SymTridiagonal, j: int) -> float:
    """The j-th smallest eigenvalue (0-based) by Sturm-sequence bisection."""
    if not 0 <= j < T.dim:
        raise ValueError("eigenvalue index out of range")
    off = np.abs(T.offdiag)
    rad = np.zeros(T.dim)
    rad[:-1] += off
    rad[1:] += off
    lo = min(0.0, float(np.min(T.diag - rad)))
    hi = float(np.max(T.diag + rad)) * (1 + 4 * EPS) + 1.0
    return float(_bisect(T.diag, T.offdiag ** 2, j, lo, hi, _pivmin(T), 400))


def initial_dim(gamma: float, n: int) -> int:
    return 50 + int(2.0 / math.pi * n) + int(math.sqrt(gamma * n))


def _parity_index(n: int) -> tuple[int, int]:
    return n % 2, n // 2


def _chi_at(gamma, n, dim):
    p, j = _parity_index(n)
    T = build_matrix(gamma, p, dim)
    return eigenvalue(T, j), T


def _converged_chi(gamma: float, n: int, dim: int | None = None):
    dim = max(dim or initial_dim(gamma, n), n // 2 + 8)
    prev, T = _chi_at(gamma, n, dim)
    while True:
        dim *= 2
        if dim > MAX_DIM:
            raise NumericalFailure(f"chi({gamma}, {n}) did not stabilize below dim {MAX_DIM}")
        cur, T2 = _chi_at(gamma, n, dim)
        if abs(cur - prev) <= CHI_RTOL * abs(cur):
            return prev, T, dim // 2
        prev, T = cur, T2


def chi(gamma: float, n: int) -> float:
    """Sturm-Liouville eigenvalue chi_n(gamma)."""
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be finite and positive, got {gamma}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _converged_chi(float(gamma), int(n))[0]


@dataclass(frozen=True)
class LegendreExpansion:
    """PS_n as sum_m coeffs[m] * P-bar_{2m + parity}."""

    gamma: float
    n: int
    parity: int
    coeffs: np.ndarray
    chi: float

    @property
    def dim(self) -> int:
        return self.coeffs.size


def _tail10(c):
    m = max(1, c.size // 10)
    return float(np.linalg.norm(c[-m:]) / np.linalg.norm(c))


def inverse_iteration(T: SymTridiagonal, shift: float, iters: int = 3, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(T.dim)
    x /= np.linalg.norm(x)
    ab = np.zeros((3, T.dim))
    ab[0, 1:] = T.offdiag
    ab[2, :-1] = T.offdiag
    for attempt, sigma in enumerate((shift, shift * (1 + 1e-13) + 1e-300)):
        ab[1] = T.diag - sigma
        try:
            y = x
            for _ in range(iters):
                y = solve_banded((1, 1), ab, y, check_finite=False)
                nrm = np.linalg.norm(y)
                if not (np.isfinite(nrm) and nrm > 0):
                    raise LinAlgError("breakdown")
                y = y / nrm
            return y
        except (LinAlgError, ValueError):
            continue
    raise NumericalFailure("inverse iteration broke down at the perturbed shift")


def _central_pbar(parity: int, dim: int) -> np.ndarray:
    """P-bar_kappa(0) (even) or P-bar_kappa'(0) (odd) for kappa = 2m + parity."""
    kap = 2 * np.arange(dim) + parity
    vals = np.empty(dim)
    if parity == 0:
        # P_{k+2}(0) = -(k+1)/(k+2) P_k(0)
        ratios = -(kap[:-1] + 1.0) / (kap[:-1] + 2.0)
        vals[0] = 1.0
        vals[1:] = np.cumprod(ratios)
    else:
        # P'_k(0) = k P_{k-1}(0)
        ev = _central_pbar(0, dim) / np.sqrt(2 * np.arange(dim) + 0.5)
        vals = kap * ev
    return vals * np.sqrt(kap + 0.5)


def ps_expansion(gamma: float, n: int, seed: int | None = None) -> LegendreExpansion:
    """Legendre expansion of PS_n(z; gamma), normalized to match P_n at 0."""
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be finite and positive, got {gamma}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    gamma = float(gamma)
    parity = n % 2
    dim = None
    while True:
        chi_n, T, dim = _converged_chi(gamma, n, dim)
        c = inverse_iteration(T, chi_n, seed=n if seed is None else seed)
        if _tail10(c) <= 100 * EPS:
            break
        dim *= 2
        if dim > MAX_DIM:
            raise NumericalFailure("Legendre expansion did not converge")
    central = legendre_central(n)
    target = central.p0 if parity == 0 else central.dp0
    c = c * (target / float(c @ _central_pbar(parity, c.size)))
    c.flags.writeable = False
    return LegendreExpansion(gamma, n, parity, c, chi_n)


@numba.njit(cache=True)
def _legendre_sum(coeffs, parity, z, derivative):
    out = np.empty(z.size)
    kmax = 2 * (coeffs.size - 1) + parity
    for i in range(z.size):
        x = z[i]
        p0, p1 = 1.0, x
        d0, d1 = 0.0, 1.0
        acc = 0.0
        for kap in range(kmax + 1):
            if kap == 0:
                p, d = p0, d0
            elif kap == 1:
                p, d = p1, d1
            else:
                m = kap - 1
                pn = ((2 * m + 1) * x * p1 - m * p0) / (m + 1)
                dn = d0 + (2 * m + 1) * p1
                p0, p1 = p1, pn
                d0, d1 = d1, dn
                p, d = pn, dn
            if (kap - parity) % 2 == 0:
                w = coeffs[(kap - parity) // 2] * math.sqrt(kap + 0.5)
                acc += w * (d if derivative else p)
        out[i] = acc
    return out


def eval_ps_oxr(e: LegendreExpansion, z, derivative: bool = False):
    """Evaluate the Legendre expansion (or its derivative) at z in [-1, 1]."""
    z = np.asarray(z, dtype=float)
    if np.any(~(np.abs(z) <= 1.0)):
        raise DomainError("z must lie in [-1, 1]")
    out = _legendre_sum(np.ascontiguousarray(e.coeffs), e.parity, np.atleast_1d(z).ravel(), derivative)
    return float(out[0]) if z.ndim == 0 else out.reshape(z.shape)


def eigen_residual(e: LegendreExpansion) -> float:
    """||T c - chi c|| / ||c|| for the matrix the expansion came from.

    The product is accumulated in extended precision so that the value
    reflects the eigenpair rather than the rounding of the check itself.
    """
    T = build_matrix(e.gamma, e.parity, e.dim)
    ld = np.longdouble
    c = e.coeffs.astype(ld)
    d, off = T.diag.astype(ld), T.offdiag.astype(ld)
    r = (d - ld(e.chi)) * c
    r[:-1] += off * c[1:]
    r[1:] += off * c[:-1]
    return float(np.sqrt(np.sum(r * r)) / np.sqrt(np.sum(c * c)))
