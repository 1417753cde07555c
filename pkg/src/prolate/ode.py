"""Adaptive piecewise Chebyshev solver for first-order systems.

Local problems are discretized in integral form,

    y(t) = v + int_{anchor}^{t} F(s, y(s)) ds,

at the k + 1 extreme points of each subinterval, with the anchor at the
left end for initial value problems and at the right end for terminal
value problems.  Subintervals are bisected until every component's tail
ratio is small.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np

from .chebyshev import (
    DEFAULT_ORDER,
    EPS,
    PiecewiseChebyshev,
    _v2c,
    cheb_nodes,
    tail_ratio,
    value_integration_matrix,
)
from .errors import NonconvergenceError, NonlinearFailure, NumericalFailure

_RESCALE_HI = 2.0 ** 256
_RESCALE_LO = 2.0 ** -256

Rhs = Callable[[np.ndarray, np.ndarray], np.ndarray]
Jac = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class OdeProblem:
    """y'(t) = F(t, y) on (a, b) with data at one end.

    ``rhs(t, y)`` takes ``t`` of shape (N,) and ``y`` of shape (n, N) and
    returns (n, N).  ``jacobian(t, y)`` returns dF/dy with shape (n, n, N).
    For linear problems ``rhs`` must be affine in ``y``; ``homogeneous``
    additionally declares it linear, which lets the solver rescale the
    data by powers of two so that solutions spanning more than the binary64
    range stay representable.  ``monitor`` restricts the tail-ratio test
    to the listed components (default: all).
    """

    rhs: Rhs
    domain: tuple[float, float]
    boundary: np.ndarray
    jacobian: Optional[Jac] = None
    direction: Literal["initial", "terminal"] = "initial"
    linear: bool = False
    monitor: Optional[tuple[int, ...]] = None
    homogeneous: bool = False

    def __post_init__(self):
        a, b = float(self.domain[0]), float(self.domain[1])
        if not a < b:
            raise ValueError(f"domain must satisfy a < b, got ({a}, {b})")
        self.domain = (a, b)
        self.boundary = np.atleast_1d(np.asarray(self.boundary, dtype=float))
        if not np.all(np.isfinite(self.boundary)):
            raise ValueError("boundary data must be finite")
        if self.direction not in ("initial", "terminal"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.homogeneous:
            self.linear = True
        if not self.linear and self.jacobian is None:
            raise ValueError("nonlinear problems need a jacobian")
        if self.monitor is not None:
            self.monitor = tuple(int(i) for i in self.monitor)
            if not self.monitor or not all(0 <= i < self.boundary.size for i in self.monitor):
                raise ValueError("monitor must list valid component indices")

    @property
    def dimension(self) -> int:
        return self.boundary.size


@dataclass
class SolverOptions:
    order: int = DEFAULT_ORDER
    tail_factor: float = 100.0
    eps0: float = EPS
    max_depth: int = 600
    max_intervals: int = 20000
    newton_maxiter: int = 8
    newton_tol: float = 1e-13

    def __post_init__(self):
        for name in ("order", "tail_factor", "eps0", "max_depth", "max_intervals",
                     "newton_maxiter", "newton_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def tolerance(self) -> float:
        return self.tail_factor * self.eps0


@dataclass
class SolverStats:
    intervals: int = 0
    max_depth: int = 0
    newton_iterations: int = 0
    local_solves: int = 0
    rejected: int = 0


@dataclass
class OdeSolution:
    components: list[PiecewiseChebyshev]
    stats: SolverStats = field(default_factory=SolverStats)

    @property
    def breakpoints(self) -> np.ndarray:
        return self.components[0].breakpoints

    def __call__(self, t):
        return np.array([c(t) for c in self.components])

    def __getitem__(self, i) -> PiecewiseChebyshev:
        return self.components[i]


def _anchored_integrator(k: int, h: float, direction: str) -> np.ndarray:
    S = value_integration_matrix(k) * (0.5 * h)
    if direction == "terminal":
        S = S - S[-1]
    return S


def _system_matrix(S: np.ndarray, A: np.ndarray) -> np.ndarray:
    """I - S diag(A_ij) as an (n K) x (n K) block matrix, component-major."""
    n, _, K = A.shape
    M = -(S[None, None, :, :] * A[:, :, None, :])  # (n, n, K, K)
    M = M.transpose(0, 2, 1, 3).reshape(n * K, n * K)
    M[np.diag_indices(n * K)] += 1.0
    return M


def _solve(M, rhs, scale=None):
    """Solve M x = rhs with x expressed in units of ``scale``, then rows equilibrated.

    Components of very different magnitude (w, w', w'') would otherwise
    pollute the smaller ones at rounding level.
    """
    if scale is not None:
        M = M * scale[None, :]
    row = np.max(np.abs(M), axis=1)
    row = np.where(row > 0, 1.0 / row, 1.0)
    try:
        sol = np.linalg.solve(M * row[:, None], rhs * row)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"singular collocation matrix: {exc}") from exc
    if scale is not None:
        with np.errstate(over="ignore", invalid="ignore"):
            sol = sol * scale
    if not np.all(np.isfinite(sol)):
        raise NumericalFailure("nonfinite solution of collocation system")
    return sol


def local_linear_solve(problem: OdeProblem, interval, data, k: int = DEFAULT_ORDER) -> np.ndarray:
    """Solve an affine problem on one interval; returns node values (n, k+1)."""
    c, d = interval
    t = cheb_nodes(k, (c, d))
    n = problem.dimension
    zero = np.zeros((n, k + 1))
    if problem.jacobian is not None:
        A = np.asarray(problem.jacobian(t, zero), dtype=float)
    else:
        g0 = problem.rhs(t, zero)
        A = np.empty((n, n, k + 1))
        for j in range(n):
            e = zero.copy()
            e[j] = 1.0
            A[:, j] = problem.rhs(t, e) - g0
    g = np.asarray(problem.rhs(t, zero), dtype=float)
    S = _anchored_integrator(k, d - c, problem.direction)
    M = _system_matrix(S, A)
    data = np.asarray(data, dtype=float)
    rhs = (data[:, None] + g @ S.T).reshape(-1)
    mag = np.abs(data)
    mag = np.where(mag > 0, mag, max(float(np.max(mag)), 1.0))
    return _solve(M, rhs, np.repeat(mag, k + 1)).reshape(n, k + 1)


def _trapezoid_init(problem: OdeProblem, t: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Implicit trapezoidal march over the nodes, starting from the anchored end."""
    n, K = data.size, t.size
    Y = np.empty((n, K))
    order = range(K) if problem.direction == "initial" else range(K - 1, -1, -1)
    order = list(order)
    Y[:, order[0]] = data
    eye = np.eye(n)
    for prev, cur in zip(order[:-1], order[1:]):
        h = t[cur] - t[prev]
        yp = Y[:, prev]
        fp = problem.rhs(t[prev:prev + 1], yp[:, None])[:, 0]
        # start from the previous value: an explicit predictor is unstable on stiff steps
        y = yp.copy()
        for _ in range(4):
            tc = t[cur:cur + 1]
            G = y - yp - 0.5 * h * (fp + problem.rhs(tc, y[:, None])[:, 0])
            J = eye - 0.5 * h * problem.jacobian(tc, y[:, None])[:, :, 0]
            if n == 1:
                if J[0, 0] == 0:
                    break
                dy = G / J[0, 0]
            else:
                try:
                    dy = np.linalg.solve(J, G)
                except np.linalg.LinAlgError:
                    break
            y = y - dy
            if np.abs(dy).max() <= 1e-14 * (1.0 + np.abs(y).max()):
                break
        if not np.all(np.isfinite(y)):
            y = yp.copy()
        Y[:, cur] = y
    return Y


def local_nonlinear_solve(problem: OdeProblem, interval, data, k: int = DEFAULT_ORDER,
                          opts: SolverOptions | None = None) -> tuple[np.ndarray, int]:
    """Trapezoidal initializer followed by Newton on the collocation system.

    Returns node values (n, k+1) and the number of Newton iterations.
    """
    opts = opts or SolverOptions(order=k)
    c, d = interval
    t = cheb_nodes(k, (c, d))
    data = np.asarray(data, dtype=float)
    S = _anchored_integrator(k, d - c, problem.direction)
    Y = _trapezoid_init(problem, t, data)
    history = []
    for it in range(1, opts.newton_maxiter + 1):
        F = problem.rhs(t, Y)
        G = (Y - data[:, None] - F @ S.T).reshape(-1)
        if not np.all(np.isfinite(G)):
            raise NonlinearFailure("nonfinite residual in Newton iteration", history)
        if float(np.max(np.abs(G))) <= EPS * (1.0 + float(np.max(np.abs(Y)))):
            return Y, it - 1
        M = _system_matrix(S, problem.jacobian(t, Y))
        try:
            delta = np.linalg.solve(M, G).reshape(Y.shape)
        except np.linalg.LinAlgError as exc:
            raise NonlinearFailure(f"singular Newton system: {exc}", history) from exc
        Y = Y - delta
        dn = float(np.max(np.abs(delta)))
        history.append(dn)
        if not np.isfinite(dn):
            break
        if dn <= opts.newton_tol * (1.0 + float(np.max(np.abs(Y)))):
            return Y, it
    raise NonlinearFailure("Newton iteration did not converge", history)


def solve_adaptive(problem: OdeProblem, opts: SolverOptions | None = None) -> OdeSolution:
    """Adaptively solve ``problem`` by bisection of (a, b).

    Initial value problems are swept left to right, terminal value
    problems right to left; each subinterval takes its boundary data from
    the already accepted neighbour.
    """
    opts = opts or SolverOptions()
    k, tol = opts.order, opts.tolerance
    a, b = problem.domain
    forward = problem.direction == "initial"
    stats = SolverStats()
    pending = [(a, b, 0)]
    accepted = []  # (c, d, coeffs) in sweep order
    data = problem.boundary.copy()
    scale_exp = 0  # data is in units of 2**scale_exp (homogeneous problems only)
    exps = []
    worst = ((a, b), 0.0)

    while pending:
        c, d, depth = pending.pop()
        stats.local_solves += 1
        if problem.homogeneous:
            top = float(np.max(np.abs(data)))
            if top > _RESCALE_HI or 0 < top < _RESCALE_LO:
                e = 2 * (np.frexp(top)[1] // 2)
                data = np.ldexp(data, -e)
                scale_exp += int(e)
        ok, ratio = False, np.inf
        try:
            if problem.linear:
                Y = local_linear_solve(problem, (c, d), data, k)
                iters = 0
            else:
                Y, iters = local_nonlinear_solve(problem, (c, d), data, k, opts)
            coeffs = _v2c(Y)
            tails = tail_ratio(coeffs)
            if problem.monitor is not None:
                tails = tails[list(problem.monitor)]
            ratio = float(np.max(tails))
            ok = ratio <= tol
        except NumericalFailure:
            iters = 0
        stats.newton_iterations += iters
        if ok:
            accepted.append((c, d, coeffs))
            exps.append(scale_exp)
            data = Y[:, -1] if forward else Y[:, 0]
            stats.max_depth = max(stats.max_depth, depth)
            continue
        stats.rejected += 1
        if not ratio <= worst[1]:
            worst = ((c, d), ratio)
        mid = 0.5 * (c + d)
        if depth >= opts.max_depth or not c < mid < d:
            raise NonconvergenceError(
                f"maximum subdivision depth reached on [{c:.6g}, {d:.6g}] (tail ratio {ratio:.3g})",
                interval=(c, d), tail=ratio)
        if len(accepted) + len(pending) + 2 > opts.max_intervals:
            raise NonconvergenceError(
                f"interval budget of {opts.max_intervals} exhausted; worst interval "
                f"[{worst[0][0]:.6g}, {worst[0][1]:.6g}] (tail ratio {worst[1]:.3g})",
                interval=worst[0], tail=worst[1])
        if forward:
            pending.append((mid, d, depth + 1))
            pending.append((c, mid, depth + 1))
        else:
            pending.append((c, mid, depth + 1))
            pending.append((mid, d, depth + 1))

    if not forward:
        accepted.reverse()
        exps.reverse()
    bps = [accepted[0][0]] + [d for _, d, _ in accepted]
    stack = np.array([cf for _, _, cf in accepted])  # (m, n, K)
    ex = exps if any(exps) else None
    comps = [PiecewiseChebyshev(bps, stack[:, i, :], ex) for i in range(problem.dimension)]
    stats.intervals = len(accepted)
    return OdeSolution(comps, stats)
