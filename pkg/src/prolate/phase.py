"""Phase-function evaluation of the angular prolate functions PS_n(z; gamma).

With x = -log(1 - z), the function PS_n(z) sqrt(1 + z) solves

    y''(x) + q2(x) y(x) = 0,   0 < x < inf,

and is a multiple of sin(Psi(x)) / sqrt(Psi'(x)), where Psi is the
nonoscillatory phase normalized by Psi(inf) = 0.  The modulus
w = gamma / Psi' solves Appell's equation w''' + 4 q2 w' + 2 q2' w = 0; its
initial values come from the logarithmic derivative s of the decaying
solution on the imaginary axis, obtained from a Riccati terminal value
problem.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import oxr
from .chebyshev import (
    PiecewiseChebyshev,
    _v2c,
    value_integration_matrix,
)
from .errors import DomainError, NumericalFailure, StageError
from .legendre import legendre_central
from .ode import OdeProblem, OdeSolution, SolverOptions, SolverStats, solve_adaptive

DEFAULT_BETA = 1e120
DEFAULT_C = 1e30
ACCELERATED_END = 30.0


@dataclass(frozen=True)
class ProlateParams:
    gamma: float
    n: int
    chi: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be finite and positive, got {self.gamma}")
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if not (np.isfinite(self.chi) and self.chi > 0):
            raise ValueError(f"chi must be finite and positive, got {self.chi}")

    @property
    def parity(self) -> int:
        return self.n % 2

    @property
    def sigma(self) -> float:
        return self.n / self.gamma


class CoefficientQ1:
    """q1(t) = -(1/(1+t^2)^2 + (chi + gamma^2 t^2)/(1+t^2)), the imaginary-axis coefficient."""

    def __init__(self, gamma: float, chi: float):
        self.gamma, self.chi = float(gamma), float(chi)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        d = 1.0 + t * t
        g2 = self.gamma ** 2
        # (chi + g2 t^2)/d = g2 + (chi - g2)/d, written to avoid cancellation in s' at large t
        return -(g2 + ((self.chi - g2) + 1.0 / d) / d)

    def riccati_rhs(self, t, s):
        """-s^2 - q1(t), grouped so that it vanishes without cancellation at s = -gamma."""
        t = np.asarray(t, dtype=float)
        d = 1.0 + t * t
        g = self.gamma
        return -(s - g) * (s + g) + ((self.chi - g * g) + 1.0 / d) / d

    def wkb(self, t):
        """a(t) = sqrt(-q1(t)), the leading WKB approximation of -s."""
        return np.sqrt(-self(t))

    def wkb_derivative(self, t):
        """a'(t) = t ((gamma^2 - chi) - 2/(1+t^2)) / (a (1+t^2)^2)."""
        t = np.asarray(t, dtype=float)
        d = 1.0 + t * t
        return (t / d) * ((self.gamma ** 2 - self.chi) - 2.0 / d) / (d * self.wkb(t))

    def wkb_defect(self, t):
        """a(t) - gamma, formed as (a^2 - gamma^2) / (a + gamma)."""
        t = np.asarray(t, dtype=float)
        d = 1.0 + t * t
        return ((self.chi - self.gamma ** 2) + 1.0 / d) / d / (self.wkb(t) + self.gamma)

    def defect_rhs(self, t, r):
        """r' = a' + 2 a r - r^2 for r = s + a."""
        return self.wkb_derivative(t) + (2.0 * self.wkb(t) - r) * r


class CoefficientQ2:
    """Coefficient of the exponential form, evaluated through u = exp(-x).

    q2 = [u - u^2/4 + chi u (2 - u) - gamma^2 u (1 - u)^2 (2 - u)] / (2 - u)^2
    """

    def __init__(self, gamma: float, chi: float):
        self.gamma, self.chi = float(gamma), float(chi)

    def _parts(self, x):
        u = np.exp(-np.asarray(x, dtype=float))
        g2, chi = self.gamma ** 2, self.chi
        D = 2.0 - u
        N = u - 0.25 * u * u + chi * u * D - g2 * u * (1.0 - u) ** 2 * D
        # d/du of u (1-u)^2 (2-u) = 2 - 10u + 12u^2 - 4u^3
        dN = 1.0 - 0.5 * u + chi * (2.0 - 2.0 * u) - g2 * (2.0 - 10.0 * u + 12.0 * u * u - 4.0 * u ** 3)
        return u, D, N, dN

    def __call__(self, x):
        _, D, N, _ = self._parts(x)
        return N / (D * D)

    def derivative(self, x):
        u, D, N, dN = self._parts(x)
        dq_du = dN / (D * D) + 2.0 * N / (D * D * D)
        return -u * dq_du


@dataclass(frozen=True)
class AcceleratedSeed:
    chi: float
    psi0: float
    w0: float
    w0p: float
    w0pp: float

    def __post_init__(self):
        if not self.w0 > 0:
            raise ValueError("seed modulus w(0) must be positive")


@dataclass
class BuildStats:
    riccati_intervals: int = 0
    appell_intervals: int = 0
    newton_iterations: int = 0
    psi_coefficients_30: int = 0
    psi_coefficients: int = 0


@dataclass
class PhaseFunction:
    """Piecewise expansions of Psi and the modulus w (and w') on [0, beta).

    All three share one partition.  Where w outgrows the binary64 range its
    pieces carry binary exponents, and the matching pieces of Psi carry the
    opposite exponents.
    """

    psi: PiecewiseChebyshev
    w: PiecewiseChebyshev
    dw: PiecewiseChebyshev
    beta: float
    gamma: float
    chi: float

    def dpsi(self, x):
        """Psi' = gamma / w (underflows to 0 where w is beyond the binary64 range)."""
        m, e = self.w.eval_scaled(x)
        out = np.ldexp(self.gamma / m, -e)
        return float(out) if np.ndim(out) == 0 else out

    def d2psi(self, x):
        """Psi'' = -gamma w' / w^2."""
        m, e = self.w.eval_scaled(x)
        dm, _ = self.dw.eval_scaled(x)
        out = np.ldexp(-self.gamma * dm / (m * m), -e)
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> dict:
        return {
            "beta": self.beta, "gamma": self.gamma, "chi": self.chi,
            "psi": self.psi.to_dict(), "w": self.w.to_dict(), "dw": self.dw.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseFunction":
        return cls(
            psi=PiecewiseChebyshev.from_dict(d["psi"]),
            w=PiecewiseChebyshev.from_dict(d["w"]),
            dw=PiecewiseChebyshev.from_dict(d["dw"]),
            beta=float(d["beta"]), gamma=float(d["gamma"]), chi=float(d["chi"]),
        )


def _riccati_problem(params: ProlateParams, c: float, start: float = 0.0) -> OdeProblem:
    q1 = CoefficientQ1(params.gamma, params.chi)
    return OdeProblem(
        rhs=lambda t, y: q1.riccati_rhs(t[None, :], y),
        jacobian=lambda t, y: (-2.0 * y)[None, :, :],
        domain=(start, c),
        boundary=[-params.gamma],
        direction="terminal",
    )


def _defect_problem(params: ProlateParams, T: float, rT: float) -> OdeProblem:
    q1 = CoefficientQ1(params.gamma, params.chi)
    return OdeProblem(
        rhs=lambda t, y: q1.defect_rhs(t[None, :], y),
        jacobian=lambda t, y: (2.0 * (q1.wkb(t)[None, :] - y))[None, :, :],
        domain=(0.0, T),
        boundary=[rT],
        direction="terminal",
    )


def defect_switch_point(params: ProlateParams, c: float = DEFAULT_C) -> float:
    """Point T below which the Riccati equation is integrated for r = s + a.

    Perturbations of r decay like exp(-2 int a) towards t = 0 and
    a >= min(gamma, sqrt(1 + chi)) roughly, so an error of order eps |s(T)|
    handed over at T is damped below rounding at t = 0.
    """
    amin = min(params.gamma, math.sqrt(1.0 + params.chi))
    return min(max(1.0, 20.0 / amin), 0.5 * c)


def riccati_solution(params: ProlateParams, c: float = DEFAULT_C,
                     opts: SolverOptions | None = None) -> OdeSolution:
    """Solve s' = -s^2 - q1 on (0, c) with s(c) = -gamma.

    Near t = 0, where s is large, s'(0) = -s(0)^2 + 1 + chi is a small
    difference of large numbers.  On (0, T) the equation is therefore
    integrated for the defect r = s + a from the WKB approximation
    a = sqrt(-q1), which obeys r' = a' + 2 a r - r^2, and
    s'(0) = r(0) (2 a(0) - r(0)) is free of cancellation.  On (T, c) s
    itself is integrated.  Component 0 of the result is s and component 1
    is r, on a common partition.
    """
    q1 = CoefficientQ1(params.gamma, params.chi)
    T = defect_switch_point(params, c)
    outer = solve_adaptive(_riccati_problem(params, c, T), opts)
    sT = float(outer[0](T))
    inner = solve_adaptive(_defect_problem(params, T, sT + float(q1.wkb(T))), opts)
    s_out, r_in = outer[0], inner[0]
    r_out = PiecewiseChebyshev(s_out.breakpoints, _v2c(s_out.node_values() + q1.wkb(s_out.nodes())))
    s_in = PiecewiseChebyshev(r_in.breakpoints, _v2c(r_in.node_values() - q1.wkb(r_in.nodes())))
    bps = np.concatenate([r_in.breakpoints, s_out.breakpoints[1:]])
    s = PiecewiseChebyshev(bps, np.vstack([s_in.coeffs, s_out.coeffs]))
    r = PiecewiseChebyshev(bps, np.vstack([r_in.coeffs, r_out.coeffs]))
    st_in, st_out = inner.stats, outer.stats
    stats = SolverStats(
        intervals=st_in.intervals + st_out.intervals,
        max_depth=max(st_in.max_depth, st_out.max_depth),
        newton_iterations=st_in.newton_iterations + st_out.newton_iterations,
        local_solves=st_in.local_solves + st_out.local_solves,
        rejected=st_in.rejected + st_out.rejected,
    )
    return OdeSolution([s, r], stats)


def _imag_axis_data(params: ProlateParams, sol: OdeSolution) -> tuple[float, float]:
    r0 = float(sol[1](0.0))
    a0 = math.sqrt(1.0 + params.chi)
    s0 = r0 - a0
    if not s0 < 0:
        raise NumericalFailure(f"s(0) = {s0} is not negative (gamma={params.gamma}, chi={params.chi})")
    return s0, r0 * (2.0 * a0 - r0)


def solve_imag_riccati(params: ProlateParams, c: float = DEFAULT_C,
                       opts: SolverOptions | None = None) -> tuple[float, float]:
    """Return s(0) and s'(0) for the logarithmic derivative on the imaginary axis.

    s'(0) = -s(0)^2 + 1 + chi comes from the equation, evaluated through
    the WKB defect (see ``riccati_solution``).
    """
    return _imag_axis_data(params, riccati_solution(params, c, opts))


def appell_initial_values(s0: float, s0p: float, wronskian: float = 1.0) -> tuple[float, float, float]:
    """Values of the modulus and its first two derivatives at x = 0.

    The modulus is normalized so that Psi' = wronskian / w.  With the
    default ``wronskian=1`` this is w(0) = w'(0) = -1/s(0),
    w''(0) = -1/s(0) + 2 s'(0)/s(0).
    """
    if s0 == 0:
        raise ZeroDivisionError("s(0) must be nonzero")
    w0 = -wronskian / s0
    return w0, w0, w0 * (1.0 - 2.0 * s0p)


def solve_appell(params: ProlateParams, w0: float, w0p: float, w0pp: float,
                 beta: float = DEFAULT_BETA, opts: SolverOptions | None = None) -> OdeSolution:
    """Solve w''' + 4 q2 w' + 2 q2' w = 0 on (0, beta) as a first-order 3-system.

    Subintervals are accepted on the tail ratio of w itself, the unknown of
    the third-order equation; w' and w'' ride along on the same partition.
    Past a turning point w grows exponentially, so pieces carry binary
    exponents (see ``PiecewiseChebyshev``).
    """
    if not w0 > 0:
        raise ValueError("w(0) must be positive")
    q2 = CoefficientQ2(params.gamma, params.chi)

    def jac(t, y):
        A = np.zeros((3, 3, t.size))
        A[0, 1] = 1.0
        A[1, 2] = 1.0
        A[2, 0] = -2.0 * q2.derivative(t)
        A[2, 1] = -4.0 * q2(t)
        return A

    def rhs(t, y):
        return np.einsum("ijk,jk->ik", jac(t, y), y)

    problem = OdeProblem(rhs=rhs, jacobian=jac, domain=(0.0, beta),
                         boundary=[w0, w0p, w0pp], homogeneous=True, monitor=(0,))
    sol = solve_adaptive(problem, opts)
    if np.any(~(sol[0].node_values(scaled=True) > 0)):
        raise NumericalFailure("modulus function lost positivity")
    return sol


def integrate_phase(w: PiecewiseChebyshev, gamma: float, psi0: float | None = None) -> PiecewiseChebyshev:
    """Antiderivative of gamma / w, piece by piece.

    By default the constant is fixed by Psi(right end) = 0 and the pieces
    are traversed from right to left; a piece of w with exponent e gives a
    piece of Psi with exponent -e.  With ``psi0`` given, Psi(left end) =
    psi0, the traversal runs left to right and Psi is stored unscaled.
    """
    k = w.order
    vals = gamma / w.node_values(scaled=True)
    if np.any(~(vals > 0)):
        raise ValueError("modulus must be positive")
    S = value_integration_matrix(k)
    h = np.diff(w.breakpoints)
    local = (vals @ S.T) * (0.5 * h)[:, None]  # vanishes at each left end, units 2**-e
    e = w.exponents
    # the constant goes into the T_0 coefficient only, so that the large
    # values of Psi do not leak rounding noise into the derivative
    coeffs = _v2c(local)
    if psi0 is None:
        right, right_exp = 0.0, 0  # Psi at the right end of the current piece, as a scaled pair
        for i in range(w.npieces - 1, -1, -1):
            const = np.ldexp(right, right_exp + int(e[i])) - local[i, -1]
            coeffs[i, 0] += const
            right, right_exp = const, -int(e[i])
        return PiecewiseChebyshev(w.breakpoints, coeffs, -e if w.scaled else None)
    left = float(psi0)
    for i in range(w.npieces):
        coeffs[i] = np.ldexp(coeffs[i], -int(e[i]))
        coeffs[i, 0] += left
        left = left + float(np.ldexp(local[i, -1], -int(e[i])))
    return PiecewiseChebyshev(w.breakpoints, coeffs)


def _psn_factor(phase: PhaseFunction, x, z):
    """sin(Psi) / sqrt((1+z) Psi') and its z-derivative, without C_n.

    With Psi' = gamma / w, the pair F = sin(Psi) sqrt(w / gamma) and
    F' = cos(Psi) sqrt(gamma / w) + sin(Psi) w' / (2 sqrt(gamma w)) is
    assembled from mantissas and exponents so that exponentially large w
    and exponentially small Psi never meet in floating point.
    """
    g = phase.gamma
    pm, pe = phase.psi.eval_scaled(x)
    wm, we = phase.w.eval_scaled(x)
    dwm, _ = phase.dw.eval_scaled(x)
    psi = np.ldexp(pm, pe)
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(psi == 0, 1.0, np.sin(psi) / np.where(psi == 0, 1.0, psi))
    half = we // 2  # exponents of w are even
    F = np.ldexp(sinc * pm * np.sqrt(wm / g), pe + half)
    dF = (np.ldexp(np.cos(psi) * np.sqrt(g / wm), -half)
          + 0.5 * np.ldexp(sinc * pm * dwm / np.sqrt(g * wm), pe + half))
    opz = 1.0 + z
    val = F / np.sqrt(opz)
    der = dF / ((1.0 - z) * np.sqrt(opz)) - 0.5 * F / (opz * np.sqrt(opz))
    return val, der


def modulus_identity(phase: PhaseFunction, x):
    """Psi'(x) w(x) / gamma with Psi' from the stored Psi expansion; ideally 1."""
    dpm, dpe = phase.psi.eval_scaled(x, derivative=True)
    wm, we = phase.w.eval_scaled(x)
    return np.ldexp(dpm * wm, dpe + we) / phase.gamma


def basis_wronskian(phase: PhaseFunction, x):
    """u' v - u v' for u, v = (sin Psi, cos Psi) / sqrt(Psi'); ideally 1.

    With u = sin(Psi) sqrt(w / gamma), the derivative splits as
    u' = cos(Psi) Psi' sqrt(w / gamma) + sin(Psi) w' / (2 sqrt(gamma w)),
    and likewise for v.  The w' parts contribute the same product
    sin(Psi) cos(Psi) w' / (2 gamma) to u'v and to uv' and are cancelled
    before rounding (they are astronomically large where w is), leaving
    (sin^2 + cos^2) Psi' w / gamma with Psi' taken from the Psi expansion.
    """
    x = np.asarray(x, dtype=float)
    pm, pe = phase.psi.eval_scaled(x)
    dpm, dpe = phase.psi.eval_scaled(x, derivative=True)
    wm, we = phase.w.eval_scaled(x)
    psi = np.ldexp(pm, pe)
    s, c = np.sin(psi), np.cos(psi)
    # u_lo' v - u v_lo' with u_lo' = cos Psi Psi' sqrt(w/g), v_lo' = -sin Psi Psi' sqrt(w/g)
    return (c * c + s * s) * np.ldexp(dpm * wm, dpe + we) / phase.gamma


def kummer_residual(phase: PhaseFunction, x):
    """Relative residual of sin(Psi)/sqrt(Psi') in y'' + q2 y = 0.

    For y = sin(Psi)/sqrt(Psi') with Psi' = gamma / w,
    (y'' + q2 y) / y = q2 - gamma^2/w^2 - (w'/w)^2/4 + w''/(2w),
    which is formed from ratios of mantissas and normalized by the sum of
    the magnitudes of its terms.
    """
    x = np.asarray(x, dtype=float)
    wm, we = phase.w.eval_scaled(x)
    dwm, _ = phase.dw.eval_scaled(x)
    d2wm, _ = phase.dw.eval_scaled(x, derivative=True)
    q = CoefficientQ2(phase.gamma, phase.chi)(x)
    r1, r2 = dwm / wm, d2wm / wm
    g = np.ldexp(phase.gamma / wm, -we) ** 2
    terms = (q, -g, -0.25 * r1 * r1, 0.5 * r2)
    res = sum(terms)
    scale = sum(np.abs(t) for t in terms)
    return np.abs(res) / scale


def normalize(params: ProlateParams, phase: PhaseFunction) -> float:
    """Constant C_n making PS_n (or PS_n' for odd n) agree with P_n at 0."""
    val, der = _psn_factor(phase, 0.0, 0.0)
    central = legendre_central(params.n)
    if params.parity == 0:
        if val == 0:
            raise NumericalFailure("degenerate normalization: sin(Psi(0)) = 0")
        return float(central.p0 / val)
    if der == 0:
        raise NumericalFailure("degenerate normalization: derivative vanishes at 0")
    return float(central.dp0 / der)


@dataclass
class ProlateEvaluator:
    """Evaluates PS_n(z; gamma) from a phase function."""

    params: ProlateParams
    phase: PhaseFunction
    cn: float
    accelerated: bool = False
    stats: BuildStats = field(default_factory=BuildStats)

    @property
    def zmax(self) -> float:
        """Largest |z| accepted: 1 - exp(-right end of the phase domain)."""
        return -math.expm1(-self.phase.psi.domain[1])

    def _x(self, z):
        z = np.asarray(z, dtype=float)
        a = np.abs(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = -np.log1p(-a)
        if np.any(~(a < 1.0)) or np.any(~(x < self.phase.psi.domain[1])):
            raise DomainError(f"|z| must be below {self.zmax!r}")
        return z, a, x

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        z, a, x = self._x(z)
        val, _ = _psn_factor(self.phase, x, a)
        out = self.cn * val
        if self.params.parity == 1:
            # odd functions vanish exactly at the origin
            out = np.where(z < 0, -out, np.where(z == 0, 0.0, out))
        return float(out) if np.ndim(out) == 0 else out

    def eval_derivative(self, z):
        z, a, x = self._x(z)
        _, der = _psn_factor(self.phase, x, a)
        out = self.cn * der
        if self.params.parity == 0:
            out = np.where(z < 0, -out, np.where(z == 0, 0.0, out))
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> dict:
        p = self.params
        return {
            "gamma": p.gamma, "n": p.n, "chi": p.chi, "cn": self.cn,
            "accelerated": self.accelerated, "phase": self.phase.to_dict(),
            "stats": asdict(self.stats),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProlateEvaluator":
        params = ProlateParams(float(d["gamma"]), int(d["n"]), float(d["chi"]))
        phase = PhaseFunction.from_dict(d["phase"])
        stats = BuildStats(**d["stats"]) if "stats" in d else BuildStats(
            psi_coefficients=phase.psi.count_coefficients(),
            psi_coefficients_30=phase.psi.count_coefficients(0.0, ACCELERATED_END))
        return cls(params, phase, float(d["cn"]), bool(d.get("accelerated", False)), stats)

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, s: str) -> "ProlateEvaluator":
        return cls.from_dict(json.loads(s))


def eval_ps(e: ProlateEvaluator, z):
    return e.eval(z)


def eval_ps_derivative(e: ProlateEvaluator, z):
    return e.eval_derivative(z)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (NumericalFailure, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise StageError(name, exc) from exc


def _phase_from_appell(params, sol, beta, psi0=None):
    w, dw = sol[0], sol[1]
    psi = integrate_phase(w, params.gamma, psi0)
    return PhaseFunction(psi=psi, w=w, dw=dw, beta=beta, gamma=params.gamma, chi=params.chi)


def build_evaluator(gamma: float, n: int, chi: float | None = None,
                    beta: float = DEFAULT_BETA, c: float = DEFAULT_C,
                    opts: SolverOptions | None = None) -> ProlateEvaluator:
    """Construct the phase function for PS_n(z; gamma) and normalize it."""
    if chi is None:
        chi = _stage("chi", oxr.chi, gamma, n)
    params = ProlateParams(float(gamma), int(n), float(chi))
    ric = _stage("riccati", riccati_solution, params, c, opts)
    s0, s0p = _stage("riccati", _imag_axis_data, params, ric)
    w0, w0p, w0pp = _stage("appell-init", appell_initial_values, s0, s0p, params.gamma)
    sol = _stage("appell", solve_appell, params, w0, w0p, w0pp, beta, opts)
    phase = _stage("integrate", _phase_from_appell, params, sol, beta)
    cn = _stage("normalize", normalize, params, phase)
    stats = BuildStats(
        riccati_intervals=ric.stats.intervals,
        appell_intervals=sol.stats.intervals,
        newton_iterations=ric.stats.newton_iterations,
        psi_coefficients=phase.psi.count_coefficients(),
        psi_coefficients_30=phase.psi.count_coefficients(0.0, ACCELERATED_END),
    )
    return ProlateEvaluator(params, phase, cn, False, stats)


def harvest_seed(e: ProlateEvaluator) -> AcceleratedSeed:
    """Seed values for the accelerated build, read off a full build."""
    sol_w, sol_dw = e.phase.w, e.phase.dw
    w0 = float(sol_w(0.0))
    w0p = float(sol_dw(0.0))
    w0pp = float(sol_dw.eval_d(0.0))
    return AcceleratedSeed(chi=e.params.chi, psi0=float(e.phase.psi(0.0)), w0=w0, w0p=w0p, w0pp=w0pp)


def build_evaluator_accelerated(gamma: float, n: int, seed: AcceleratedSeed,
                                domain_end: float = ACCELERATED_END,
                                opts: SolverOptions | None = None) -> ProlateEvaluator:
    """Build from externally known chi, Psi(0) and modulus data at 0.

    Appell's equation is solved only on [0, domain_end) and Psi is
    integrated forward from Psi(0).
    """
    params = ProlateParams(float(gamma), int(n), float(seed.chi))
    sol = _stage("appell", solve_appell, params, seed.w0, seed.w0p, seed.w0pp, domain_end, opts)
    phase = _stage("integrate", _phase_from_appell, params, sol, domain_end, seed.psi0)
    cn = _stage("normalize", normalize, params, phase)
    stats = BuildStats(
        appell_intervals=sol.stats.intervals,
        psi_coefficients=phase.psi.count_coefficients(),
        psi_coefficients_30=phase.psi.count_coefficients(0.0, domain_end),
    )
    return ProlateEvaluator(params, phase, cn, True, stats)
