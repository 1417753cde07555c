import numpy as np
import pytest

from prolate import oxr
from prolate.chebyshev import PiecewiseChebyshev, cheb_nodes
from prolate.errors import DomainError, NumericalFailure, StageError
from prolate.legendre import legendre_central, legendre_p
from prolate.phase import (
    ACCELERATED_END,
    AcceleratedSeed,
    CoefficientQ1,
    CoefficientQ2,
    ProlateEvaluator,
    ProlateParams,
    appell_initial_values,
    basis_wronskian,
    build_evaluator,
    build_evaluator_accelerated,
    harvest_seed,
    integrate_phase,
    kummer_residual,
    modulus_identity,
    normalize,
    riccati_solution,
    solve_imag_riccati,
)


def params(gamma, n):
    return ProlateParams(float(gamma), n, oxr.chi(gamma, n))


def off_node_points(f: PiecewiseChebyshev, per_piece=3, hi=None):
    b = f.breakpoints
    if hi is not None:
        b = b[b < hi]
    t = np.array([0.17, 0.52, 0.81])[:per_piece]
    return (b[:-1, None] + np.diff(b)[:, None] * t).ravel()


class TestParams:
    def test_sigma_and_parity(self):
        p = ProlateParams(100.0, 25, 1.0)
        assert p.sigma == 0.25 and p.parity == 1

    @pytest.mark.parametrize("gamma, n, chi", [(0.0, 1, 1.0), (1.0, -1, 1.0), (1.0, 1, -2.0), (np.nan, 1, 1.0)])
    def test_validation(self, gamma, n, chi):
        with pytest.raises(ValueError):
            ProlateParams(gamma, n, chi)


class TestCoefficients:
    def test_q1_negative_and_limit(self):
        q1 = CoefficientQ1(30.0, oxr.chi(30.0, 12))
        t = np.geomspace(1e-6, 1e12, 200)
        assert np.all(q1(t) < 0)
        assert q1(1e12) == pytest.approx(-900.0, rel=1e-12)

    def test_q2_matches_change_of_variables(self):
        # y(x) = PS(1 - e^-x) sqrt(2 - e^-x) solves y'' + q2 y = 0 when PS solves
        # (1 - z^2) PS'' - 2 z PS' + (chi - gamma^2 z^2) PS = 0; check with a
        # Legendre polynomial at gamma -> 0, chi = n(n+1)
        from prolate.legendre import legendre_p
        n, x, h = 4, np.linspace(0.05, 6, 40), 1e-4

        def y(x):
            u = np.exp(-x)
            return legendre_p(n, 1 - u)[0] * np.sqrt(2 - u)

        ypp = (y(x + h) - 2 * y(x) + y(x - h)) / h**2
        q2 = CoefficientQ2(1e-12, n * (n + 1.0))(x)
        assert np.max(np.abs(ypp + q2 * y(x))) <= 1e-6

    @pytest.mark.parametrize("gamma, n", [(7.0, 3), (20.0, 10)])
    def test_q2_with_prolate_solution(self, get_expansion, gamma, n):
        e = get_expansion(gamma, n)
        x, h = np.linspace(0.05, 6, 40), 1e-4

        def y(x):
            u = np.exp(-x)
            return oxr.eval_ps_oxr(e, 1 - u) * np.sqrt(2 - u)

        ypp = (y(x + h) - 2 * y(x) + y(x - h)) / h**2
        q2 = CoefficientQ2(gamma, e.chi)(x)
        scale = np.max(np.abs(q2 * y(x)))
        assert np.max(np.abs(ypp + q2 * y(x))) <= 1e-5 * scale

    def test_q2_against_finite_differences(self):
        q2 = CoefficientQ2(12.0, oxr.chi(12.0, 3))
        x = np.linspace(0.1, 30, 50)
        h = 1e-5
        fd = (q2(x + h) - q2(x - h)) / (2 * h)
        np.testing.assert_allclose(q2.derivative(x), fd, rtol=1e-6, atol=1e-9)

    def test_q2_far_tail(self):
        q2 = CoefficientQ2(1e3, 1e5)
        x = np.array([745.0, 800.0, 1e10, 1e120])
        assert np.all(np.isfinite(q2(x)))
        assert np.all(q2(x[1:]) == 0.0)
        assert np.all(q2.derivative(x[1:]) == 0.0)


class TestRiccati:
    def test_plateau(self):
        p = params(100.0, 50)
        s = riccati_solution(p)[0]
        t = np.geomspace(1e6, 1e29, 300)
        assert np.max(np.abs(s(t) + p.gamma)) <= 1e-8 * p.gamma

    def test_residual(self, rng):
        p = params(20.0, 10)
        s = riccati_solution(p)[0]
        b = s.breakpoints
        i = rng.integers(0, b.size - 1, 500)
        t = b[i] + rng.uniform(0.05, 0.95, 500) * (b[i + 1] - b[i])
        q1 = CoefficientQ1(p.gamma, p.chi)
        v, d = s(t), s.eval_d(t)
        assert np.max(np.abs(d + v * v + q1(t)) / (1 + v * v)) <= 1e-10

    @pytest.mark.parametrize("gamma", [1.0, 10.0, 100.0, 1000.0])
    @pytest.mark.parametrize("sigma", [0.1, 0.5, 0.9])
    def test_s0_negative(self, gamma, sigma):
        s0, s0p = solve_imag_riccati(params(gamma, round(gamma * sigma)))
        assert s0 < 0
        assert np.isfinite(s0p)

    def test_derivative_from_equation(self):
        p = params(20.0, 10)
        s0, s0p = solve_imag_riccati(p)
        # the direct form cancels down from chi to s'(0); agreement to that rounding level
        assert abs(s0p - (-s0 * s0 + 1.0 + p.chi)) <= 8 * 2.2e-16 * p.chi

    def test_derivative_against_expansion(self):
        p = params(500.0, 475)
        s = riccati_solution(p)[0]
        _, s0p = solve_imag_riccati(p)
        assert s0p == pytest.approx(float(s.eval_d(0.0)), abs=1e-8)

    def test_components_consistent(self):
        p = params(50.0, 30)
        sol = riccati_solution(p)
        q1 = CoefficientQ1(p.gamma, p.chi)
        t = np.geomspace(1e-3, 1e6, 200)
        np.testing.assert_allclose(sol[0](t) + q1.wkb(t), sol[1](t), atol=1e-12 * p.gamma)
        assert sol[0](1e29) == pytest.approx(-p.gamma, rel=1e-14)

    def test_wkb_derivative(self):
        q1 = CoefficientQ1(40.0, 900.0)
        t = np.geomspace(1e-3, 1e3, 60)
        h = 1e-5 * np.maximum(t, 0.1)
        fd = (q1.wkb(t + h) - q1.wkb(t - h)) / (2 * h)
        np.testing.assert_allclose(q1.wkb_derivative(t), fd, rtol=1e-6, atol=1e-6)
        assert q1.wkb_defect(1e3) == pytest.approx(q1.wkb(1e3) - 40.0, rel=1e-6)


class TestAppellInitialValues:
    def test_unit(self):
        assert appell_initial_values(-1.0, 0.0) == (1.0, 1.0, 1.0)

    def test_half(self):
        assert appell_initial_values(-2.0, 4.0) == (0.5, 0.5, -3.5)

    def test_wronskian_scaling(self):
        a = np.array(appell_initial_values(-2.0, 4.0))
        b = np.array(appell_initial_values(-2.0, 4.0, wronskian=7.0))
        np.testing.assert_allclose(b, 7.0 * a)

    def test_zero(self):
        with pytest.raises(ZeroDivisionError):
            appell_initial_values(0.0, 1.0)


class TestModulus:
    def test_increasing_on_unit_interval(self, get_evaluator):
        e = get_evaluator(20.0, 10)
        z = np.linspace(0.0, 0.999, 400)
        w = e.phase.w(-np.log1p(-z))
        assert np.all(np.diff(w) > 0)
        assert np.all(e.phase.w.node_values(scaled=True) > 0)

    def test_initial_value_finite(self, get_evaluator):
        e = get_evaluator(20.0, 10)
        assert 0 < e.params.gamma / e.phase.w(0.0) < np.inf

    def test_tail_pieces_are_quadratic(self, get_evaluator):
        w = get_evaluator(100.0, 25).phase.w
        tail = np.flatnonzero(w.breakpoints[:-1] > 800.0)
        assert tail.size > 0
        for i in tail:
            c = w.coeffs[i]
            assert np.max(np.abs(c[3:])) <= 1e-12 * np.max(np.abs(c))


class TestIntegratePhase:
    def test_constant_modulus(self):
        k = 16
        x = cheb_nodes(k, (0.0, 10.0))
        w = PiecewiseChebyshev.from_values([0.0, 10.0], np.full((1, k), 5.0)) \
            if hasattr(PiecewiseChebyshev, "from_values") else None
        if w is None:
            from prolate.chebyshev import _v2c
            w = PiecewiseChebyshev([0.0, 10.0], _v2c(np.full((1, k), 5.0)))
        psi = integrate_phase(w, 5.0)
        np.testing.assert_allclose(psi(x), x - 10.0, atol=1e-14)

    def test_forward_constant(self):
        from prolate.chebyshev import _v2c
        k = 16
        w = PiecewiseChebyshev([0.0, 1.0, 3.0], _v2c(np.full((2, k), 2.0)))
        psi = integrate_phase(w, 2.0, psi0=-4.0)
        assert psi(0.0) == pytest.approx(-4.0, abs=1e-15)
        assert psi(2.5) == pytest.approx(-1.5, abs=1e-14)

    def test_continuity(self, get_evaluator):
        psi = get_evaluator(100.0, 25).phase.psi
        b = psi.breakpoints
        b = b[b < 700]
        left = np.array([psi.piece(i)(x) for i, x in enumerate(b[1:])])
        right = psi(b[1:])
        # rounding in a piece is relative to its largest value, at its left end
        scale = np.abs(psi(b[:-1]))
        assert np.all(np.abs(left - right) <= 100 * 2.2e-16 * scale)

    def test_increasing_and_negative(self, get_evaluator):
        e = get_evaluator(100.0, 25)
        x = np.linspace(0, 60, 2000)
        psi = e.phase.psi(x)
        assert np.all(np.diff(psi) > 0)
        assert np.all(psi < 0)
        assert np.all(e.phase.dpsi(e.phase.psi.nodes()) > 0)


class TestNormalization:
    def test_even(self, get_evaluator):
        e = get_evaluator(100.0, 24)
        assert e.eval(0.0) == pytest.approx(legendre_central(24).p0, rel=1e-13)

    def test_odd(self, get_evaluator):
        e = get_evaluator(100.0, 25)
        assert e.eval_derivative(0.0) == pytest.approx(legendre_central(25).dp0, rel=1e-12)
        assert e.eval(0.0) == 0.0

    def test_sign_matches_oxr(self, get_evaluator, get_expansion):
        e = get_evaluator(500.0, 100)
        ref = oxr.eval_ps_oxr(get_expansion(500.0, 100), 0.3)
        assert np.sign(e.eval(0.3)) == np.sign(ref)
        assert e.eval(0.3) == pytest.approx(ref, abs=1e-12)

    def test_idempotent(self, get_evaluator):
        e = get_evaluator(50.0, 6)
        assert normalize(e.params, e.phase) == e.cn


class TestEvaluation:
    @pytest.mark.parametrize("gamma, n, tol", [(10.0, 5, 1e-12), (100.0, 25, 5e-12), (1.0, 6, 1e-12)])
    def test_against_oxr(self, get_evaluator, get_expansion, gamma, n, tol):
        z = np.linspace(0, 1, 102)[1:-1]
        e = get_evaluator(gamma, n)
        ref = oxr.eval_ps_oxr(get_expansion(gamma, n), z)
        assert np.max(np.abs(e.eval(z) - ref)) <= tol

    def test_point_value(self, get_evaluator, get_expansion):
        z = 0.5
        assert abs(get_evaluator(20.0, 10).eval(z) - oxr.eval_ps_oxr(get_expansion(20.0, 10), z)) <= 1e-13

    def test_small_bandlimit_near_legendre(self, get_evaluator):
        z = np.linspace(-0.99, 0.99, 60)
        p, _ = legendre_p(6, z)
        assert np.max(np.abs(get_evaluator(1.0, 6).eval(z) - p)) <= 0.05

    def test_derivative_against_oxr(self, get_evaluator, get_expansion):
        z = np.linspace(-0.9, 0.9, 37)
        d = get_evaluator(20.0, 10).eval_derivative(z)
        ref = oxr.eval_ps_oxr(get_expansion(20.0, 10), z, derivative=True)
        assert np.max(np.abs(d - ref)) <= 1e-11

    @pytest.mark.parametrize("n", [10, 25])
    def test_parity(self, get_evaluator, rng, n):
        e = get_evaluator(100.0, n)
        z = rng.uniform(0, 1, 200)
        np.testing.assert_array_equal(e.eval(-z), (-1) ** n * e.eval(z))

    def test_scalar_and_vector(self, get_evaluator):
        e = get_evaluator(20.0, 10)
        assert isinstance(e(0.5), float)
        assert e.eval(np.array([0.5]))[0] == e(0.5)

    def test_near_one(self, get_evaluator):
        e = get_evaluator(20.0, 10)
        z = 1 - np.geomspace(1e-3, 1e-15, 10)
        assert np.all(np.isfinite(e.eval(z)))

    @pytest.mark.parametrize("z", [1.0, 1.5, -1.0, np.nan])
    def test_domain(self, get_evaluator, z):
        with pytest.raises(DomainError):
            get_evaluator(100.0, 25).eval(z)


class TestIdentities:
    @pytest.mark.parametrize("gamma, n", [(20.0, 10), (100.0, 80)])
    def test_identities(self, get_evaluator, gamma, n):
        ph = get_evaluator(gamma, n).phase
        x = off_node_points(ph.psi, hi=700.0)
        assert np.max(np.abs(modulus_identity(ph, x) - 1)) <= 1e-11
        assert np.max(np.abs(basis_wronskian(ph, x) - 1)) <= 1e-10
        assert np.max(kummer_residual(ph, x)) <= 1e-9


class TestAccelerated:
    def test_agreement(self, get_evaluator):
        full = get_evaluator(20.0, 10)
        acc = build_evaluator_accelerated(20.0, 10, harvest_seed(full))
        assert acc.accelerated and acc.stats.riccati_intervals == 0
        z = np.linspace(0, acc.zmax, 200, endpoint=False)
        assert np.max(np.abs(acc.eval(z) - full.eval(z))) <= 1e-12

    def test_domain(self, get_evaluator):
        acc = build_evaluator_accelerated(20.0, 10, harvest_seed(get_evaluator(20.0, 10)))
        assert acc.zmax == pytest.approx(-np.expm1(-ACCELERATED_END))
        with pytest.raises(DomainError):
            acc.eval(1 - np.exp(-ACCELERATED_END) + 1e-16)

    def test_seed_validation(self):
        with pytest.raises(ValueError):
            AcceleratedSeed(chi=1.0, psi0=-1.0, w0=0.0, w0p=1.0, w0pp=1.0)


class TestBuild:
    def test_invalid_chi(self):
        with pytest.raises(ValueError):
            build_evaluator(10.0, 3, chi=-1.0)

    def test_stage_tag(self):
        with pytest.raises(StageError) as info:
            build_evaluator(-1.0, 3)
        assert info.value.stage == "chi"

    def test_stats(self, get_evaluator):
        s = get_evaluator(100.0, 25).stats
        assert s.riccati_intervals > 0 and s.appell_intervals > 0
        assert 0 < s.psi_coefficients_30 <= s.psi_coefficients

    def test_serialization(self, get_evaluator):
        e = get_evaluator(20.0, 10)
        e2 = ProlateEvaluator.loads(e.dumps())
        z = np.linspace(-0.99, 0.99, 31)
        np.testing.assert_array_equal(e2.eval(z), e.eval(z))
        assert e2.stats == e.stats
