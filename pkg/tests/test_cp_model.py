"""
Clifton-Pohl geodesics: metric, geodesic field, first integrals, closed-form
null geodesics, the log-coordinate reduction and the torus quotient.

Null oracles:
(1, 0, 1, 0)  ->  u = 1/(1 - t), v = 0
(1, 1, 2, 0)  ->  u = tan(t + pi/4), v = 1
"""
import math

import numpy as np
import pytest

from cp_geodesics.cont_engine import ContinuationPath, continue_along_path, continue_real_with_detours
from cp_geodesics.cp_model import (
    GeodesicState,
    LogState,
    RealIC,
    axis_crossing,
    chart_winding,
    first_integrals,
    first_integrals_along,
    from_log,
    geodesic_field,
    geodesic_rhs,
    impulse,
    log_chart_path,
    metric_eval,
    null_closed_form,
    omega_eta_rhs,
    phi_field,
    phi_rhs,
    quotient_project,
    reduced_problem,
    stays_in_chart,
    to_log,
)
from cp_geodesics.utils import (
    DegenerateCrossingError,
    NotNullError,
    NullGeodesicError,
    OnAxisError,
    SingularLocusError,
    StationaryCurveError,
)


def random_nonnull_ics(rng, count):
    """Components of magnitude in [0.2, 2] with random signs"""
    values = rng.uniform(0.2, 2.0, size=(count, 4)) * rng.choice([-1.0, 1.0], size=(count, 4))
    return [RealIC(alpha=a, beta=b, x=x, y=y) for a, b, x, y in values]


class TestMetric:
    def test_examples(self):
        assert metric_eval(1, 0, (1, 1), (1, 1)) == pytest.approx(1.0)
        assert metric_eval(1, 1, (1, 0), (1, 0)) == 0

    def test_singular_locus(self):
        with pytest.raises(SingularLocusError):
            metric_eval(1, 1j, (1, 1), (1, 1))
        with pytest.raises(SingularLocusError):
            GeodesicState(1, -1j, 0, 0)

    def test_origin_is_not_an_initial_condition(self):
        with pytest.raises(ValueError):
            RealIC(alpha=0, beta=0, x=1, y=1)


class TestGeodesicRhs:
    @pytest.mark.parametrize("state, accelerations", [
        ((1, 0, 1, 0), (2, 0)),
        ((0, 1, 0, 1), (0, 2)),
        ((1, 1, 0, 0), (0, 0)),
    ])
    def test_accelerations(self, state, accelerations):
        derivative = geodesic_rhs(GeodesicState(*state))
        assert (derivative.u, derivative.v) == (state[2], state[3])
        assert (derivative.du, derivative.dv) == pytest.approx(accelerations)

    def test_complex_state(self):
        w = [0.5 + 0.1j, -1.2, 0.3j, 2.0]
        derivative = geodesic_rhs(GeodesicState(*w))
        d = w[0] ** 2 + w[1] ** 2
        assert derivative.du == pytest.approx(2 * w[0] * w[2] ** 2 / d)
        assert derivative.dv == pytest.approx(2 * w[1] * w[3] ** 2 / d)

    def test_field_on_singular_locus(self):
        with pytest.raises(SingularLocusError):
            geodesic_field(0.0, [1, 1j, 1, 1])


class TestFirstIntegrals:
    @pytest.mark.parametrize("ic, expected", [
        ((1, 1, 1, 1), (0.5, 2, 2)),
        ((1, 0, 1, 1), (1, 1, 1)),
        ((1, 1, 1, -1), (-0.5, 0, 0)),
    ])
    def test_examples(self, ic, expected):
        integrals = first_integrals(RealIC(alpha=ic[0], beta=ic[1], x=ic[2], y=ic[3]))
        assert (integrals.A, integrals.B, integrals.P) == pytest.approx(expected)

    def test_impulse_examples(self):
        assert impulse(RealIC(alpha=1, beta=1, x=1, y=1)) == 2
        assert impulse(RealIC(alpha=2, beta=2, x=2, y=2)) == 2
        assert impulse(RealIC(alpha=1, beta=1, x=1, y=-1)) == 0

    def test_null_geodesics_rejected(self):
        with pytest.raises(NullGeodesicError):
            first_integrals(RealIC(alpha=1, beta=1, x=1, y=0))
        with pytest.raises(NullGeodesicError):
            impulse(RealIC(alpha=1, beta=1, x=0, y=2))

    def test_scaling_and_swap_invariance(self):
        rng = np.random.default_rng(7)
        for ic in random_nonnull_ics(rng, 1000):
            P = impulse(ic)
            doubled = RealIC(alpha=2 * ic.alpha, beta=2 * ic.beta, x=2 * ic.x, y=2 * ic.y)
            swapped = RealIC(alpha=ic.beta, beta=ic.alpha, x=ic.y, y=ic.x)
            assert impulse(doubled) == P
            assert impulse(swapped) == P

    def test_along_states(self):
        states = np.array([[1, 1, 1, 1], [1, 0, 1, 1]], dtype=complex)
        A, B = first_integrals_along(states)
        np.testing.assert_allclose(A, [0.5, 1])
        np.testing.assert_allclose(B, [2, 1])

    def test_conservation_along_continuation(self):
        rng = np.random.default_rng(11)
        for ic in random_nonnull_ics(rng, 100):
            trace = continue_along_path(geodesic_field, ic.as_state(), ContinuationPath((0, 3)))
            A, B = first_integrals_along(trace.states)
            u, v, du, dv = trace.states.T
            integrals = first_integrals(ic)
            assert np.max(np.abs(A - integrals.A) / abs(integrals.A)) <= 1e-8
            # B is a sum of two terms that may cancel
            scale = np.abs(u / du) + np.abs(v / dv)
            assert np.max(np.abs(B - integrals.B) / scale) <= 1e-8


class TestNullClosedForm:
    def test_rational(self):
        geodesic = null_closed_form(RealIC(alpha=1, beta=0, x=1, y=0))
        assert geodesic.kind == "rational"
        assert geodesic.moving == "u"
        t = np.array([-2.0, 0.0, 0.5, 3.0, 0.2 + 0.4j])
        states = geodesic.evaluate(t)
        np.testing.assert_allclose(states[:, 0], 1 / (1 - t))
        np.testing.assert_allclose(states[:, 1], 0)
        np.testing.assert_allclose(states[:, 2], 1 / (1 - t) ** 2)
        assert geodesic.poles(-5, 5) == [1.0]
        assert geodesic.poles(2, 5) == []

    def test_rational_in_v(self):
        geodesic = null_closed_form(RealIC(alpha=0, beta=1, x=0, y=3))
        assert geodesic.moving == "v"
        t = np.linspace(-1, 0.3, 7)
        np.testing.assert_allclose(geodesic.evaluate(t)[:, 1], 1 / (1 - 3 * t))
        np.testing.assert_allclose(geodesic.evaluate(t)[:, 0], 0)
        assert geodesic.poles(-1, 1) == [pytest.approx(1 / 3)]

    def test_tangent(self):
        geodesic = null_closed_form(RealIC(alpha=1, beta=1, x=2, y=0))
        assert geodesic.kind == "tangent"
        t = np.linspace(-0.5, 0.5, 11)
        states = geodesic.evaluate(t)
        np.testing.assert_allclose(states[:, 0], np.tan(t + np.pi / 4))
        np.testing.assert_allclose(states[:, 1], 1)
        np.testing.assert_allclose(states[:, 2], 1 / np.cos(t + np.pi / 4) ** 2)
        np.testing.assert_allclose(geodesic.poles(-4, 4), [np.pi / 4 - np.pi, np.pi / 4, np.pi / 4 + np.pi])

    @pytest.mark.parametrize("ic", [(1, 0, 1, 0), (1, 1, 2, 0), (-0.5, 2, 0, 1.5), (0.7, -1.3, -0.4, 0)])
    def test_solves_geodesic_equations(self, ic):
        geodesic = null_closed_form(RealIC(alpha=ic[0], beta=ic[1], x=ic[2], y=ic[3]))
        np.testing.assert_allclose(geodesic.evaluate(0.0), ic, atol=1e-15)
        rng = np.random.default_rng(3)
        h = 1e-5
        for t in rng.uniform(-0.3, 0.3, size=20):
            state = geodesic.evaluate(t)
            velocity = (geodesic.evaluate(t + h) - geodesic.evaluate(t - h)) / (2 * h)
            field = np.array(geodesic_field(t, state))
            np.testing.assert_allclose(velocity, field, rtol=1e-6, atol=1e-6)

    def test_errors(self):
        with pytest.raises(StationaryCurveError):
            null_closed_form(RealIC(alpha=1, beta=1, x=0, y=0))
        with pytest.raises(NotNullError):
            null_closed_form(RealIC(alpha=1, beta=1, x=1, y=1))

    def test_continuation_matches_rational(self):
        trace = continue_along_path(geodesic_field, [1, 0, 1, 0], ContinuationPath((0, 0.9)))
        t = trace.times.real
        assert np.max(np.abs(trace.states[:, 0] - 1 / (1 - t))) <= 1e-9

    def test_continuation_matches_tangent(self):
        ic = RealIC(alpha=1, beta=1, x=2, y=0)
        geodesic = null_closed_form(ic)
        before = continue_along_path(geodesic_field, ic.as_state(), ContinuationPath((0, 0.7)))
        np.testing.assert_allclose(before.states[:, 0], np.tan(before.times.real + np.pi / 4), rtol=0, atol=1e-9)
        after = continue_real_with_detours(geodesic_field, ic.as_state(), 1.5)
        assert abs(after.exceptional_real_times[0] - np.pi / 4) < 0.05
        window = (after.times.imag == 0) & (after.times.real >= 0.9)
        assert window.sum() > 1
        np.testing.assert_allclose(after.states[window], geodesic.evaluate(after.times[window].real),
                                   rtol=1e-7, atol=1e-7)


class TestLogCoordinates:
    def test_to_log(self):
        assert to_log(1, 1) == LogState(omega=0, eta=0, s_u=1, s_v=1)
        chart = to_log(math.e, -1)
        assert chart.omega == pytest.approx(1)
        assert chart.eta == pytest.approx(0)
        assert (chart.s_u, chart.s_v) == (1, -1)

    def test_from_log(self):
        assert from_log(LogState(omega=0, eta=0, s_u=-1, s_v=-1)) == (-1, -1)
        u, v = from_log(to_log(-0.3, 2.5))
        assert (u, v) == (pytest.approx(-0.3), pytest.approx(2.5))

    def test_on_axis(self):
        with pytest.raises(OnAxisError):
            to_log(0, 1)

    def test_omega_eta_examples(self):
        omega_dot, eta_dot = omega_eta_rhs(0, 0, 1, 2, 1)
        assert omega_dot == pytest.approx(2 / (2 - math.sqrt(2)))
        assert eta_dot == pytest.approx(2 / (2 + math.sqrt(2)))
        assert omega_eta_rhs(0, 0, 0.5, 2, 1) == (pytest.approx(1), pytest.approx(1))

    def test_omega_eta_swap(self):
        omega_dot, eta_dot = omega_eta_rhs(0.3, -0.2, 0.7, 1.5, 1)
        swapped = omega_eta_rhs(-0.2, 0.3, 0.7, 1.5, -1)
        assert swapped == (pytest.approx(eta_dot), pytest.approx(omega_dot))

    def test_phi_examples(self):
        assert phi_rhs(0, 1, 2, 1) == pytest.approx(2 * math.sqrt(2))
        assert phi_rhs(0, 0.5, 2, 1) == pytest.approx(0)

    def test_reduction_identity(self):
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 1000:
            phi = rng.uniform(-2, 2)
            A = rng.uniform(0.1, 2) * rng.choice([-1, 1])
            B = rng.uniform(-3, 3)
            branch = int(rng.choice([-1, 1]))
            s = branch * np.sqrt(complex(B * B - 2 / (A * math.cosh(phi))))
            # skip points close to the branch degeneracy and to cancellation
            if min(abs(B - s), abs(B + s)) < 0.1 or abs(s) < 0.1 * max(abs(B), 1):
                continue
            omega_dot, eta_dot = omega_eta_rhs(phi, 0.0, A, B, branch)
            expected = phi_rhs(phi, A, B, branch)
            assert abs(expected - (omega_dot - eta_dot)) <= 1e-12 * abs(expected)
            checked += 1

    def test_reduced_problem(self):
        problem = reduced_problem(RealIC(alpha=1, beta=2, x=1, y=1))
        assert problem.A == pytest.approx(0.2)
        assert problem.B == pytest.approx(3)
        assert problem.branch == 1
        assert problem.phi0 == pytest.approx(math.log(0.5))
        omega_dot, eta_dot = omega_eta_rhs(problem.omega0, problem.eta0, problem.A, problem.B, problem.branch)
        assert omega_dot == pytest.approx(1)
        assert eta_dot == pytest.approx(0.5)

    def test_reduced_problem_other_octant(self):
        ic = RealIC(alpha=-1, beta=0.5, x=0.4, y=1.3)
        problem = reduced_problem(ic)
        assert problem.s_u == -1 and problem.s_v == 1
        omega_dot, eta_dot = omega_eta_rhs(problem.omega0, problem.eta0, problem.A, problem.B, problem.branch)
        assert omega_dot == pytest.approx(ic.x / ic.alpha)
        assert eta_dot == pytest.approx(ic.y / ic.beta)

    def test_phi_equation_tracks_geodesic(self):
        ic = RealIC(alpha=1, beta=2, x=1, y=1)
        problem = reduced_problem(ic)
        path = ContinuationPath((0, 0.15, 0.3))
        geodesic = continue_along_path(geodesic_field, ic.as_state(), path)
        phi = continue_along_path(phi_field(problem.A, problem.B, problem.branch), [problem.phi0], path)
        for t in (0.15, 0.3):
            u, v = geodesic.states[geodesic.times == t][0, :2]
            assert phi.states[phi.times == t][0, 0] == pytest.approx(np.log(u / v), abs=1e-9)

    def test_log_chart_path_reconstructs(self):
        states = np.array([
            [1.0, 2.0, -1.0, 1.0],
            [0.5, 2.0, -1.0, 1.0],
            [0.0, 2.0, -1.0, 1.0],
            [-0.5, 2.0, -1.0, 1.0],
            [-1.0, 2.0, -1.0, 1.0],
        ], dtype=complex)
        charts = log_chart_path(states)
        assert len(charts) == 4
        assert [chart.s_u for chart in charts] == [1, 1, -1, -1]
        reconstructed = np.array([from_log(chart) for chart in charts])
        np.testing.assert_allclose(reconstructed, states[[0, 1, 3, 4], :2])

    def test_chart_winding_on_half_turns(self):
        t = 1 + 0.1 * np.exp(1j * np.linspace(np.pi, 0.0, 33))
        pole = np.stack([1 / (1 - t), np.ones_like(t)], axis=-1)
        pole_and_zero = np.stack([1 / (1 - t), 1 - t], axis=-1)
        common = np.stack([1 / (1 - t), 2 / (1 - t)], axis=-1)
        assert abs(chart_winding(pole)) == pytest.approx(math.pi)
        assert abs(chart_winding(pole_and_zero)) == pytest.approx(2 * math.pi)
        assert chart_winding(common) == pytest.approx(0, abs=1e-12)
        assert stays_in_chart(common, 1e-9)
        assert not stays_in_chart(pole, 1e-6)


class TestAxisCrossing:
    def test_flips(self):
        crossing = axis_crossing(GeodesicState(0, 1, 1, 1))
        assert crossing.axis == "u"
        assert (crossing.sign_before, crossing.sign_after) == (-1, 1)
        crossing = axis_crossing(GeodesicState(1, 0, 1, -1))
        assert crossing.axis == "v"
        assert (crossing.sign_before, crossing.sign_after) == (1, -1)

    def test_degenerate(self):
        with pytest.raises(DegenerateCrossingError):
            axis_crossing(GeodesicState(0, 1, 0, 1))

    def test_off_axis(self):
        with pytest.raises(OnAxisError):
            axis_crossing(GeodesicState(1, 1, 1, 1))


class TestQuotient:
    @pytest.mark.parametrize("point, expected", [
        ((3, 0), (1.5, 0, 1)),
        ((1, 1), (1, 1, 0)),
        ((0.2, 0.1), (1.6, 0.8, -3)),
    ])
    def test_examples(self, point, expected):
        assert quotient_project(*point) == pytest.approx(expected)

    def test_fundamental_annulus(self):
        rng = np.random.default_rng(1)
        for u, v in rng.normal(scale=50, size=(200, 2)):
            u_q, v_q, k = quotient_project(u, v)
            assert 1 <= math.hypot(u_q, v_q) < 2
            assert quotient_project(2 * u, 2 * v) == (u_q, v_q, k + 1)

    def test_origin(self):
        with pytest.raises(ValueError):
            quotient_project(0, 0)
