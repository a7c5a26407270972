"""Tests for the contour solver: node certification, inversion, energy.

Expected values marked "oracle" were computed independently with mpmath
(30+ significant digits) from the modal reduction of the constant-
coefficient beam: for a profile phi with phi'''' = pi^4 phi and
||phi||_{L^2} = 1 the transformed solution is scalar,

    u_hat(z) = (z + pi^4 b z^{nu-1}) / (z^2 + pi^4 (a + b z^nu)),

inverted as a residue pair at the complex mode z1 plus a branch-cut
integral int_0^inf e^{-rt} Im u_hat(-r) dr / pi.
"""

import os

import numpy as np
import pytest

from fraclap.chebseries import chebcoeffs, l2_norm
from fraclap.contour import TimeWindow
from fraclap.pencil import BeamPencil, Forcing, InitialData
from fraclap.solver import (
    AdaptivityError,
    PoleOnContourError,
    energy,
    energy_asymptote,
    evaluate,
    forcing_transform_numeric,
    geometric_windows,
    linear_solve_count,
    solve_laplace,
    solve_time_range,
)
from fraclap.solver import TimeSolution

# Example beam constants (stiff): a = E0*I*, b = E1*I*, rho = 1, nu = 0.64.
A_STIFF = 821.1872860635697
B_STIFF = 3.698601466992665
NU_STIFF = 0.64

# Modal free-decay oracle u(t) for the stiff beam, phi = sin(pi(x-1)):
#   mode z1 = -20.178358014149367 + 295.38575155553457j
U_STIFF = {
    1.5: 0.0014077864139495038,
    2.0: 0.001170685263799565,
    4.0: 0.0007508240329570058,
    8.0: 0.00048163956521748083,
}
DU_STIFF = {
    1.5: -0.00060176852702783259,
    2.0: -0.00037520086540029584,
    4.0: -0.00012025265637810286,
    8.0: -3.8556129639201644e-5,
}
# Same oracle on geomspace(1, 100, 7) and late times (for window tests).
U_STIFF_RANGE = {
    1.0: 0.0018258797130674025,
    2.154434690031884: 0.001116181059649288,
    4.641588833612779: 0.00068257473012247937,
    10.0: 0.00041750558240453729,
    21.544346900318832: 0.0002554077889047194,
    46.41588833612779: 0.00015625816826188121,
    100.0: 9.5603511530638445e-5,
}
U_STIFF_LATE = {
    150.0: 7.3750102062078507e-5,
    400.0: 3.9366107454848766e-5,
    900.0: 2.3426980363035558e-5,
}

# Modal free-decay oracle for the unit beam a = b = rho = 1, nu = 0.8.
U_UNIT = {
    1.0: 0.38565077346641064,
    2.0: 0.22261863669254743,
    5.0: 0.087652351988864738,
    10.0: 0.04295617335993571,
}

# Forced steady state (stiff beam, zero ICs, F = sin(pi(x-1)) sin(omega t)):
#   y_steady(x, t) = Im[e^{i omega t} / D(i omega)] sin(pi(x-1)),
#   D(z) = z^2 + pi^4 (a + b z^nu).
D_OMEGA5 = 80506.864239372817 + 852.09689861902848j

# Energy asymptote constants for y0 = sin^2(2 pi x)(1+x)(1-x)^2:
#   I2 = int |y0''|^2 = 4303.7095633636279
#   e1 = sin^2(pi nu) Gamma(nu)^2 / (2 pi^2) * (b^2/a) * I2
I2_FREE = 4303.7095633636279
E1_FREE = {0.32: 20.2379023514053529, 0.64: 5.86260631919622873}


def phi(x):
    return np.sin(np.pi * (np.asarray(x) - 1.0))


def stiff_pencil():
    return BeamPencil(a=[A_STIFF], b=[B_STIFF], rho=[1.0], nu=NU_STIFF,
                      bc_left="simply_supported",
                      bc_right="simply_supported")


def unit_pencil(nu=0.8):
    return BeamPencil(a=[1.0], b=[1.0], rho=[1.0], nu=nu,
                      bc_left="simply_supported",
                      bc_right="simply_supported")


def modal_init():
    return InitialData(y0=phi, y1=None)


@pytest.fixture(scope="module")
def stiff_free_parabolic():
    """Shared stiff free-decay solve on [1, 10] (parabolic family)."""
    return solve_laplace(stiff_pencil(), modal_init(), Forcing(),
                         TimeWindow(1.0, 10.0), 1e-9,
                         contour_kind="parabolic")


@pytest.fixture(scope="module")
def unit_free_hyperbolic():
    """Shared unit-beam free-decay solve on [1, 10] (adaptive N)."""
    return solve_laplace(unit_pencil(), modal_init(), Forcing(),
                         TimeWindow(1.0, 10.0), 1e-8)


class TestSolveBasics:
    def test_zero_data_is_identically_zero(self):
        ls = solve_laplace(unit_pencil(), InitialData(), Forcing(),
                           TimeWindow(1.0, 10.0), 1e-8, N=24)
        assert all(np.all(c == 0.0) for c in ls.node_solutions)
        ts = evaluate(ls, [1.0, 5.0, 10.0])
        assert np.all(ts.y == 0.0)
        assert np.all(ts.y_t == 0.0)
        assert np.all(ts.energy == 0.0)

    def test_eta_budget_formula(self, unit_free_hyperbolic):
        ls = unit_free_hyperbolic
        w, z = ls.contour.weights, ls.contour.nodes
        amp = np.sum(np.abs(w) * np.exp(z.real * ls.win.t0))
        assert np.isclose(ls.eta, 1e-8 / (10.0 * amp), rtol=1e-12)

    def test_certified_invariant(self, unit_free_hyperbolic):
        ls = unit_free_hyperbolic
        assert not ls.node_uncertified.any()
        assert np.all(ls.node_eps > 0.0)
        # mild problem: round-off floors stay far below the budget here
        assert np.all(ls.node_residuals <= ls.eta * ls.node_eps + 1e-11)
        bounds = ls.node_error_bounds()
        assert np.all(np.isfinite(bounds))
        # total certified inversion error stays under the target
        amp = np.abs(ls.contour.weights) * np.exp(
            ls.contour.nodes.real * ls.win.t0)
        assert float(np.sum(amp * bounds)) <= 1e-8

    def test_negative_nodes_are_exact_conjugates(self, unit_free_hyperbolic):
        ls = unit_free_hyperbolic
        N = ls.N
        for j in range(1, N + 1):
            assert np.array_equal(ls.node_solutions[N - j],
                                  np.conj(ls.node_solutions[N + j]))

    def test_invalid_inputs_raise(self):
        with pytest.raises(ValueError):
            solve_laplace(unit_pencil(), InitialData(), Forcing(),
                          TimeWindow(1.0, 10.0), 0.0)
        with pytest.raises(ValueError):
            solve_laplace(unit_pencil(), InitialData(), Forcing(),
                          TimeWindow(1.0, 10.0), 1e-8,
                          contour_kind="circular")


class TestFreeDecayOracle:
    def test_unit_beam_adaptive_matches_oracle(self, unit_free_hyperbolic):
        ts = evaluate(unit_free_hyperbolic, sorted(U_UNIT))
        got = ts.y_values(0.3).ravel()
        want = np.array([U_UNIT[t] for t in sorted(U_UNIT)]) * phi(0.3)
        assert np.max(np.abs(got - want)) <= 1e-8

    def test_stiff_beam_parabolic_matches_oracle(self, stiff_free_parabolic):
        times = sorted(U_STIFF)
        ts = evaluate(stiff_free_parabolic, times)
        xg = np.linspace(-1.0, 1.0, 31)
        want_u = np.array([U_STIFF[t] for t in times])
        err = np.abs(ts.y_values(xg) - want_u[:, None] * phi(xg)[None, :])
        assert np.max(err) <= 2e-9
        want_du = np.array([DU_STIFF[t] for t in times])
        err_t = np.abs(ts.y_t_values(xg) - want_du[:, None] * phi(xg)[None, :])
        assert np.max(err_t) <= 2e-9

    def test_stiff_beam_energy_matches_oracle(self, stiff_free_parabolic):
        times = sorted(U_STIFF)
        ts = evaluate(stiff_free_parabolic, times)
        u = np.array([U_STIFF[t] for t in times])
        du = np.array([DU_STIFF[t] for t in times])
        # E = (a/2) u^2 int phi''^2 + (1/2) u'^2 int phi^2,
        # with int phi''^2 = pi^4 int phi^2 = pi^4 on [-1, 1].
        want = 0.5 * (A_STIFF * np.pi**4 * u**2 + du**2)
        assert np.max(np.abs(ts.energy - want) / want) <= 1e-5

    def test_hyperbolic_explicit_N_agrees(self):
        ls = solve_laplace(unit_pencil(), modal_init(), Forcing(),
                           TimeWindow(1.0, 10.0), 1e-8, N=200)
        assert ls.quadrature_estimate is None
        ts = evaluate(ls, [2.0, 5.0])
        got = ts.y_values(0.25).ravel()
        want = np.array([U_UNIT[2.0], U_UNIT[5.0]]) * phi(0.25)
        assert np.max(np.abs(got - want)) <= 1e-8
        assert not ls.node_uncertified.any()

    def test_quadrature_estimate_is_recorded(self, stiff_free_parabolic):
        est = stiff_free_parabolic.quadrature_estimate
        assert est is not None and 0.0 <= est <= 5e-10


class TestEvaluate:
    def test_pure_no_extra_solves(self, stiff_free_parabolic):
        before = linear_solve_count()
        ts1 = evaluate(stiff_free_parabolic, np.linspace(1.0, 10.0, 40))
        ts2 = evaluate(stiff_free_parabolic, np.linspace(1.0, 10.0, 40))
        assert linear_solve_count() == before
        assert np.array_equal(ts1.y, ts2.y)
        assert np.array_equal(ts1.y_t, ts2.y_t)
        assert np.array_equal(ts1.energy, ts2.energy)

    def test_outside_window_warns(self, stiff_free_parabolic):
        with pytest.warns(UserWarning):
            evaluate(stiff_free_parabolic, [0.5])

    def test_certificates_reported(self, stiff_free_parabolic):
        ts = evaluate(stiff_free_parabolic, [2.0])
        cert = ts.certificates
        assert cert["eta"] == stiff_free_parabolic.eta
        assert cert["uncertified_nodes"] == int(
            stiff_free_parabolic.node_uncertified.sum())

    def test_boundary_conditions_hold(self, stiff_free_parabolic):
        ts = evaluate(stiff_free_parabolic, [2.0])
        assert abs(ts.y_values(-1.0)[0, 0]) <= 1e-10
        assert abs(ts.y_values(1.0)[0, 0]) <= 1e-10


@pytest.fixture(scope="module")
def forced():
    forcing = Forcing(kind="sin", omega=5.0, amplitude=1.0, profile=phi)
    return solve_laplace(stiff_pencil(), InitialData(), forcing,
                         TimeWindow(2.0, 5.0), 1e-10,
                         contour_kind="parabolic")


class TestForcedSteady:
    def test_pole_split_recorded(self, forced):
        # the forcing poles are split off the integrand whichever side of
        # the contour they fall on; exactly the upper pole is recorded
        assert len(forced.pole_corrections) == 1
        assert np.isclose(forced.pole_corrections[0][0], 5.0j)

    def test_matches_steady_state(self, forced):
        # start-up transient is below 1.5e-9 for t >= 2 (oracle)
        times = np.array([2.0, 3.3, 5.0])
        ts = evaluate(forced, times)
        xg = np.linspace(-1.0, 1.0, 21)
        want = np.imag(np.exp(5.0j * times)[:, None] / D_OMEGA5) * phi(xg)
        assert np.max(np.abs(ts.y_values(xg) - want)) <= 5e-9

    def test_frozen_spot_value(self, forced):
        ts = evaluate(forced, [2.0])
        # steady displacement at x = 0.25, t = 2 (oracle, transient < 2e-9)
        assert abs(ts.y_values(0.25)[0, 0] - 4.699709993398098e-6) <= 5e-9

    def test_node_at_zero_profile_point(self, forced):
        ts = evaluate(forced, [3.0])
        assert abs(ts.y_values(0.0)[0, 0]) <= 1e-12


class TestPoleHandling:
    def test_pole_on_contour_raises(self):
        pencil = unit_pencil()
        probe = solve_laplace(pencil, modal_init(), Forcing(),
                              TimeWindow(1.0, 10.0), 1e-8, N=48)
        c = probe.contour
        # bisect Re gamma(s) = 0 on the upper branch
        lo, hi = 0.0, c.h * c.N
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if c.gamma(mid).real > 0.0:
                lo = mid
            else:
                hi = mid
        omega_star = c.gamma(0.5 * (lo + hi)).imag
        forcing = Forcing(kind="sin", omega=omega_star, amplitude=1.0,
                          profile=phi)
        with pytest.raises(PoleOnContourError):
            solve_laplace(pencil, modal_init(), forcing,
                          TimeWindow(1.0, 10.0), 1e-8, N=48)

    def test_pole_right_of_contour_corrected(self):
        # omega far above the contour's imaginary extent at small N
        forcing = Forcing(kind="cos", omega=20.0, amplitude=1.0, profile=phi)
        ls = solve_laplace(unit_pencil(), InitialData(), forcing,
                           TimeWindow(1.0, 10.0), 1e-8)
        assert len(ls.pole_corrections) == 1
        assert np.isclose(ls.pole_corrections[0][0], 20.0j)

    def test_swept_pole_agrees_across_families(self):
        # the parabola for the unit beam is narrow enough that 20j is
        # swept; the residue term must reproduce the hyperbolic answer
        forcing = Forcing(kind="cos", omega=20.0, amplitude=1.0, profile=phi)
        win = TimeWindow(1.0, 10.0)
        hyp = solve_laplace(unit_pencil(), InitialData(), forcing, win, 1e-8)
        par = solve_laplace(unit_pencil(), InitialData(), forcing, win, 1e-8,
                            contour_kind="parabolic")
        assert par.contour.point_is_right(20.0j)
        assert len(par.pole_corrections) == 1
        assert np.isclose(par.pole_corrections[0][0], 20.0j)
        times = np.linspace(1.0, 10.0, 7)
        xg = np.linspace(-1.0, 1.0, 13)
        diff = evaluate(hyp, times).y_values(xg) - evaluate(par, times).y_values(xg)
        assert np.max(np.abs(diff)) <= 1e-10


@pytest.fixture(scope="module")
def study():
    """Variable-coefficient data: a=cosh x, b=sin(pi x)+2, rho=tanh x+2."""
    pencil = BeamPencil(a=lambda x: np.cosh(x),
                        b=lambda x: np.sin(np.pi * x) + 2.0,
                        rho=lambda x: np.tanh(x) + 2.0, nu=0.8,
                        bc_left="clamped", bc_right="simply_supported")
    init = InitialData(
        y0=lambda x: np.sin(2 * np.pi * x) * (1 - x**2) * (1 - x),
        y1=None)
    forcing = Forcing(kind="cos", omega=20.0, amplitude=1.0,
                      profile=lambda x: np.sin(np.pi * x))
    return pencil, init, forcing


class TestConvergenceStudyProblem:
    def test_errors_decay_and_nodes_certify(self, study):
        pencil, init, forcing = study
        win = TimeWindow(1.0, 10.0)
        sols = {N: solve_laplace(pencil, init, forcing, win, 1e-9, N=N,
                                 delta=1.1) for N in (60, 120, 360)}
        for ls in sols.values():
            assert not ls.node_uncertified.any()
            assert np.isclose(ls.pole_corrections[0][0], 20.0j)
            assert max(ls.node_n) <= 512
        ref = evaluate(sols[360], np.linspace(1.0, 10.0, 5))

        def err(N):
            ts = evaluate(sols[N], np.linspace(1.0, 10.0, 5))
            m = max(ts.y.shape[1], ref.y.shape[1])
            d = np.zeros((5, m), dtype=complex)
            d[:, : ts.y.shape[1]] = ts.y
            d[:, : ref.y.shape[1]] -= ref.y
            return max(l2_norm(row, lam=0) for row in d)

        e60, e120 = err(60), err(120)
        assert e60 <= 1e-5
        assert e120 <= 1e-8
        assert e120 < e60

    def test_clamped_end_slope_vanishes(self, study):
        pencil, init, forcing = study
        ls = solve_laplace(pencil, init, forcing, TimeWindow(1.0, 10.0),
                           1e-8, N=120, delta=1.1)
        ts = evaluate(ls, [2.0])
        h = 1e-6
        slope = (ts.y_values(-1.0 + h)[0, 0]
                 - ts.y_values(-1.0)[0, 0]) / h
        assert abs(ts.y_values(-1.0)[0, 0]) <= 1e-9
        assert abs(slope) <= 1e-3


class TestCaputoAboveOne:
    def test_runs_and_is_real(self):
        pencil = BeamPencil(a=[1.0], b=[1.0], rho=[1.0], nu=1.2,
                            bc_left="clamped", bc_right="clamped")
        init = InitialData(y0=lambda x: (1 - x**2) ** 2, y1=None)
        ls = solve_laplace(pencil, init, Forcing(), TimeWindow(1.0, 10.0),
                           1e-6, N=48)
        ts = evaluate(ls, [1.0, 5.0])
        assert np.all(np.isfinite(ts.y))
        assert np.max(np.abs(ts.y.imag)) == 0.0
        assert np.max(np.abs(ts.y_values(1.0))) <= 1e-8


class TestAutoContourKind:
    def test_nu_one_prefers_parabola(self):
        pencil = BeamPencil(a=[100.0], b=[1.0], rho=[1.0], nu=1.0,
                            bc_left="simply_supported",
                            bc_right="simply_supported")
        ls = solve_laplace(pencil, modal_init(), Forcing(),
                           TimeWindow(1.0, 10.0), 1e-6, N=64,
                           contour_kind="auto")
        assert ls.contour.kind == "parabolic"

    def test_mild_sector_prefers_hyperbola(self):
        ls = solve_laplace(unit_pencil(), modal_init(), Forcing(),
                           TimeWindow(1.0, 10.0), 1e-6, N=32,
                           contour_kind="auto")
        assert ls.contour.kind == "hyperbolic"


class TestLateWindowParabolic:
    def test_matches_oracle_on_late_window(self):
        ls = solve_laplace(stiff_pencil(), modal_init(), Forcing(),
                           TimeWindow(100.0, 1000.0), 1e-8,
                           contour_kind="parabolic")
        times = sorted(U_STIFF_LATE)
        ts = evaluate(ls, times)
        got = ts.y_values(0.3).ravel()
        want = np.array([U_STIFF_LATE[t] for t in times]) * phi(0.3)
        assert np.max(np.abs(got - want)) <= 1e-7
        # uncertified flags match the epsilon data honestly
        assert np.array_equal(ls.node_uncertified, ls.node_eps <= 0.0)


class TestEnergy:
    def test_symbolic_oracle(self):
        # y = cos(t) (1-x^2)^2 with a = b = rho = 1:
        #   E(t) = (cos^2 t) * (128/5) / 2 + (sin^2 t) * (256/315) / 2
        pencil = BeamPencil(a=[1.0], b=[1.0], rho=[1.0], nu=0.5,
                            bc_left="clamped", bc_right="clamped")
        c4 = chebcoeffs(lambda x: (1 - x**2) ** 2)
        times = np.array([0.0, 0.7, 1.9, 3.0])
        y = np.cos(times)[:, None] * c4[None, :]
        y_t = -np.sin(times)[:, None] * c4[None, :]
        ts = TimeSolution(times=times, y=y, y_t=y_t,
                          energy=np.zeros_like(times), certificates={})
        got = energy(ts, pencil)
        want = 0.5 * (np.cos(times) ** 2 * 128.0 / 5.0
                      + np.sin(times) ** 2 * 256.0 / 315.0)
        assert np.max(np.abs(got - want) / want) <= 1e-12

    def test_zero_solution_zero_energy(self):
        pencil = unit_pencil()
        times = np.array([1.0, 2.0])
        ts = TimeSolution(times=times, y=np.zeros((2, 8)),
                          y_t=np.zeros((2, 8)),
                          energy=np.zeros(2), certificates={})
        assert np.all(energy(ts, pencil) == 0.0)


class TestEnergyAsymptote:
    def free_init(self):
        return InitialData(
            y0=lambda x: np.sin(2 * np.pi * x) ** 2 * (1 + x) * (1 - x) ** 2,
            y1=None)

    def pencil_nu(self, nu):
        return BeamPencil(a=[A_STIFF], b=[B_STIFF], rho=[1.0], nu=nu,
                          bc_left="simply_supported",
                          bc_right="simply_supported")

    def test_frozen_values(self):
        for nu, want in E1_FREE.items():
            asym = energy_asymptote(self.pencil_nu(nu), self.free_init())
            assert abs(asym.e1 - want) / want <= 1e-8
            assert asym.exponent == -2.0 * nu
            assert asym.correction_exponent == -3.0 * nu

    def test_formula_reconstruction(self):
        # e1 = sin^2(pi nu) Gamma(nu)^2 / (2 pi^2) * (b^2/a) * int |y0''|^2
        from scipy.special import gamma as G
        nu = 0.64
        asym = energy_asymptote(self.pencil_nu(nu), self.free_init())
        want = (np.sin(np.pi * nu) ** 2 * G(nu) ** 2 / (2 * np.pi**2)
                * (B_STIFF**2 / A_STIFF) * I2_FREE)
        assert abs(asym.e1 - want) / want <= 1e-10

    def test_curvature_integral_against_quadrature(self):
        # independent check of int |y0''|^2 by finite differences + Simpson
        from scipy.integrate import simpson
        x = np.linspace(-1.0, 1.0, 20001)
        h = x[1] - x[0]
        y = np.sin(2 * np.pi * x) ** 2 * (1 + x) * (1 - x) ** 2
        d2 = np.gradient(np.gradient(y, h, edge_order=2), h, edge_order=2)
        val = simpson(d2[2:-2] ** 2, x=x[2:-2])
        assert abs(val - I2_FREE) / I2_FREE <= 1e-4

    def test_doubling_b_quadruples_e1(self):
        base = energy_asymptote(self.pencil_nu(0.5), self.free_init()).e1
        doubled = BeamPencil(a=[A_STIFF], b=[2 * B_STIFF], rho=[1.0], nu=0.5,
                             bc_left="simply_supported",
                             bc_right="simply_supported")
        assert np.isclose(energy_asymptote(doubled, self.free_init()).e1,
                          4.0 * base, rtol=1e-12)

    def test_zero_displacement_gives_zero(self):
        asym = energy_asymptote(self.pencil_nu(0.5), InitialData())
        assert asym.e1 == 0.0

    def test_rejections(self):
        with pytest.raises(ValueError):
            energy_asymptote(self.pencil_nu(1.2), self.free_init())
        with pytest.raises(ValueError):
            energy_asymptote(self.pencil_nu(0.5),
                             InitialData(y0=None, y1=lambda x: 1.0 - x**2))
        varying = BeamPencil(a=lambda x: np.cosh(x), b=[1.0], rho=[1.0],
                             nu=0.5, bc_left="clamped", bc_right="clamped")
        with pytest.raises(ValueError):
            energy_asymptote(varying, self.free_init())


class TestForcingTransformNumeric:
    def test_zero_function(self):
        assert forcing_transform_numeric(lambda s: 0.0 * s, 2.0 + 1j,
                                         10.0) == 0.0

    def test_exponential_oracle(self):
        a = 0.3
        t1 = 10.0
        for z in (2.0 + 0.0j, 0.5 + 40.0j, 40.0 + 100.0j):
            got = forcing_transform_numeric(lambda s: np.exp(a * s), z, t1)
            want = (np.exp((a - z) * t1) - 1.0) / (a - z)
            assert abs(got - want) <= 1e-12 * max(1.0, abs(want))

    def test_compact_support_truncation_invariance(self):
        def bump(s):
            s = np.asarray(s, dtype=float)
            inside = (s > 0.0) & (s < 1.0)
            out = np.zeros_like(s)
            with np.errstate(divide="ignore", over="ignore"):
                val = np.exp(-1.0 / np.where(inside, s * (1.0 - s), 1.0))
            out[inside] = val[inside]
            return out

        z = 3.0 + 7.0j
        v1 = forcing_transform_numeric(bump, z, 1.0)
        v2 = forcing_transform_numeric(bump, z, 2.0)
        assert abs(v1 - v2) <= 1e-13


class TestWindows:
    def test_geometric_windows_splitting(self):
        wins = geometric_windows(1.0, 100.0, 10.0)
        assert [(w.t0, w.t1) for w in wins] == [(1.0, 10.0), (10.0, 100.0)]
        wins = geometric_windows(1.0, 5.0, 10.0)
        assert [(w.t0, w.t1) for w in wins] == [(1.0, 5.0)]
        wins = geometric_windows(0.1, 5.0, 10.0)
        assert len(wins) == 2
        assert wins[0].t0 == 0.1 and np.isclose(wins[0].t1, 1.0)
        with pytest.raises(ValueError):
            geometric_windows(0.0, 1.0)
        with pytest.raises(ValueError):
            geometric_windows(1.0, 10.0, ratio=1.0)

    def test_solve_time_range_matches_oracle(self):
        times = np.geomspace(1.0, 100.0, 7)
        ts, solves = solve_time_range(stiff_pencil(), modal_init(),
                                      Forcing(), times, 1e-8,
                                      contour_kind="parabolic")
        assert len(solves) == 2
        assert np.array_equal(ts.times, times)
        got = ts.y_values(0.3).ravel()
        want = np.array([U_STIFF_RANGE[t] for t in sorted(U_STIFF_RANGE)])
        assert np.max(np.abs(got - want * phi(0.3))) <= 1e-7
        assert len(ts.certificates["windows"]) == 2
        assert np.all(ts.energy > 0.0)

    def test_rejects_bad_times(self):
        with pytest.raises(ValueError):
            solve_time_range(unit_pencil(), modal_init(), Forcing(),
                             [2.0, 1.0], 1e-6)
        with pytest.raises(ValueError):
            solve_time_range(unit_pencil(), modal_init(), Forcing(),
                             [0.0, 1.0], 1e-6)


class TestThreadDeterminism:
    def test_same_bits_regardless_of_workers(self):
        kw = dict(win=TimeWindow(1.0, 10.0), target_accuracy=1e-7, N=24)
        ls1 = solve_laplace(unit_pencil(), modal_init(), Forcing(),
                            kw["win"], kw["target_accuracy"], N=kw["N"],
                            threads=1)
        ls2 = solve_laplace(unit_pencil(), modal_init(), Forcing(),
                            kw["win"], kw["target_accuracy"], N=kw["N"],
                            threads=4)
        for c1, c2 in zip(ls1.node_solutions, ls2.node_solutions):
            assert np.array_equal(c1, c2)

    def test_env_override_is_read(self, monkeypatch):
        monkeypatch.setenv("FRACLAP_THREADS", "2")
        ls = solve_laplace(unit_pencil(), modal_init(), Forcing(),
                           TimeWindow(1.0, 10.0), 1e-6, N=16)
        ts = evaluate(ls, [2.0])
        assert np.isfinite(ts.y_values(0.3)[0, 0])
