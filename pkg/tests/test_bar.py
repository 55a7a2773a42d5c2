import math

import numpy as np
import pytest

from splitmc.bar import (
    AssembledSystem,
    BarConfig,
    assemble,
    first_natural_frequency,
    newmark_solve,
    nonlinear_force,
    simulate_realization,
    solve_bar,
)
from splitmc.errors import ConfigError, InvalidModulus, NonConvergentStep, SingularSystem
from splitmc.rng import derive_stream, sample_gamma, sample_white_noise
from splitmc.stats import MomentAccumulator, welford_update

SMALL = dict(n_elements=10, t_final=2e-3, dt=2e-3 / 256)


def oscillator(omega):
    return AssembledSystem(np.eye(1), np.zeros((1, 1)), np.array([[omega**2]]))


def sdof_max_error(dt, omega=2 * math.pi, t_end=2.0):
    n = int(round(t_end / dt))
    sol = newmark_solve(oscillator(omega), np.zeros((n + 1, 1)), dt, n, u0=[1.0])
    return np.max(np.abs(sol.tip_displacement - np.cos(omega * sol.times)))


class TestConfig:
    def test_defaults(self):
        c = BarConfig()
        assert c.n_steps == 1024
        assert c.times.size == 1025
        assert c.times[1] == pytest.approx(c.dt)

    @pytest.mark.parametrize("kw", [
        dict(rho=0), dict(dt=-1), dict(n_elements=0), dict(newmark_beta=0.6),
        dict(newmark_gamma=1.5), dict(e_delta=0.8), dict(k_nl=-1), dict(u0="sine"),
        dict(u0=(1.0,) * 51), dict(force_weights=(1.0, 2.0)),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            BarConfig(**kw)

    def test_from_mapping(self):
        c = BarConfig.from_mapping({"n_elements": 2, "u0": [0, 1, 2]})
        assert c.u0 == (0.0, 1.0, 2.0)
        with pytest.raises(ConfigError):
            BarConfig.from_mapping({"young": 1})


class TestAssemble:
    def test_one_element(self):
        c = BarConfig(n_elements=1, area=1, length=1, rho=1, k_lin=0, mass_tip=0)
        s = assemble(c, 1.0)
        assert s.n_dof == 1
        assert s.stiffness[0, 0] == pytest.approx(1.0)
        assert s.mass[0, 0] == pytest.approx(1 / 3)

    def test_spring_and_tip_mass(self):
        base = BarConfig(k_lin=0, mass_tip=0)
        s0 = assemble(base, 2e11)
        s1 = assemble(BarConfig(k_lin=650.0, mass_tip=1.2), 2e11)
        diff_k = s1.stiffness - s0.stiffness
        diff_m = s1.mass - s0.mass
        assert diff_k[-1, -1] == pytest.approx(650.0, rel=1e-9)
        assert diff_m[-1, -1] == pytest.approx(1.2, rel=1e-12)
        diff_k[-1, -1] = diff_m[-1, -1] = 0
        assert not diff_k.any() and not diff_m.any()

    def test_structure(self):
        s = assemble(BarConfig(n_elements=6), 1e9)
        for A in (s.mass, s.stiffness, s.damping):
            np.testing.assert_array_equal(A, A.T)
            assert not np.triu(A, 2).any()
        assert np.all(np.linalg.eigvalsh(s.mass) > 0)
        # damping is c / (rho A) times the bar part of the mass matrix
        c = BarConfig(n_elements=6)
        bar_mass = s.mass.copy()
        bar_mass[-1, -1] -= c.mass_tip
        np.testing.assert_allclose(s.damping, bar_mass * c.damping_c / (c.rho * c.area))

    def test_fundamental_frequency(self):
        c = BarConfig(n_elements=100, k_lin=0, mass_tip=0)
        w = first_natural_frequency(assemble(c, c.e_mean))
        exact = math.pi / (2 * c.length) * math.sqrt(c.e_mean / c.rho)
        assert abs(w / exact - 1) < 1e-3

    def test_invalid_modulus(self):
        with pytest.raises(InvalidModulus):
            assemble(BarConfig(), 0.0)
        with pytest.raises(InvalidModulus):
            assemble(BarConfig(), math.nan)


class TestNonlinearForce:
    def test_zero(self):
        assert not nonlinear_force(np.zeros(4), 1e9).any()

    def test_cube(self):
        np.testing.assert_array_equal(nonlinear_force([5.0, 2.0], 1.0), [0.0, -8.0])

    def test_odd(self):
        u = np.array([0.3, -1.7, 0.9])
        np.testing.assert_array_equal(nonlinear_force(-u, 3.0), -nonlinear_force(u, 3.0))


class TestNewmark:
    def test_oscillator_second_order(self):
        errs = [sdof_max_error(dt) for dt in (0.01, 0.005, 0.0025)]
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert all(3 <= r <= 5 for r in ratios)
        orders = [math.log2(r) for r in ratios]
        assert all(1.8 <= p <= 2.2 for p in orders)

    def test_energy_conserved(self):
        c = BarConfig(damping_c=0, k_nl=0, u0=tuple(np.linspace(0, 1e-5, 51)))
        s = assemble(c, c.e_mean)
        sol = newmark_solve(s, np.zeros((c.n_steps + 1, s.n_dof)), c.dt, c.n_steps,
                            u0=c.free_values(c.u0), keep_state=True)
        energy = np.array([0.5 * v @ s.mass @ v + 0.5 * u @ s.stiffness @ u
                           for u, v in zip(sol.displacement, sol.velocity)])
        step_drift = np.abs(np.diff(energy)) / energy[0]
        assert step_drift.max() < 1e-10
        assert abs(energy[-1] - energy[0]) / energy[0] < 1e-8

    def test_zero_solution(self):
        c = BarConfig(**SMALL)
        s = assemble(c, c.e_mean)
        sol = newmark_solve(s, np.zeros((c.n_steps + 1, s.n_dof)), c.dt, c.n_steps, k_nl=c.k_nl)
        assert not sol.tip_displacement.any()

    def test_initial_acceleration(self):
        s = oscillator(3.0)
        sol = newmark_solve(s, np.full((11, 1), 2.0), 0.01, 10, u0=[1.0], keep_state=True)
        assert sol.acceleration[0, 0] == pytest.approx(2.0 - 9.0)

    def test_superposition(self):
        c = BarConfig(k_nl=0, **SMALL)
        noise = sample_white_noise(derive_stream(1, 0), c.n_steps + 1, 100.0)
        a = solve_bar(c, 2e11, noise).tip_displacement
        b = solve_bar(c, 2e11, 3.7 * noise).tip_displacement
        np.testing.assert_allclose(b, 3.7 * a, rtol=1e-10, atol=1e-10 * np.abs(a).max())

    def test_nonlinear_hardening(self):
        # the cubic spring must pull a large tip excursion back harder
        c0 = BarConfig(k_nl=0, force_amplitude=0, u0=tuple(np.linspace(0, 1e-3, 11)), **SMALL)
        c1 = BarConfig(k_nl=1e13, force_amplitude=0, u0=c0.u0, **SMALL)
        zero = np.zeros(c0.n_steps + 1)
        lin = solve_bar(c0, 2e11, zero, keep_state=True)
        nl = solve_bar(c1, 2e11, zero, keep_state=True)
        assert nl.acceleration[0, -1] < lin.acceleration[0, -1]
        assert not np.allclose(lin.tip_displacement, nl.tip_displacement)

    def test_explicit_beta_zero(self):
        c = BarConfig(newmark_beta=0.0, **SMALL)
        noise = sample_white_noise(derive_stream(2, 0), c.n_steps + 1, 1.0)
        sol = solve_bar(c, 2e11, noise)
        assert np.all(np.isfinite(sol.tip_displacement))

    def test_non_convergence_reported(self):
        c = BarConfig(k_nl=1e25, force_amplitude=0, u0=tuple(np.linspace(0, 1e-2, 11)), **SMALL)
        with pytest.raises(NonConvergentStep) as info:
            solve_bar(c, 2e11, np.zeros(c.n_steps + 1))
        assert info.value.step >= 1

    def test_singular_mass(self):
        s = AssembledSystem(np.zeros((1, 1)), np.zeros((1, 1)), np.eye(1))
        with pytest.raises(SingularSystem):
            newmark_solve(s, np.zeros((3, 1)), 0.1, 2)

    def test_forcing_shape(self):
        with pytest.raises(ValueError):
            newmark_solve(oscillator(1.0), np.zeros((3, 1)), 0.1, 5)


class TestRealization:
    def test_replay(self):
        c = BarConfig(**SMALL)
        a = simulate_realization(c, derive_stream(11, 4))
        b = simulate_realization(c, derive_stream(11, 4))
        np.testing.assert_array_equal(a.tip_displacement, b.tip_displacement)
        assert a.times.size == c.n_steps + 1

    def test_draw_order(self):
        # one modulus per realization, then one noise value per time level
        c = BarConfig(**SMALL)
        sol = simulate_realization(c, derive_stream(12, 0))
        s = derive_stream(12, 0)
        e = sample_gamma(s, c.gamma_params)
        noise = sample_white_noise(s, c.n_steps + 1, c.force_amplitude)
        np.testing.assert_array_equal(sol.tip_displacement,
                                      solve_bar(c, e, noise).tip_displacement)

    def test_quiet_bar_stays_at_rest(self):
        c = BarConfig(e_delta=1e-6, force_amplitude=0, **SMALL)
        assert not simulate_realization(c, derive_stream(0, 0)).tip_displacement.any()

    def test_forcing_disabled(self):
        c = BarConfig(force_amplitude=0, u0=tuple(np.linspace(0, 1e-5, 11)), **SMALL)
        s = derive_stream(13, 0)
        sol = simulate_realization(c, s)
        e = sample_gamma(derive_stream(13, 0), c.gamma_params)
        ref = solve_bar(c, e, np.zeros(c.n_steps + 1))
        np.testing.assert_array_equal(sol.tip_displacement, ref.tip_displacement)

    def test_randomness_propagates(self):
        c = BarConfig(**SMALL)
        s = derive_stream(14, 0)
        acc = MomentAccumulator()
        for _ in range(1000):
            acc = welford_update(acc, simulate_realization(c, s).final_tip)
        assert acc.m2 > 0
