import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from photontherm import motion as M, params as P, rates as R
from photontherm.errors import DomainError


def test_coefficients_by_hand(yb):
    d = P.drive_from_gamma_units(yb, 0.1, -0.5)
    co = M.cooling_coefficients(yb, d)
    G, k, m = yb.Gamma, d.k_L, yb.mass
    Om, De = 0.1 * G, -0.5 * G
    lor = De**2 + G**2 / 4
    assert co.F0 == pytest.approx(P.HBAR * k * Om**2 * G / lor, rel=1e-14)
    assert co.zeta == pytest.approx(P.HBAR * Om**2 * G * 0.5 * G * k**2 / (lor**2 * m), rel=1e-14)
    assert co.damping_rate == 2 * co.zeta


@given(st.floats(-50, -0.05), st.floats(0.01, 1.0))
def test_einstein_relation_gives_doppler_temperature(detuning, rabi):
    yb = P.yb_556()
    d = P.drive_from_gamma_units(yb, rabi, detuning)
    co = M.cooling_coefficients(yb, d)
    assert co.diffusion == pytest.approx(2 * co.mass * co.zeta * P.KB * co.T, rel=1e-12)
    assert co.T == pytest.approx(P.doppler_temperature(yb, d), rel=1e-12)


def test_blue_detuning_heats(yb):
    co = M.cooling_coefficients(yb, P.drive_from_gamma_units(yb, 0.1, 0.5))
    assert co.heating and co.zeta < 0 and math.isnan(co.T)


def test_dark_laser_does_nothing(yb):
    co = M.cooling_coefficients(yb, P.drive_from_gamma_units(yb, 0.0, -0.5))
    assert co.F0 == 0.0 and co.zeta == 0.0 and not co.heating
    with pytest.raises(DomainError):
        M.langevin_simulate(co, n_particles=10)


def test_unstable_step_rejected(yb):
    co = M.cooling_coefficients(yb, P.standard_drive(yb))
    with pytest.raises(DomainError):
        M.langevin_simulate(co, n_particles=10, dt=0.2 / co.zeta)


@pytest.fixture(scope="module")
def std_coeffs():
    yb = P.yb_556()
    return M.cooling_coefficients(yb, P.standard_drive(yb))


def test_discretisation_bias_is_exact(std_coeffs):
    # Euler-Maruyama for dp = -2 zeta p dt + ... has stationary <p^2> = m k_B T / (1 - zeta dt)
    co = std_coeffs
    dt = 0.05 / co.zeta
    ens = M.langevin_simulate(co, n_particles=40_000, dt=dt, seed=4)
    ratio = np.mean(ens.momenta**2) / (co.mass * P.KB * co.T)
    assert ratio == pytest.approx(1 / (1 - 0.05), abs=4 * math.sqrt(2 / 40_000))


def test_uncompensated_drift_mean(std_coeffs):
    co = std_coeffs
    ens = M.langevin_simulate(co, drift_compensated=False, n_particles=20_000, seed=1)
    sd = math.sqrt(co.mass * P.KB * co.T)
    target = co.F0 / (2 * co.zeta)
    assert abs(np.mean(ens.momenta) - target) < 4 * sd / math.sqrt(20_000)


def test_relaxation_history(std_coeffs):
    co = std_coeffs
    ens = M.langevin_simulate(co, n_particles=20_000, seed=2, record_every=100)
    h = ens.p2_history / (co.mass * P.KB * co.T)
    ref = 1 - np.exp(-4 * co.zeta * ens.history_times)
    assert np.allclose(h, ref, atol=5 * math.sqrt(2 / 20_000))


def test_seeded_runs_repeat(std_coeffs):
    a = M.langevin_simulate(std_coeffs, n_particles=1000, steps=50, seed=9)
    b = M.langevin_simulate(std_coeffs, n_particles=1000, steps=50, seed=9)
    assert np.array_equal(a.momenta, b.momenta)


def test_time_step_convergence(std_coeffs):
    c, f, rel = M.dt_convergence(std_coeffs, n_particles=5_000)
    assert rel < 0.005 and rel == pytest.approx(abs(c - f) / f)


def test_jump_tables_sum_rule_and_moments(yb):
    d = P.standard_drive(yb)
    co = M.cooling_coefficients(yb, d)
    ps = np.linspace(-3, 3, 61) * P.HBAR * d.k_L
    tab = M.jump_rate_tables(yb, d, ps)
    assert np.all(tab["residual"] <= 1e-12 * tab["gamma_ground"])
    assert np.allclose(tab["excited_plus"] + tab["excited_minus"], yb.Gamma)
    # force at rest and its slope reproduce F0 and -2 zeta (one-dimensional bookkeeping)
    i0 = 30
    assert tab["force"][i0] == pytest.approx(co.F0, rel=1e-12)
    slope = (tab["force"][i0 + 1] - tab["force"][i0 - 1]) / (ps[i0 + 1] - ps[i0 - 1])
    assert slope == pytest.approx(-2 * co.zeta, rel=5e-3)
    # the full second moment of the kicks is twice the symmetric diffusion at rest
    assert tab["second_moment_rate"][i0] == pytest.approx(2 * co.diffusion, rel=1e-12)
    direct = R.gamma_ground(np.zeros(3), yb, d)
    assert tab["rate_total"][i0] == pytest.approx(direct, rel=1e-14)


def test_equilibrium_check_on_exact_gaussian():
    rng = np.random.default_rng(0)
    m, T = 3e-25, 1e-4
    p = rng.normal(0, math.sqrt(m * P.KB * T), 50_000)
    out = M.equilibrium_check(p, T, m)
    assert out["ks_pvalue"] > 1e-3
    assert out["p2_ratio"] == pytest.approx(1.0, abs=0.03)
    assert out["kurtosis"] == pytest.approx(3.0, abs=0.1)
    with pytest.raises(DomainError):
        M.equilibrium_check(p[:100], T, m)


def test_far_detuned_coefficients_by_hand(yb, far_drive):
    co = M.cooling_coefficients(yb, far_drive)
    hbar = 1.054571817e-34
    G = 2 * math.pi * 180e3
    Om, De = 15.7 * G, -157 * G
    k = 2 * math.pi * 539e12 / 299792458.0
    m = 173.938866 * 1.66053906660e-27
    lor = De**2 + G**2 / 4
    assert co.F0 == pytest.approx(hbar * k * Om**2 * G / lor, rel=1e-8)
    assert co.zeta == pytest.approx(hbar * Om**2 * G * abs(De) * k**2 / (lor**2 * m), rel=1e-8)


def test_damping_odd_in_detuning(yb):
    a = M.cooling_coefficients(yb, P.drive_from_gamma_units(yb, 0.2, -3.0))
    b = M.cooling_coefficients(yb, P.drive_from_gamma_units(yb, 0.2, 3.0))
    assert b.zeta == pytest.approx(-a.zeta, rel=1e-14)


def test_compensated_mean_vanishes(std_coeffs):
    co = std_coeffs
    ens = M.langevin_simulate(co, n_particles=20_000, seed=3)
    sd = math.sqrt(co.mass * P.KB * co.T)
    assert abs(np.mean(ens.momenta)) < 4 * sd / math.sqrt(20_000)


def test_heating_grows_spread(yb):
    co = M.cooling_coefficients(yb, P.drive_from_gamma_units(yb, 0.15, 0.5))
    ens = M.langevin_simulate(co, n_particles=2_000, steps=2_000, seed=0, record_every=100)
    assert np.all(np.diff(ens.p2_history) > 0)


def test_jump_table_lorentzian_symmetry(yb):
    d = P.standard_drive(yb)
    p_res = yb.mass * d.detuning_bar / d.k_L
    u = np.linspace(0.1, 3, 30) * P.HBAR * d.k_L
    a = M.jump_rate_tables(yb, d, p_res + u)["rate_total"]
    b = M.jump_rate_tables(yb, d, p_res - u)["rate_total"]
    assert np.allclose(a, b, rtol=1e-12)


def test_ks_pvalues_uniform_for_exact_gaussian():
    from scipy import stats
    rng = np.random.default_rng(5)
    m, T = 3e-25, 1e-4
    sd = math.sqrt(m * P.KB * T)
    pv = [M.equilibrium_check(rng.normal(0, sd, 10_000), T, m)["ks_pvalue"] for _ in range(200)]
    assert stats.kstest(pv, "uniform").pvalue > 1e-3


def test_langevin_passes_ks_in_most_repeats(std_coeffs):
    co = std_coeffs
    passed = []
    for seed in range(20):
        ens = M.langevin_simulate(co, n_particles=10_000, seed=1000 + seed)
        passed.append(M.equilibrium_check(ens, co.T, co.mass)["ks_pvalue"] > 0.01)
    assert np.mean(passed) >= 0.95
