import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from photontherm import jump_mc as J, params as P, rates as R
from photontherm.errors import DomainError


def _f_numeric(z0, zf, t):
    def part(s, fn):
        return fn(np.exp(-1j * zf * (t - s)) * np.exp(-1j * z0 * s))
    re, _ = integrate.quad(part, 0, t, args=(np.real,), epsabs=1e-13, epsrel=1e-12, limit=400)
    im, _ = integrate.quad(part, 0, t, args=(np.imag,), epsabs=1e-13, epsrel=1e-12, limit=400)
    return re + 1j * im


@given(st.floats(-5, 5), st.floats(0.0, 3), st.floats(-5, 5), st.floats(0.0, 3), st.floats(0.0, 6))
def test_amplitude_matches_direct_integral(w0, g0, wf, gf, t):
    z0, zf = complex(w0, -g0 / 2), complex(wf, -gf / 2)
    got = complex(J.amplitude_f(z0, zf, t))
    ref = _f_numeric(z0, zf, t)
    assert abs(got - ref) <= 1e-8 * max(1.0, abs(ref))


def test_amplitude_degenerate_and_origin():
    z = 0.3 - 0.2j
    assert J.amplitude_f(z, z, 2.0) == pytest.approx(2.0 * np.exp(-1j * z * 2.0), rel=1e-14)
    assert J.amplitude_f(z, 1.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        J.amplitude_f(z, z, -1.0)


def test_amplitude_lab_frame_shift():
    # folding the drive into the initial level equals shifting its frequency
    a = J.amplitude_f(0.1 - 0.05j, 2.0 - 0.3j, 1.7, drive_sign=1, omega_L=0.4)
    b = J.amplitude_f(0.5 - 0.05j, 2.0 - 0.3j, 1.7)
    assert a == pytest.approx(b, rel=1e-14)


@pytest.mark.parametrize("w0,g0,wf,gf", [(0.0, 0.3, 0.5, 0.7), (1.0, 1.0, -2.0, 0.1), (0.2, 0.05, 0.2, 0.05)])
def test_time_integral_closed_form(w0, g0, wf, gf):
    z0, zf = complex(w0, -g0 / 2), complex(wf, -gf / 2)
    ref, _ = integrate.quad(lambda t: abs(complex(J.amplitude_f(z0, zf, t))) ** 2, 0, np.inf, limit=500, epsrel=1e-11)
    a = J.ComplexLevel("g0", w0, g0)
    b = J.ComplexLevel("g_plus_qL", wf, gf)
    assert J.b14_time_integral(a, b) == pytest.approx(g0 * ref, rel=1e-8)


def test_level_validation():
    with pytest.raises(DomainError):
        J.ComplexLevel("g7", 0.0, 1.0)
    with pytest.raises(DomainError):
        J.ComplexLevel("g0", 0.0, -1.0)


@pytest.fixture(scope="module")
def model():
    yb = P.yb_556()
    d = P.fig4_drive(0.1, yb)
    mode = P.mode_at_offset(yb, d, 0.5 * yb.Gamma, alpha_q=1e-3 * yb.Gamma)
    return J.JumpModel(yb, d, mode, P.doppler_temperature(yb, d))


def test_levels_are_drive_frame(model):
    lv = model.levels(np.zeros(3))
    assert lv["g0"].omega == 0.0
    r = model.r
    assert lv["g_plus_qL"].omega == pytest.approx(r.dk_norm**2 / (2 * r.m) + r.x, rel=1e-12)
    assert lv["e_minus_q"].gamma == 1.0


@given(st.floats(-100, 100), st.floats(-100, 100), st.integers(0, 5), st.floats(1e-6, 1.0))
def test_outcome_distribution_normalised(px, py, n_q, rr):
    yb = P.yb_556()
    d = P.fig4_drive(0.1, yb)
    mode = P.mode_at_offset(yb, d, 0.5 * yb.Gamma, alpha_q=1e-3 * yb.Gamma)
    m = J.JumpModel(yb, d, mode, P.doppler_temperature(yb, d))
    u = m.r.scale.momentum_unit
    p = np.array([px, py, 0.0]) * u
    tJ = -math.log(rr) / (m.r.gamma(px) * yb.Gamma)
    out = J.jump_outcome_probabilities(m, p, n_q, tJ, rr)
    assert out.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(out.probabilities >= 0)
    if n_q == 0:
        assert out.probabilities[2] == 0.0 and out.probabilities[3] == 0.0


def test_outcome_rejects_bad_uniform(model):
    with pytest.raises(DomainError):
        J.jump_outcome_probabilities(model, np.zeros(3), 0, 1e-6, 0.0)


def test_emission_rate_linear_in_photon_number(model):
    p = np.array([3.0, -2.0, 1.0])
    e0 = model.emission_rate_at(p, 0)
    assert model.emission_rate_at(p, 4) == pytest.approx(5 * e0, rel=1e-14)
    assert model.absorption_rate_at(p, 0) == 0.0


def test_averaged_rates_agree_with_broadened_golden_rule(yb, far_drive, make_mode, far_T):
    for off in (-2.0, 1.0):
        mode = make_mode(off)
        a = J.averaged_emission_rate(yb, far_drive, mode, far_T)
        b = R.lambda_plus_numeric(yb, far_drive, mode, far_T)
        assert a == pytest.approx(b, rel=5e-3)
        a = J.averaged_absorption_rate(yb, far_drive, mode, far_T)
        b = R.lambda_minus_numeric(yb, far_drive, mode, far_T)
        assert a == pytest.approx(b, rel=5e-3)


def test_trajectory_is_reproducible(yb, far_drive, make_mode, far_T):
    mode = make_mode(0.0, alpha=1e-2)
    a = J.sample_trajectory(yb, far_drive, mode, far_T, 0, 1.0, seed=7, max_jumps=5000, index=2)
    b = J.sample_trajectory(yb, far_drive, mode, far_T, 0, 1.0, seed=7, max_jumps=5000, index=2)
    c = J.sample_trajectory(yb, far_drive, mode, far_T, 0, 1.0, seed=7, max_jumps=5000, index=3)
    assert np.array_equal(a.jump_times, b.jump_times) and np.array_equal(a.outcomes, b.outcomes)
    assert not np.array_equal(a.jump_times, c.jump_times)
    assert a.n_jumps == 5000 and sum(a.counts.values()) == 5000
    assert np.all(np.diff(a.jump_times) > 0)
    assert a.to_dict()["n_jumps"] == 5000


def test_trajectory_stops_at_duration(yb, far_drive, make_mode, far_T):
    mode = make_mode(0.0)
    rate = R.gamma_ground(np.zeros(3), yb, far_drive)
    rec = J.sample_trajectory(yb, far_drive, mode, far_T, 0, 2000 / rate, seed=1, p=np.zeros(3))
    assert rec.jump_times[-1] <= rec.duration
    assert rec.n_jumps == pytest.approx(2000, abs=5 * math.sqrt(2000))


def test_dark_atom_never_jumps(yb, far_drive, make_mode, far_T):
    d0 = far_drive.with_rabi(0.0)
    rec = J.sample_trajectory(yb, d0, make_mode(0.0, drive=d0), far_T, 0, 1.0, seed=0)
    assert rec.n_jumps == 0


def test_renewal_rate_from_boltzmann_trajectories(yb, far_drive, make_mode, far_T):
    mode = make_mode(0.0, alpha=2e-2)
    rec = J.sample_trajectory(yb, far_drive, mode, far_T, 0, 1e3, seed=11, max_jumps=400_000)
    rate, se = rec.rate("emit_system")
    ref = J.renewal_emission_rate(yb, far_drive, mode, far_T)
    assert abs(rate - ref) < 4 * se


def test_amplitude_finite_at_long_times():
    # the initial level decays faster than the final one
    z0, zf = 1.0 - 0.5j, -2.0 - 0.05j
    t = np.array([10.0, 1e3, 1e4])
    f = J.amplitude_f(z0, zf, t)
    assert np.all(np.isfinite(f))
    ref = (np.exp(-1j * zf * t) - np.exp(-1j * z0 * t)) / (-1j * (zf - z0))
    assert np.allclose(f, ref, rtol=1e-12, atol=1e-300)


def test_uncoupled_mode_only_resets(yb, far_drive, far_T):
    mode = P.mode_at_offset(yb, far_drive, 0.0, alpha_q=0.0)
    m = J.JumpModel(yb, far_drive, mode, far_T)
    out = J.jump_outcome_probabilities(m, np.zeros(3), 3, 1e-6, 0.5)
    assert out.probabilities[0] == 1.0


def test_perturbative_correction_small_for_presets(yb, far_drive, make_mode, far_T):
    rng = np.random.default_rng(1)
    for drive in (far_drive, P.standard_drive(yb)):
        T = P.doppler_temperature(yb, drive)
        mode = P.mode_at_offset(yb, drive, 0.0, alpha_q=P.DEFAULT_ALPHA * yb.Gamma)
        m = J.JumpModel(yb, drive, mode, T)
        p = rng.normal(0, m.sigma, (2000, 3))
        rr = rng.random(2000)
        tJ = -np.log(rr) / m.r.gamma(p[:, 0])
        out = J.jump_outcome_probabilities(m, p * m.r.scale.momentum_unit, 1, tJ / yb.Gamma, rr)
        assert np.all(out.correction < 0.05)
