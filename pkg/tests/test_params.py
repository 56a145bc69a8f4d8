import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from photontherm import params as P
from photontherm.errors import DegenerateGeometryError, DomainError


def test_recoil_frequency_of_yb_line(yb):
    Er = P.recoil_energy(P.laser_k(yb), yb.mass) / (2 * math.pi * P.HBAR)
    # literal CODATA numbers, kept apart from scipy.constants
    h, c, u = 6.62607015e-34, 299792458.0, 1.66053906660e-27
    lam = c / 539e12
    expected = h / (2 * 173.938866 * u * lam**2)
    assert Er == pytest.approx(expected, rel=1e-8)
    assert Er == pytest.approx(3.74e3, rel=0.011)


def test_doppler_temperature_far_detuned(yb, far_drive):
    T = P.doppler_temperature(yb, far_drive)
    hbar, kB = 1.054571817e-34, 1.380649e-23
    G = 2 * math.pi * 180e3
    expected = hbar * G / kB * (157**2 + 0.25) / (2 * 157)
    assert T == pytest.approx(expected, rel=1e-9)


def test_doppler_minimum_at_half_linewidth(yb):
    ds = np.linspace(-3, -0.1, 291)
    Ts = [P.doppler_temperature(yb, P.drive_from_gamma_units(yb, 0.1, d)) for d in ds]
    assert ds[int(np.argmin(Ts))] == pytest.approx(-0.5, abs=0.011)


def test_blue_detuning_has_no_doppler_limit(yb):
    with pytest.raises(DomainError):
        P.doppler_temperature(yb, P.drive_from_gamma_units(yb, 0.1, 0.5))


@pytest.mark.parametrize("kw", [dict(mass=-1.0), dict(Gamma=0.0), dict(omega_A=math.nan)])
def test_atom_rejects_bad_values(kw):
    base = dict(mass=1e-25, omega_A=1e15, Gamma=1e6)
    base.update(kw)
    with pytest.raises(DomainError):
        P.AtomSpec(**base)


def test_mode_rejects_bad_angle(yb, far_drive):
    with pytest.raises(DomainError):
        P.mode_at_offset(yb, far_drive, 0.0, theta=4.0)


def test_collinear_mode_has_no_direction(yb, far_drive):
    mode = P.mode_at_offset(yb, far_drive, 0.0, theta=0.0)
    assert P.delta_k(far_drive, mode) == 0.0
    with pytest.raises(DegenerateGeometryError):
        P.reduce(yb, far_drive, mode).nhat()


def test_right_angle_momentum_transfer(yb, far_drive, make_mode):
    dk = P.delta_k(far_drive, make_mode())
    assert dk == pytest.approx(math.sqrt(2) * far_drive.k_L, rel=1e-14)


def test_offset_round_trip(yb, far_drive):
    for off in (-20.0, 0.0, 3.5):
        mode = P.mode_at_offset(yb, far_drive, off * yb.Gamma)
        assert P.laser_mode_offset(yb, far_drive, mode) / yb.Gamma == pytest.approx(off, abs=1e-6)


def test_reduced_mass_and_temperature(yb, far_drive, far_T):
    r = P.reduce(yb, far_drive, None, far_T)
    Er = P.recoil_energy(far_drive.k_L, yb.mass) / (P.HBAR * yb.Gamma)
    assert r.m == pytest.approx(1 / (2 * Er), rel=1e-12)
    assert 1 / r.beta == pytest.approx((157**2 + 0.25) / (2 * 157), rel=1e-12)


def test_reduced_shift_identity(yb, far_drive, make_mode):
    # Delta_q - Delta_L = x + (k_L^2 - q^2)/2m in natural units
    for off in (-5.0, 1.0):
        r = P.reduce(yb, far_drive, make_mode(off))
        assert r.Dq - r.Dl == pytest.approx(r.x + (1 - r.qv @ r.qv) / (2 * r.m), abs=1e-9)


@given(st.sampled_from(["frequency", "momentum", "energy", "temperature", "wavenumber", "mass", "time"]),
       st.floats(1e-30, 1e30))
def test_unit_round_trip(dim, value):
    yb = P.yb_556()
    scale = P.NaturalScale.of(yb, P.laser_k(yb))
    assert P.from_natural(P.to_natural(value, dim, scale), dim, scale) == pytest.approx(value, rel=1e-14)


def test_unknown_dimension(yb):
    scale = P.NaturalScale.of(yb, P.laser_k(yb))
    with pytest.raises(DomainError):
        scale.unit("furlong")


def test_excitation_ratio(yb, far_drive):
    assert far_drive.excitation_ratio(yb) == pytest.approx(0.1 * 157 / math.hypot(157, 0.5), rel=1e-12)
    assert far_drive.low_excitation(yb)
    assert not P.standard_drive(yb).low_excitation(yb)


def test_atom_preset_lookup():
    assert P.atom_preset("yb-556") == P.yb_556()
    with pytest.raises(DomainError):
        P.atom_preset("cs-852")


def test_recoil_scaling(yb):
    k = P.laser_k(yb)
    assert P.recoil_energy(0.0, yb.mass) == 0.0
    for lam in (2, 3, 10):
        assert P.recoil_energy(lam * k, yb.mass) == pytest.approx(lam**2 * P.recoil_energy(k, yb.mass), rel=1e-14)
    with pytest.raises(DomainError):
        P.recoil_energy(k, 0.0)


def test_scale_definitions(yb):
    k = P.laser_k(yb)
    scale = P.NaturalScale.of(yb, k)
    assert P.to_natural(yb.Gamma, "frequency", scale) == 1.0
    assert P.to_natural(P.HBAR * k, "momentum", scale) == 1.0


def test_shifted_detuning_on_resonance(yb, far_drive):
    mode = P.ModeSpec(omega_q=yb.omega_A, q=0.0, theta=0.0, alpha_q=0.0)
    assert P.shifted_detunings(yb, far_drive, mode)[1] == 0.0


def test_bare_detuning_round_trip(yb):
    k = P.laser_k(yb)
    Er = P.recoil_energy(k, yb.mass) / P.HBAR
    d = P.DriveSpec.from_bare_detuning(yb, 1.0, -157 * yb.Gamma + Er, k)
    assert d.detuning_bar / yb.Gamma == pytest.approx(-157.0, rel=1e-12)


@given(st.floats(-300, -1), st.floats(-50, 50), st.floats(0.0, math.pi), st.floats(0.5, 1.5))
def test_shifted_detuning_identity(det, off, theta, q_rel):
    yb = P.yb_556()
    d = P.drive_from_gamma_units(yb, 1.0, det)
    mode = P.mode_at_offset(yb, d, off * yb.Gamma, theta=theta, q=q_rel * d.k_L)
    dl, dq = P.shifted_detunings(yb, d, mode)
    rhs = (P.laser_mode_offset(yb, d, mode) + P.recoil_energy(d.k_L, yb.mass) / P.HBAR
           - P.recoil_energy(mode.q, yb.mass) / P.HBAR)
    assert dq - dl == pytest.approx(rhs, rel=1e-12, abs=1e-12 * yb.Gamma)
