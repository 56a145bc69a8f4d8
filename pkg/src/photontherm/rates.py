"""Scattering rates for one system mode.

Conventions. Rates follow the golden rule with its 2*pi: a transition with
coupling R contributes |R|^2 * 2*pi * delta(omega) where ``delta`` is a unit
normalised (possibly broadened) delta function in angular frequency. With that
convention the broadened-delta integral reduces, for vanishing width, exactly
to the closed forms below, and matches the time-integrated jump amplitudes in
:mod:`photontherm.jump_mc`.

The laser wave vector is the x axis. The momentum integrals of the emission
and absorption rates depend on p only through p.n (n = unit vector along
k_L - q, fixed by the energy delta) and p.k_L, so they reduce to two
dimensions: an adaptive Gauss-Kronrod integral along n (the broadened delta
is far narrower than the thermal distribution) nested with Gauss-Hermite
nodes across it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import logsumexp, voigt_profile

from .errors import DomainError, QuadratureError
from .params import HBAR, AtomSpec, DriveSpec, ModeSpec, Reduced, reduce

TWO_PI = 2 * math.pi


# --------------------------------------------------------------------------
# pointwise couplings (SI)

def gamma_ground(p, atom: AtomSpec, drive: DriveSpec):
    """Laser-bath dissipation rate of a ground-state atom with momentum p [1/s].

    ``p`` is a 3-vector (or an array whose last axis has length 3) in kg m/s.
    """
    p = np.asarray(p, dtype=float)
    doppler = p[..., 0] * drive.k_L / atom.mass
    return drive.Omega**2 * atom.Gamma / ((drive.detuning_bar - doppler) ** 2 + atom.Gamma**2 / 4)


def coupling_R(kind, p, atom: AtomSpec, drive: DriveSpec, mode: ModeSpec):
    """Effective laser-mode coupling between ground momentum states [rad/s].

    ``laser_to_mode`` absorbs a laser photon and emits into the mode,
    ``mode_to_laser`` is the reverse.
    """
    p = np.asarray(p, dtype=float)
    if kind == "laser_to_mode":
        shift = drive.detuning_bar - p[..., 0] * drive.k_L / atom.mass
    elif kind == "mode_to_laser":
        r = reduce(atom, drive, mode)
        shift = r.Dq * atom.Gamma - (p @ mode.wavevector()) / atom.mass
    else:
        raise DomainError(f"unknown coupling kind {kind!r}")
    return mode.alpha_q * drive.Omega / (shift + 0.5j * atom.Gamma)


def broadened_delta(omega, width):
    """Unit-normalised Lorentzian (width/2pi) / (omega^2 + width^2/4)."""
    width = np.asarray(width, dtype=float)
    if np.any(width <= 0):
        raise DomainError("broadened_delta needs width > 0")
    return (width / TWO_PI) / (np.square(omega) + width**2 / 4)


def gamma_a_total(atom: AtomSpec, modes, p=None):
    """Spontaneous emission rate of an excited atom into the system modes [1/s].

    Each mode contributes alpha^2 * 2pi * delta_kappa(Delta E_eg / hbar).
    """
    p = np.zeros(3) if p is None else np.asarray(p, dtype=float)
    total = 0.0
    for mode in modes:
        if not mode.kappa_q > 0:
            raise DomainError("gamma_a_total needs kappa_q > 0 for every mode")
        qv = mode.wavevector()
        # Delta E_eg / hbar = (p^2 - |p - hbar q|^2) / (2 m hbar) + omega_A - omega_q
        dE = (p @ qv) / atom.mass - HBAR * (qv @ qv) / (2 * atom.mass) + (atom.omega_A - mode.omega_q)
        total += mode.alpha_q**2 * TWO_PI * broadened_delta(dE, mode.kappa_q)
    return float(total)


# --------------------------------------------------------------------------
# closed forms (high-temperature limit)

def _roots(r: Reduced):
    """Signed momenta along n satisfying the emission and absorption energy conditions."""
    dk = r.dk_norm
    if dk == 0.0:
        r.nhat()  # raises DegenerateGeometryError
    c = dk * dk / (2 * r.m)
    return r.m * (-r.x - c) / dk, r.m * (-r.x + c) / dk


def _log_closed(r: Reduced, process, doppler_neglected=False):
    """ln of the closed-form laser-mediated rate (natural units)."""
    if r.Omega == 0.0 or r.alpha == 0.0:
        return -math.inf
    p0, p0p = _roots(r)
    nhat = r.nhat()
    if process == "emission":
        p, den = p0, (r.Dl - p0 * (nhat @ r.kL) / r.m) ** 2 + 0.25
    else:
        p, den = p0p, (r.Dq - p0p * (nhat @ r.qv) / r.m) ** 2 + 0.25
    if doppler_neglected:
        den = r.Dq**2 + 0.25
    return (0.5 * math.log(TWO_PI * r.beta * r.m) + 2 * math.log(r.Omega * r.alpha) - math.log(r.dk_norm)
            - r.beta * p * p / (2 * r.m) - math.log(den))


def energy_roots(atom, drive, mode):
    """(p0, p0') in kg m/s; p0 may be negative on the gain side omega_q < omega_L."""
    r = reduce(atom, drive, mode)
    p0, p0p = _roots(r)
    u = r.scale.momentum_unit
    return p0 * u, p0p * u


def lambda_plus_closed(atom, drive, mode, T, doppler_neglected=False):
    """Laser-mediated single-photon emission rate, high-temperature form [1/s].

    ``doppler_neglected`` replaces the Doppler-shifted detuning in the
    denominator by Delta_bar_q (equal to it by the resonance identity up to
    the Doppler shift), as used for the loss-modified balance condition.
    """
    r = reduce(atom, drive, mode, T)
    return math.exp(_log_closed(r, "emission", doppler_neglected)) * atom.Gamma


def lambda_minus_closed(atom, drive, mode, T, doppler_neglected=False):
    """Laser-mediated single-photon absorption rate, high-temperature form [1/s]."""
    r = reduce(atom, drive, mode, T)
    return math.exp(_log_closed(r, "absorption", doppler_neglected)) * atom.Gamma


def high_temperature_margin(atom, drive, mode, T):
    """gamma(0) / (v_th |k_L - q|); the closed forms need this << 1."""
    r = reduce(atom, drive, mode, T)
    v_th = math.sqrt(1.0 / (r.beta * r.m))
    return r.gamma(0.0) / (v_th * r.dk_norm)


# --------------------------------------------------------------------------
# bath loss

class BathLoss(NamedTuple):
    integrated: float
    doppler_neglected: float


def _bath_integrated(r: Reduced):
    """alpha^2 <1 / ((Dq - p.q/m)^2 + 1/4)> over the Boltzmann law: a Voigt profile."""
    qn = float(np.linalg.norm(r.qv))
    sigma_w = math.sqrt(r.m / r.beta) * qn / r.m
    if sigma_w == 0.0:
        return r.alpha**2 / (r.Dq**2 + 0.25)
    # 1 / (w^2 + 1/4) is 2 pi times the unit Lorentzian of half width 1/2
    return r.alpha**2 * TWO_PI * float(voigt_profile(r.Dq, sigma_w, 0.5))


def lambda_minus_bath(atom, drive, mode, T) -> BathLoss:
    """Loss of mode photons scattered into bath modes [1/s].

    Both the thermal average over the Doppler shift along q and the
    Doppler-neglected value alpha^2 Gamma / (Delta_bar_q^2 + Gamma^2/4).
    """
    r = reduce(atom, drive, mode, T)
    approx = r.alpha**2 / (r.Dq**2 + 0.25)
    if r.alpha == 0.0:
        return BathLoss(0.0, 0.0)
    return BathLoss(_bath_integrated(r) * atom.Gamma, approx * atom.Gamma)


# --------------------------------------------------------------------------
# self-consistent golden-rule integrals

def _plane_basis(r: Reduced):
    """n along k_L - q and a unit vector completing span{n, k_L}."""
    nhat = r.nhat()
    perp = r.kL - (r.kL @ nhat) * nhat
    if np.linalg.norm(perp) < 1e-12:
        perp = r.qv - (r.qv @ nhat) * nhat
    if np.linalg.norm(perp) < 1e-12:
        perp = np.array([0.0, 1.0, 0.0]) - nhat[1] * nhat
    return nhat, perp / np.linalg.norm(perp)


def _scfgr_parts(r: Reduced, process, width_scale):
    nhat, eperp = _plane_basis(r)
    dk = r.dk_norm
    a1, a2 = nhat @ r.kL, eperp @ r.kL
    b1, b2 = nhat @ r.qv, eperp @ r.qv
    dkx = r.dk @ r.kL
    c = dk * dk / (2 * r.m)
    pref = (r.alpha * r.Omega) ** 2
    sigma = math.sqrt(r.m / r.beta)

    if process == "emission":
        s_c = -(c + r.x) * r.m / dk

        def body(s, t):
            pk = a1 * s + a2 * t
            eps = width_scale * (r.gamma(pk) + r.gamma(pk + dkx))
            u = -s * dk / r.m - c - r.x
            return pref / ((r.Dl - pk / r.m) ** 2 + 0.25) * eps / (u * u + eps * eps / 4)
    else:
        s_c = (c - r.x) * r.m / dk

        def body(s, t):
            pk = a1 * s + a2 * t
            pq = b1 * s + b2 * t
            eps = width_scale * (r.gamma(pk) + r.gamma(pk - dkx))
            u = s * dk / r.m - c + r.x
            return pref / ((r.Dq - pq / r.m) ** 2 + 0.25) * eps / (u * u + eps * eps / 4)

    eps_c = width_scale * (r.gamma(a1 * s_c) + r.gamma(a1 * s_c + (dkx if process == "emission" else -dkx)))
    return body, s_c, sigma, eps_c * r.m / dk


def _scfgr(r: Reduced, process, width_scale=1.0, n_perp=80, max_refine=2, rtol=1e-4, span=12.0):
    if not width_scale > 0:
        raise DomainError("width_scale must be > 0")
    if r.Omega == 0.0 or r.alpha == 0.0:
        return 0.0, {"nodes": 0, "estimates": [0.0]}
    body, s_c, sigma, w_s = _scfgr_parts(r, process, width_scale)
    lo = min(-span * sigma, s_c - 50 * w_s)
    hi = max(span * sigma, s_c + 50 * w_s)
    norm = 1.0 / (math.sqrt(TWO_PI) * sigma)

    estimates, nodes = [], []
    n = n_perp
    for _ in range(max_refine + 1):
        y, w = np.polynomial.hermite.hermgauss(n)
        t = math.sqrt(2) * sigma * y
        wt = w / math.sqrt(math.pi)

        def f(s):
            return norm * math.exp(-s * s / (2 * sigma * sigma)) * body(s, t)

        pts = (s_c,) if lo < s_c < hi else None
        vals, err = quad_vec(f, lo, hi, epsrel=1e-10, epsabs=0.0, norm="max", points=pts, limit=20000)
        est = float(wt @ vals)
        estimates.append(est)
        nodes.append(n)
        if len(estimates) > 1 and abs(est - estimates[-2]) <= rtol * abs(est):
            return est, {"nodes": n, "estimates": estimates, "s_err": float(np.max(err))}
        n *= 2
    raise QuadratureError("self-consistent golden-rule integral did not converge",
                          {"estimates": estimates, "nodes": nodes})


def lambda_plus_numeric(atom, drive, mode, T, width_scale=1.0, n_perp=80, full_output=False):
    """Emission rate with the lifetime-broadened energy delta [1/s].

    ``width_scale`` multiplies the broadening gamma(p) + gamma(p + k_L - q);
    as it goes to zero the result approaches :func:`lambda_plus_closed`.
    """
    r = reduce(atom, drive, mode, T)
    val, info = _scfgr(r, "emission", width_scale, n_perp)
    val *= atom.Gamma
    return (val, info) if full_output else val


def lambda_minus_numeric(atom, drive, mode, T, width_scale=1.0, n_perp=80, full_output=False):
    """Absorption-into-laser rate with the lifetime-broadened energy delta [1/s]."""
    r = reduce(atom, drive, mode, T)
    val, info = _scfgr(r, "absorption", width_scale, n_perp)
    val *= atom.Gamma
    return (val, info) if full_output else val


def lambda_plus_monte_carlo(atom, drive, mode, T, samples=10**7, seed=0, chunk=10**6):
    """Plain Monte Carlo estimate of the broadened emission integral.

    Draws full 3D Boltzmann momenta and evaluates the energy mismatch from
    the kinetic energies directly. Returns (mean, standard error) in 1/s.
    """
    r = reduce(atom, drive, mode, T)
    if r.Omega == 0.0 or r.alpha == 0.0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(r.m / r.beta)
    dk = r.dk
    total = total2 = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        p = rng.normal(0.0, sigma, size=(n, 3))
        pf = p + dk
        ke0 = np.einsum("ij,ij->i", p, p) / (2 * r.m)
        kef = np.einsum("ij,ij->i", pf, pf) / (2 * r.m)
        mismatch = ke0 - kef - r.x  # (E_i + hbar w_L - E_f - hbar w_q) / hbar
        eps = r.gamma(p[:, 0]) + r.gamma(pf[:, 0])
        R2 = (r.alpha * r.Omega) ** 2 / ((r.Dl - p[:, 0] / r.m) ** 2 + 0.25)
        v = R2 * TWO_PI * broadened_delta(mismatch, eps)
        total += v.sum()
        total2 += np.square(v).sum()
        done += n
    mean = total / samples
    var = max(total2 / samples - mean * mean, 0.0)
    return mean * atom.Gamma, math.sqrt(var / samples) * atom.Gamma


# --------------------------------------------------------------------------
# bundle

@dataclass(frozen=True)
class RateSet:
    """The four photon-number-changing rates for one mode [1/s] and the resonant momenta [kg m/s]."""

    lambda_plus_L: float
    lambda_minus_L: float
    lambda_minus_B: float
    kappa_q: float
    p0: float
    p0_prime: float
    temperature: float
    omega_offset: float = float("nan")  # omega_q - omega_L [rad/s]
    high_T_margin: float = float("nan")
    doppler_neglected: bool = False
    # log-domain copies used by the balance solver; nan when unknown
    log_lambda_plus_L: float = float("nan")
    log_balance_L: float = float("nan")  # ln(lambda_minus_L / lambda_plus_L)

    @property
    def total_loss(self):
        return self.lambda_minus_L + self.lambda_minus_B + self.kappa_q

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def assemble_rates(atom, drive, mode, T, doppler_neglected=False) -> RateSet:
    """Closed-form emission/absorption rates plus bath and cavity loss.

    With ``doppler_neglected`` the laser-mediated rates use Delta_bar_q in
    their denominators and the bath loss is the Doppler-neglected value, which
    is the approximation behind the loss-modified balance condition. Otherwise
    the laser-mediated rates keep their Doppler shift and the bath loss is
    thermally averaged.
    """
    r = reduce(atom, drive, mode, T)
    p0, p0p = _roots(r)
    G = atom.Gamma
    log_lp = _log_closed(r, "emission", doppler_neglected)
    lp = math.exp(log_lp) * G
    lm = math.exp(_log_closed(r, "absorption", doppler_neglected)) * G
    bath = lambda_minus_bath(atom, drive, mode, T)
    u = r.scale.momentum_unit
    v_th = math.sqrt(1.0 / (r.beta * r.m))
    return RateSet(lambda_plus_L=lp, lambda_minus_L=lm,
                   lambda_minus_B=bath.doppler_neglected if doppler_neglected else bath.integrated,
                   kappa_q=mode.kappa_q, p0=p0 * u, p0_prime=p0p * u, temperature=T,
                   omega_offset=r.x * G, high_T_margin=r.gamma(0.0) / (v_th * r.dk_norm),
                   doppler_neglected=doppler_neglected, log_lambda_plus_L=log_lp + math.log(G),
                   log_balance_L=_log_balance_L(r, doppler_neglected) if log_lp > -math.inf else math.nan)


def _log_balance_L(r: Reduced, doppler_neglected=False):
    """ln(Lambda-_L / Lambda+_L) without forming either rate.

    The Boltzmann exponents differ by exactly beta*(omega_q - omega_L) and the
    two Doppler denominators coincide at their resonant momenta, so only the
    (unit) ratio of denominators is evaluated numerically.
    """
    if doppler_neglected:
        return r.beta * r.x
    p0, p0p = _roots(r)
    nhat = r.nhat()
    den_p = (r.Dl - p0 * (nhat @ r.kL) / r.m) ** 2 + 0.25
    den_m = (r.Dq - p0p * (nhat @ r.qv) / r.m) ** 2 + 0.25
    return r.beta * r.x + math.log(den_p / den_m)


def log_balance_ratio(r: Reduced, doppler_neglected=True, integrated_bath=None):
    """ln[(Lambda-_L + Lambda-_B + kappa) / Lambda+_L] for reduced parameters.

    Evaluated in the log domain so that far-detuned points neither underflow
    nor lose the exact exp(beta*(omega_q - omega_L)) ratio of the laser terms.
    The bath loss is the Doppler-neglected value unless ``integrated_bath``
    (default: the opposite of ``doppler_neglected``).
    """
    if integrated_bath is None:
        integrated_bath = not doppler_neglected
    lp = _log_closed(r, "emission", doppler_neglected)
    if lp == -math.inf:
        return math.nan if r.alpha == 0.0 and r.kappa == 0.0 else math.inf
    if integrated_bath:
        bath = _bath_integrated(r)
    else:
        bath = r.alpha**2 / (r.Dq**2 + 0.25)
    terms = [_log_balance_L(r, doppler_neglected)]
    terms += [math.log(v) - lp for v in (bath, r.kappa) if v > 0]
    return float(logsumexp(terms))
