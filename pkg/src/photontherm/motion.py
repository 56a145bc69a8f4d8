"""1D Doppler-cooling model of the atomic motion.

The quantum Brownian motion master equation for the ground-state momentum has
a dc force F0, a friction term zeta [x, {p, rho}] and a position diffusion
term 2 m zeta k_B T [x, [x, rho]]. Its moment equations are

    d<p>/dt   = F0 - 2 zeta <p>
    d<p^2>/dt = 2 F0 <p> - 4 zeta <p^2> + 4 m zeta k_B T

so the semiclassical equivalent is the Ornstein-Uhlenbeck process

    dp = (F0 - 2 zeta p) dt + sqrt(2 D) dW,   D = 2 m zeta k_B T,

whose stationary law is the Boltzmann distribution with <p^2> = m k_B T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DomainError
from .params import HBAR, KB, AtomSpec, DriveSpec
from .rates import gamma_ground


@dataclass(frozen=True)
class CoolingCoefficients:
    """F0 [N], zeta [1/s], diffusion D [kg^2 m^2 / s^3], T [K], mass [kg].

    ``zeta`` is positive for red detuning; for blue detuning it is negative,
    ``heating`` is set and T is nan. D is the same in both cases.
    """

    F0: float
    zeta: float
    diffusion: float
    T: float
    mass: float
    heating: bool = False

    @property
    def damping_rate(self):
        """Relaxation rate of <p>, 2 zeta."""
        return 2 * self.zeta


def cooling_coefficients(atom: AtomSpec, drive: DriveSpec) -> CoolingCoefficients:
    d, G, Om, k, m = drive.detuning_bar, atom.Gamma, drive.Omega, drive.k_L, atom.mass
    lor = d * d + G * G / 4
    F0 = HBAR * k * Om**2 * G / lor
    zeta = -HBAR * Om**2 * G * d * k * k / (lor**2 * m)
    D = HBAR**2 * k * k * Om**2 * G / lor
    if zeta > 0:
        T = D / (2 * m * zeta * KB)
    else:
        T = math.nan
    return CoolingCoefficients(F0=F0, zeta=zeta, diffusion=D, T=T, mass=m, heating=bool(d > 0 and Om > 0))


@dataclass
class MotionEnsemble:
    """Momenta [kg m/s] of independent particles after ``time`` [s]."""

    momenta: np.ndarray
    time: float
    seed: int
    dt: float
    drift_compensated: bool
    p2_history: np.ndarray = field(default_factory=lambda: np.zeros(0))  # <p^2> at each recorded step
    history_times: np.ndarray = field(default_factory=lambda: np.zeros(0))


DEFAULT_DT_ZETA = 0.005
BATCH = 1 << 15


def _check_dt(coeffs, dt):
    if not dt > 0:
        raise DomainError("dt must be > 0")
    if dt * abs(coeffs.zeta) >= 0.1:
        raise DomainError(f"unstable step: dt * zeta = {dt * abs(coeffs.zeta):.3g} must be < 0.1")


def _default_dt(coeffs):
    if coeffs.zeta == 0:
        raise DomainError("zeta = 0: no cooling dynamics to integrate")
    return DEFAULT_DT_ZETA / abs(coeffs.zeta)


def langevin_simulate(coeffs: CoolingCoefficients, drift_compensated=True, n_particles=100_000, dt=None,
                      steps=None, seed=0, p_init=None, record_every=0) -> MotionEnsemble:
    """Euler-Maruyama integration of the momentum Ornstein-Uhlenbeck process.

    Defaults: dt = 0.005/|zeta|, steps covering 20/|zeta|. Particles are split
    into fixed batches with their own RNG streams, so results do not depend
    on how batches are scheduled. ``record_every`` > 0 stores <p^2> every that
    many steps.
    """
    dt = _default_dt(coeffs) if dt is None else dt
    _check_dt(coeffs, dt)
    if steps is None:
        steps = int(math.ceil(20.0 / (abs(coeffs.zeta) * dt)))
    n = int(n_particles)
    drift = 0.0 if drift_compensated else coeffs.F0
    a = 2 * coeffs.zeta
    amp = math.sqrt(2 * coeffs.diffusion * dt)
    p = np.zeros(n) if p_init is None else np.array(np.broadcast_to(p_init, (n,)), dtype=float)
    n_rec = steps // record_every if record_every else 0
    hist = np.zeros((n_rec,))
    for b, start in enumerate(range(0, n, BATCH)):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), b]))
        x = p[start:start + BATCH]
        xi = np.empty_like(x)
        for s in range(steps):
            rng.standard_normal(out=xi)
            x += (drift - a * x) * dt + amp * xi
            if record_every and (s + 1) % record_every == 0:
                hist[(s + 1) // record_every - 1] += np.dot(x, x)
    times = (np.arange(1, n_rec + 1) * record_every * dt) if n_rec else np.zeros(0)
    return MotionEnsemble(momenta=p, time=steps * dt, seed=int(seed), dt=dt, drift_compensated=drift_compensated,
                          p2_history=hist / n if n_rec else hist, history_times=times)


def dt_convergence(coeffs: CoolingCoefficients, n_particles=20_000, dt=None, duration=None, seed=0):
    """Relative change of the final <p^2> when dt is halved, with shared Brownian increments.

    Returns (p2 at dt, p2 at dt/2, relative change).
    """
    dt = _default_dt(coeffs) if dt is None else dt
    _check_dt(coeffs, dt)
    duration = 20.0 / abs(coeffs.zeta) if duration is None else duration
    steps = int(math.ceil(duration / dt))
    a, D = 2 * coeffs.zeta, coeffs.diffusion
    s_fine = math.sqrt(2 * D * dt / 2)
    tot_c = tot_f = 0.0
    for b, start in enumerate(range(0, int(n_particles), BATCH)):
        m = min(BATCH, int(n_particles) - start)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), b]))
        pc = np.zeros(m)
        pf = np.zeros(m)
        for _ in range(steps):
            x1 = rng.standard_normal(m)
            x2 = rng.standard_normal(m)
            pf += -a * pf * dt / 2 + s_fine * x1
            pf += -a * pf * dt / 2 + s_fine * x2
            pc += -a * pc * dt + s_fine * (x1 + x2)
        tot_c += np.dot(pc, pc)
        tot_f += np.dot(pf, pf)
    c, f = tot_c / n_particles, tot_f / n_particles
    return c, f, abs(c - f) / f


# --------------------------------------------------------------------------
# jump bookkeeping

def jump_rate_tables(atom: AtomSpec, drive: DriveSpec, p_grid):
    """Ground-state jump rates on a 1D momentum grid [kg m/s].

    A ground-state jump absorbs a laser photon (+hbar k_L) and re-emits into
    the bath along +x or -x with equal weight; excited-state jumps share
    Gamma the same way. Returns a dict of arrays, including the local force,
    momentum diffusion and the residual of the sum rule against
    :func:`photontherm.rates.gamma_ground`.
    """
    p = np.asarray(p_grid, dtype=float)
    P3 = np.zeros(p.shape + (3,))
    P3[..., 0] = p
    G, k, d, Om, m = atom.Gamma, drive.k_L, drive.detuning_bar, drive.Omega, atom.mass
    total = Om**2 * G / ((d - p * k / m) ** 2 + G**2 / 4)
    r_plus = 0.5 * total  # emitted photon along +x, net kick 0
    r_minus = 0.5 * total  # emitted photon along -x, net kick +2 hbar k_L
    ref = gamma_ground(P3, atom, drive)
    kicks_plus, kicks_minus = 0.0, 2 * HBAR * k
    force = r_plus * kicks_plus + r_minus * kicks_minus
    second = r_plus * kicks_plus**2 + r_minus * kicks_minus**2
    return dict(p=p, rate_total=total, rate_emit_plus=r_plus, rate_emit_minus=r_minus,
                excited_plus=np.full_like(p, 0.5 * G), excited_minus=np.full_like(p, 0.5 * G),
                force=force, second_moment_rate=second,
                residual=np.abs(r_plus + r_minus - ref), gamma_ground=ref)


# --------------------------------------------------------------------------
# equilibrium statistics

def equilibrium_check(ensemble, T, mass):
    """KS test of momenta against N(0, m k_B T) plus moment ratios."""
    p = np.asarray(ensemble.momenta if isinstance(ensemble, MotionEnsemble) else ensemble, dtype=float)
    if p.size < 10_000:
        raise DomainError("equilibrium_check needs at least 1e4 samples")
    sd = math.sqrt(mass * KB * T)
    ks = stats.kstest(p / sd, "norm")
    return dict(ks_statistic=float(ks.statistic), ks_pvalue=float(ks.pvalue),
                p2_ratio=float(np.mean(p * p) / sd**2), mean_over_sd=float(np.mean(p) / sd),
                kurtosis=float(stats.kurtosis(p, fisher=False)))
