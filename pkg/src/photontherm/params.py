"""Physical parameter types, presets and the natural unit system.

Everything public takes and returns SI values. Internally the kernels work in
natural units where the linewidth, the laser photon momentum and hbar are all
one:

    frequency   -> Gamma
    momentum    -> hbar k_L
    energy      -> hbar Gamma
    temperature -> hbar Gamma / k_B
    wavenumber  -> k_L
    mass        -> hbar k_L**2 / Gamma   (so m = 1 / (2 E_r(k_L) / hbar Gamma))
    time        -> 1 / Gamma

The laser wave vector defines the x axis; a mode at angle ``theta`` lies in
the x-y plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants as cts

from .errors import DomainError, DegenerateGeometryError

HBAR = cts.hbar
KB = cts.k
C_LIGHT = cts.c
AMU = cts.atomic_mass

# 174Yb; the isotope behind the intercombination-line numbers is not stated.
YB174_MASS_U = 173.938866


@dataclass(frozen=True)
class AtomSpec:
    """Two-level atom: mass [kg], transition frequency and linewidth [rad/s]."""

    mass: float
    omega_A: float
    Gamma: float
    name: str = "custom"

    def __post_init__(self):
        for key in ("mass", "omega_A", "Gamma"):
            value = getattr(self, key)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"AtomSpec.{key} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class DriveSpec:
    """Cooling laser.

    ``Omega`` is half the usual Rabi frequency, ``detuning_bar`` the detuning
    omega_L - omega_A - E_r(k_L)/hbar including the recoil shift, ``k_L`` the
    laser wavenumber [1/m].
    """

    Omega: float
    detuning_bar: float
    k_L: float

    def __post_init__(self):
        if not (math.isfinite(self.Omega) and self.Omega >= 0):
            raise DomainError(f"DriveSpec.Omega must be >= 0, got {self.Omega!r}")
        if not (math.isfinite(self.k_L) and self.k_L > 0):
            raise DomainError(f"DriveSpec.k_L must be > 0, got {self.k_L!r}")
        if not math.isfinite(self.detuning_bar):
            raise DomainError("DriveSpec.detuning_bar must be finite")

    @classmethod
    def from_bare_detuning(cls, atom: AtomSpec, Omega, detuning, k_L):
        """Build from the bare detuning omega_L - omega_A."""
        return cls(Omega, detuning - recoil_energy(k_L, atom.mass) / HBAR, k_L)

    def excitation_ratio(self, atom: AtomSpec) -> float:
        """Omega / |detuning_bar + i Gamma/2|; the theory needs this << 1."""
        return self.Omega / math.hypot(self.detuning_bar, atom.Gamma / 2)

    def low_excitation(self, atom: AtomSpec, threshold=0.1) -> bool:
        return self.excitation_ratio(atom) < threshold

    def with_rabi(self, Omega):
        return replace(self, Omega=Omega)


@dataclass(frozen=True)
class ModeSpec:
    """A long-lived system photon mode.

    ``omega_q`` [rad/s], wavenumber ``q`` [1/m], angle ``theta`` to the laser,
    ``alpha_q`` half the single-photon Rabi frequency, ``kappa_q`` the cavity
    linewidth.
    """

    omega_q: float
    q: float
    theta: float
    alpha_q: float
    kappa_q: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega_q) and self.omega_q > 0):
            raise DomainError(f"ModeSpec.omega_q must be > 0, got {self.omega_q!r}")
        if not (math.isfinite(self.q) and self.q >= 0):
            raise DomainError(f"ModeSpec.q must be >= 0, got {self.q!r}")
        if not (0.0 <= self.theta <= math.pi):
            raise DomainError(f"ModeSpec.theta must lie in [0, pi], got {self.theta!r}")
        if not (math.isfinite(self.alpha_q) and self.alpha_q >= 0):
            raise DomainError("ModeSpec.alpha_q must be >= 0")
        if not (math.isfinite(self.kappa_q) and self.kappa_q >= 0):
            raise DomainError("ModeSpec.kappa_q must be >= 0")

    def wavevector(self) -> np.ndarray:
        return self.q * np.array([math.cos(self.theta), math.sin(self.theta), 0.0])


def recoil_energy(k, mass):
    """Photon recoil energy hbar^2 k^2 / 2m [J]."""
    if not mass > 0:
        raise DomainError(f"mass must be > 0, got {mass!r}")
    if np.any(np.asarray(k) < 0):
        raise DomainError("wavenumber must be >= 0")
    return HBAR**2 * np.square(k) / (2 * mass)


def laser_frequency(atom: AtomSpec, drive: DriveSpec) -> float:
    return atom.omega_A + drive.detuning_bar + recoil_energy(drive.k_L, atom.mass) / HBAR


def shifted_detunings(atom: AtomSpec, drive: DriveSpec, mode: ModeSpec):
    """Recoil-shifted detunings (Delta_bar_L, Delta_bar_q) [rad/s]."""
    dq = (mode.omega_q - atom.omega_A) - recoil_energy(mode.q, atom.mass) / HBAR
    return drive.detuning_bar, dq


def laser_mode_offset(atom: AtomSpec, drive: DriveSpec, mode: ModeSpec) -> float:
    """omega_q - omega_L [rad/s], formed without subtracting two optical frequencies twice."""
    return (mode.omega_q - atom.omega_A) - drive.detuning_bar - recoil_energy(drive.k_L, atom.mass) / HBAR


def delta_k(drive: DriveSpec, mode: ModeSpec) -> float:
    """|k_L - q| [1/m]."""
    kL, q = drive.k_L, mode.q
    return math.sqrt(max(kL * kL + q * q - 2 * kL * q * math.cos(mode.theta), 0.0))


def mode_at_offset(atom: AtomSpec, drive: DriveSpec, offset, *, theta=math.pi / 2, alpha_q=0.0,
                   kappa_q=0.0, q=None, co_vary_q=False) -> ModeSpec:
    """Mode with omega_q = omega_L + offset.

    By default |q| stays at ``q`` (or k_L when not given) so that |k_L - q| is
    fixed across a sweep; ``co_vary_q`` sets |q| = omega_q / c instead.
    """
    omega_q = laser_frequency(atom, drive) + offset
    if co_vary_q:
        q = omega_q / C_LIGHT
    elif q is None:
        q = drive.k_L
    return ModeSpec(omega_q=omega_q, q=q, theta=theta, alpha_q=alpha_q, kappa_q=kappa_q)


def doppler_kT(atom: AtomSpec, drive: DriveSpec) -> float:
    """k_B T of the Doppler limit for this detuning [J]."""
    d = drive.detuning_bar
    if not d < 0:
        raise DomainError(f"Doppler cooling needs detuning_bar < 0, got {d!r}")
    return HBAR / 2 * (d * d + atom.Gamma**2 / 4) / abs(d)


def doppler_temperature(atom: AtomSpec, drive: DriveSpec) -> float:
    """Doppler-limit temperature [K]."""
    return doppler_kT(atom, drive) / KB


# --------------------------------------------------------------------------
# natural units

_DIMENSIONS = ("frequency", "momentum", "energy", "temperature", "wavenumber", "mass", "time")


@dataclass(frozen=True)
class NaturalScale:
    frequency_unit: float  # Gamma [rad/s]
    momentum_unit: float  # hbar k_L [kg m/s]
    energy_unit: float  # hbar Gamma [J]

    @classmethod
    def of(cls, atom: AtomSpec, k_L: float):
        return cls(atom.Gamma, HBAR * k_L, HBAR * atom.Gamma)

    def unit(self, dimension: str) -> float:
        if dimension == "frequency":
            return self.frequency_unit
        if dimension == "momentum":
            return self.momentum_unit
        if dimension == "energy":
            return self.energy_unit
        if dimension == "temperature":
            return self.energy_unit / KB
        if dimension == "wavenumber":
            return self.momentum_unit / HBAR
        if dimension == "mass":
            return self.momentum_unit**2 / self.energy_unit
        if dimension == "time":
            return 1.0 / self.frequency_unit
        raise DomainError(f"unknown dimension {dimension!r}; expected one of {_DIMENSIONS}")

    def to_natural(self, value, dimension):
        return value / self.unit(dimension)

    def from_natural(self, value, dimension):
        return value * self.unit(dimension)


def to_natural(value, dimension, scale: NaturalScale):
    return scale.to_natural(value, dimension)


def from_natural(value, dimension, scale: NaturalScale):
    return scale.from_natural(value, dimension)


@dataclass(frozen=True)
class Reduced:
    """Dimensionless parameter bundle for one operating point (hbar = Gamma = k_L = 1)."""

    scale: NaturalScale
    m: float
    Omega: float
    Dl: float
    kL: np.ndarray
    Dq: float = float("nan")
    x: float = float("nan")  # omega_q - omega_L
    alpha: float = 0.0
    kappa: float = 0.0
    qv: np.ndarray = field(default_factory=lambda: np.zeros(3))
    beta: float = float("nan")

    @property
    def dk(self) -> np.ndarray:
        return self.kL - self.qv

    @property
    def dk_norm(self) -> float:
        return float(np.linalg.norm(self.dk))

    def nhat(self) -> np.ndarray:
        n = self.dk_norm
        if n == 0.0:
            raise DegenerateGeometryError("|k_L - q| = 0: the mode is parallel to the laser with equal wavenumber")
        return self.dk / n

    def gamma(self, pk):
        """Ground-state dissipation rate as a function of p.k_L (natural units)."""
        return self.Omega**2 / ((self.Dl - pk / self.m) ** 2 + 0.25)


def reduce(atom: AtomSpec, drive: DriveSpec, mode: ModeSpec | None = None, T=None) -> Reduced:
    scale = NaturalScale.of(atom, drive.k_L)
    G = atom.Gamma
    m = scale.to_natural(atom.mass, "mass")
    kw = dict(scale=scale, m=m, Omega=drive.Omega / G, Dl=drive.detuning_bar / G, kL=np.array([1.0, 0.0, 0.0]))
    if mode is not None:
        _, dq = shifted_detunings(atom, drive, mode)
        kw.update(Dq=dq / G, x=laser_mode_offset(atom, drive, mode) / G, alpha=mode.alpha_q / G,
                  kappa=mode.kappa_q / G, qv=mode.wavevector() / drive.k_L)
    if T is not None:
        if not T > 0:
            raise DomainError(f"temperature must be > 0, got {T!r}")
        kw["beta"] = scale.energy_unit / (KB * T)
    return Reduced(**kw)


# --------------------------------------------------------------------------
# presets

def yb_556(mass_u=YB174_MASS_U) -> AtomSpec:
    """Yb 1S0-3P1 intercombination line: 539 THz, Gamma/2pi = 180 kHz."""
    return AtomSpec(mass=mass_u * AMU, omega_A=2 * math.pi * 539e12, Gamma=2 * math.pi * 180e3, name="yb-556")


ATOM_PRESETS = {"yb-556": yb_556}


def atom_preset(name: str) -> AtomSpec:
    try:
        return ATOM_PRESETS[name]()
    except KeyError:
        raise DomainError(f"unknown atom preset {name!r}; known: {sorted(ATOM_PRESETS)}") from None


def laser_k(atom: AtomSpec) -> float:
    """Laser wavenumber taken as omega_A / c."""
    return atom.omega_A / C_LIGHT


def drive_from_gamma_units(atom: AtomSpec, rabi, detuning_bar, k_L=None) -> DriveSpec:
    """DriveSpec from Omega and detuning_bar given in units of Gamma."""
    return DriveSpec(Omega=rabi * atom.Gamma, detuning_bar=detuning_bar * atom.Gamma,
                     k_L=laser_k(atom) if k_L is None else k_L)


# large-detuning operating point of the Yb figures and the standard-detuning comparison
FIG4_DETUNING = -157.0
STANDARD_DETUNING = -0.5
STANDARD_RABI = 0.15
DEFAULT_ALPHA = 1e-3  # Gamma units; alpha cancels from every loss-free ratio


def fig4_drive(rabi_over_detuning=0.1, atom: AtomSpec | None = None) -> DriveSpec:
    atom = atom or yb_556()
    return drive_from_gamma_units(atom, rabi_over_detuning * abs(FIG4_DETUNING), FIG4_DETUNING)


def standard_drive(atom: AtomSpec | None = None) -> DriveSpec:
    atom = atom or yb_556()
    return drive_from_gamma_units(atom, STANDARD_RABI, STANDARD_DETUNING)
