"""Loss-modified detailed balance: photon number, effective temperature, regimes.

Frequencies along a sweep are parameterised by the laser-mode offset
x = omega_q - omega_L; the gain side is x < 0. Everything inside the solvers is
in natural units (see :mod:`photontherm.params`).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import rates as _rates
from .errors import DomainError, RootFindingError
from .params import DEFAULT_ALPHA, HBAR, KB, AtomSpec, DriveSpec, ModeSpec, Reduced, doppler_temperature, reduce

DIVERGENT = math.inf
REGIMES = ("GCE", "gain", "quasithermal", "invalid")


# --------------------------------------------------------------------------
# balance condition

def _nbar_from_log_ratio(log_ratio):
    if math.isnan(log_ratio):
        return math.nan
    if log_ratio <= 0:
        return DIVERGENT
    if log_ratio > 700:
        return math.exp(-log_ratio)
    return 1.0 / math.expm1(log_ratio)


def solve_nbar(rates: _rates.RateSet, omega_q=None, omega_L=None):
    """Steady-state mean photon number, or ``DIVERGENT`` (inf) on the gain side.

    n = L+ / (L-_L + L-_B + kappa - L+). When the rate set carries log-domain
    copies they are used, so tiny far-detuned rates keep full precision. The
    frequencies are accepted for interface symmetry and not needed.
    """
    extra = rates.lambda_minus_B + rates.kappa_q
    if math.isfinite(rates.log_lambda_plus_L) and math.isfinite(rates.log_balance_L):
        terms = [rates.log_balance_L]
        if extra > 0:
            terms.append(math.log(extra) - rates.log_lambda_plus_L)
        return _nbar_from_log_ratio(float(np.logaddexp.reduce(terms)))
    if rates.lambda_plus_L == 0.0:
        return 0.0 if rates.total_loss > 0 else math.nan
    den = rates.total_loss - rates.lambda_plus_L
    return rates.lambda_plus_L / den if den > 0 else DIVERGENT


def effective_temperature(nbar, omega_offset, delta_mu=0.0):
    """beta_eff [1/J] from ln((n+1)/n) = beta_eff (hbar (omega_q - omega_L) + delta_mu).

    ``omega_offset`` is omega_q - omega_L [rad/s], ``delta_mu`` in J.
    """
    if not (nbar > 0 and math.isfinite(nbar)):
        raise DomainError(f"effective temperature needs a finite positive nbar, got {nbar!r}")
    den = HBAR * omega_offset + delta_mu
    if den == 0.0:
        raise DomainError("omega_q = omega_L - delta_mu / hbar: use the transition temperature T_o")
    return math.log1p(1.0 / nbar) / den


# --------------------------------------------------------------------------
# chemical potential shift and critical drive

def _family(atom, drive, T=None, *, theta=math.pi / 2, q=None, alpha_q=None, kappa_q=0.0):
    """Reduced parameters at omega_q = omega_L; ``_at(base, x)`` moves the mode."""
    alpha_q = DEFAULT_ALPHA * atom.Gamma if alpha_q is None else alpha_q
    mode = ModeSpec(omega_q=atom.omega_A, q=drive.k_L if q is None else q, theta=theta, alpha_q=alpha_q,
                    kappa_q=kappa_q)
    base = reduce(atom, drive, mode, T if T is not None else doppler_temperature(atom, drive))
    return _at(base, 0.0)


def _at(base: Reduced, x):
    q2 = float(base.qv @ base.qv)
    return replace(base, x=x, Dq=x + base.Dl + (1.0 - q2) / (2 * base.m))


class _LossFunction:
    """g(d) = expm1(-beta d) + C exp(beta p0(d)^2 / 2m) at x = -d (natural units).

    C = (Gamma |dk| + kappa-term) / (Omega^2 sqrt(2 pi beta m)); convex in d.
    """

    def __init__(self, r: Reduced, Omega):
        self.beta, self.m, self.dk = r.beta, r.m, r.dk_norm
        c = self.dk / math.sqrt(2 * math.pi * r.beta * r.m)
        if r.kappa > 0:
            if r.alpha <= 0:
                raise DomainError("a finite cavity loss needs alpha_q > 0")
            c += r.kappa * self.dk * (r.Dq**2 + 0.25) / (math.sqrt(2 * math.pi * r.beta * r.m) * r.alpha**2)
        self.logC = math.log(c) - 2 * math.log(Omega) if c > 0 else -math.inf

    def p0(self, d):
        return self.m * d / self.dk - self.dk / 2

    def h(self, d):
        return self.beta * self.p0(d) ** 2 / (2 * self.m)

    def __call__(self, d):
        return math.expm1(-self.beta * d) + math.exp(min(self.logC + self.h(d), 700.0))

    def slope_sign_fn(self, d):
        """Increasing function whose zero is the minimiser of g."""
        a = self.p0(d) * self.beta / self.dk
        if a <= 0:
            return -math.inf
        return self.logC + math.log(a) + self.h(d) - (math.log(self.beta) - self.beta * d)

    def argmin(self):
        lo = self.dk**2 / (2 * self.m)
        hi = 10 * lo + 10 / self.beta
        for _ in range(60):
            if self.slope_sign_fn(hi) > 0:
                break
            lo, hi = hi, 2 * hi
        else:
            raise RootFindingError("could not bracket the minimum of the loss-modified balance function")
        lo = max(lo, self.dk**2 / (2 * self.m) * (1 + 1e-15))
        return brentq(self.slope_sign_fn, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=500)


@dataclass(frozen=True)
class CriticalResult:
    """Transition-frequency shift and critical drive for one operating point.

    Energies in J, frequencies in rad/s. Without a solution ``delta_mu`` is
    nan and ``min_g`` / ``argmin`` describe the closest approach.
    """

    delta_mu: float
    delta_mu_upper: float
    omega_c: float
    omega_c_interval: float
    has_solution: bool
    min_g: float
    argmin: float


def _roots_of(g: _LossFunction):
    dstar = g.argmin()
    gmin = g(dstar)
    if gmin > 0:
        return math.nan, math.nan, dstar, gmin
    if gmin == 0:
        return dstar, dstar, dstar, gmin
    tol = dict(xtol=1e-300, rtol=1e-12, maxiter=500)
    lower = brentq(g, 0.0, dstar, **tol)
    hi = 2 * dstar + 10 / g.beta
    for _ in range(60):
        if g(hi) > 0:
            break
        hi *= 2
    upper = brentq(g, dstar, hi, **tol)
    return lower, upper, dstar, gmin


def critical_rabi(r: Reduced, rel_tol=1e-8, max_iter=200):
    """Smallest Omega (natural units) for which the balance function has a root; (value, interval)."""

    def min_g(Om):
        g = _LossFunction(r, Om)
        return g(g.argmin())

    scale = max(abs(r.Dl), 1.0)
    lo, hi = 0.0, scale
    while min_g(hi) > 0:
        lo, hi = hi, 2 * hi
        if hi > 1e12 * scale:
            raise RootFindingError("no critical Rabi frequency found")
    if lo == 0.0:
        lo = hi
        while min_g(lo) <= 0:
            lo /= 2
            if lo < 1e-12 * scale:
                raise RootFindingError("balance function has roots at vanishing drive")
    for _ in range(max_iter):
        if hi - lo < rel_tol * scale:
            break
        mid = 0.5 * (lo + hi)
        if min_g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), hi - lo


def delta_mu_and_critical(atom: AtomSpec, drive: DriveSpec, T=None, *, theta=math.pi / 2, q=None,
                          alpha_q=None, kappa_q=0.0) -> CriticalResult:
    """Solve the loss-modified balance condition at the transition frequency.

    ``drive`` fixes the detuning (and the Omega at which delta_mu is reported);
    Omega_c scans the drive family at that detuning. The geometry defaults to
    a mode at right angles to the laser with |q| = k_L. T defaults to the
    Doppler temperature.
    """
    r = _family(atom, drive, T, theta=theta, q=q, alpha_q=alpha_q, kappa_q=kappa_q)
    G = atom.Gamma
    oc, width = critical_rabi(r)
    if r.Omega > 0:
        lo, up, dstar, gmin = _roots_of(_LossFunction(r, r.Omega))
    else:
        lo = up = dstar = gmin = math.nan
    E = HBAR * G
    return CriticalResult(delta_mu=lo * E, delta_mu_upper=up * E, omega_c=oc * G, omega_c_interval=width * G,
                          has_solution=bool(math.isfinite(lo)), min_g=gmin, argmin=dstar * E)


# --------------------------------------------------------------------------
# validity

MARGIN_THRESHOLD = 0.1
MARGIN_NAMES = ("high_T", "small_loss", "chain_35_left", "chain_35_right", "excitation")


def _margins(r: Reduced):
    v_th = math.sqrt(1.0 / (r.beta * r.m))
    dk = r.dk_norm
    lor = r.Dl**2 + 0.25
    Om = r.Omega
    out = {"high_T": r.gamma(0.0) / (v_th * dk), "excitation": Om / math.sqrt(lor)}
    if Om == 0:
        out.update(small_loss=math.inf, chain_35_left=0.0, chain_35_right=math.inf)
        return out
    out["small_loss"] = v_th * dk / Om**2
    # 1 - cos(theta) expressed through |k_L - q| ~ k_L sqrt(2 (1 - cos theta))
    middle = lor * (1.0 / (2 * r.m)) * (dk * dk / 2) / (Om**4 * abs(r.Dl)) if r.Dl != 0 else math.inf
    out["chain_35_left"] = (1.0 / lor**2) / middle
    out["chain_35_right"] = middle
    return out


def validity_margins(atom, drive, mode, T=None):
    """Named ratios that must all be << 1 (below ``MARGIN_THRESHOLD``) for a thermal mode."""
    T = doppler_temperature(atom, drive) if T is None else T
    return _margins(reduce(atom, drive, mode, T))


def margins_ok(margins, threshold=MARGIN_THRESHOLD):
    return all(v < threshold for v in margins.values())


# --------------------------------------------------------------------------
# points and regimes

@dataclass
class EquilibriumPoint:
    """Steady state of one mode at one (Omega, omega_q).

    ``nbar`` is inf on the gain side; temperatures in K, beta_eff in 1/J,
    delta_mu in J (nan below the critical drive).
    """

    omega_offset: float  # omega_q - omega_L [rad/s]
    Omega: float
    nbar: float
    beta_eff: float = math.nan
    delta_mu: float = math.nan
    T_eff: float = math.nan
    T_o: float = math.nan
    omega_c: float = math.nan
    regime: str = "invalid"
    margins: dict = field(default_factory=dict)
    error: str = ""

    @property
    def log_t_ratio(self):
        if self.T_eff > 0 and self.T_o > 0:
            return math.log10(self.T_eff / self.T_o)
        return math.nan


def classify_regime(point: EquilibriumPoint) -> str:
    """gain / GCE / quasithermal; ``invalid`` only for cells that failed to evaluate."""
    if point.error or math.isnan(point.nbar):
        return "invalid"
    if point.nbar == DIVERGENT:
        return "gain"
    if math.isfinite(point.omega_c) and point.Omega < point.omega_c:
        return "quasithermal"
    lr = point.log_t_ratio
    if math.isfinite(lr) and -0.5 <= lr <= 0.0:
        return "GCE"
    return "quasithermal"


class _Row:
    """Balance ratio along x at fixed Omega, with delta_mu and T_o (natural units)."""

    def __init__(self, base: Reduced, Omega, omega_c, doppler_neglected=True, fd_step=1e-4):
        self.r = replace(base, Omega=Omega)
        self.dn = doppler_neglected
        self.omega_c = omega_c
        self.delta_mu = math.nan
        self.beta_o = math.nan
        if Omega > 0 and Omega >= omega_c:
            lo, _, _, _ = _roots_of(_LossFunction(self.r, Omega))
            self.delta_mu = lo
            if math.isfinite(lo):
                xs = -lo
                self.beta_o = (self.log_ratio(xs + fd_step) - self.log_ratio(xs - fd_step)) / (2 * fd_step)

    def log_ratio(self, x):
        return _rates.log_balance_ratio(_at(self.r, x), doppler_neglected=self.dn)

    def beta_eff(self, x, log_ratio):
        d = self.delta_mu if math.isfinite(self.delta_mu) else 0.0
        den = x + d
        if abs(den) < 1e-12:
            return self.beta_o
        return log_ratio / den


def _point(row: _Row, x, scale_f, margins):
    E = HBAR * scale_f
    pt = EquilibriumPoint(omega_offset=x * scale_f, Omega=row.r.Omega * scale_f, nbar=math.nan,
                          omega_c=row.omega_c * scale_f, margins=dict(margins))
    try:
        lr = row.log_ratio(x)
        pt.nbar = _nbar_from_log_ratio(lr)
        if math.isfinite(row.delta_mu):
            pt.delta_mu = row.delta_mu * E
        if math.isfinite(pt.nbar) and pt.nbar > 0:
            b = row.beta_eff(x, lr)
            pt.beta_eff = b / E
            pt.T_eff = E / (KB * b) if b != 0 else math.inf
            if math.isnan(b):
                pt.T_eff = math.nan
            if math.isfinite(row.beta_o) and row.beta_o != 0:
                pt.T_o = E / (KB * row.beta_o)
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        pt.error = f"{type(exc).__name__}: {exc}"
    pt.regime = classify_regime(pt)
    return pt


def equilibrium_point(atom, drive, mode, T=None, doppler_neglected=True) -> EquilibriumPoint:
    """Full analysis of a single operating point."""
    T = doppler_temperature(atom, drive) if T is None else T
    r = reduce(atom, drive, mode, T)
    oc, _ = critical_rabi(r)
    base = _at(r, 0.0)
    row = _Row(base, r.Omega, oc, doppler_neglected)
    return _point(row, r.x, atom.Gamma, _margins(r))


def equilibrium_curve(atom, drive, offsets, T=None, *, theta=math.pi / 2, q=None, alpha_q=None, kappa_q=0.0,
                      doppler_neglected=True):
    """EquilibriumPoints along omega_q - omega_L = ``offsets`` [rad/s] at fixed drive."""
    base = _family(atom, drive, T, theta=theta, q=q, alpha_q=alpha_q, kappa_q=kappa_q)
    oc, _ = critical_rabi(base)
    row = _Row(base, base.Omega, oc, doppler_neglected)
    G = atom.Gamma
    return [_point(row, float(off) / G, G, _margins(_at(base, float(off) / G))) for off in offsets]


# --------------------------------------------------------------------------
# phase diagram

@dataclass
class PhaseDiagram:
    """Cells indexed [i_rabi, j_offset]. Axes: Omega [rad/s], omega_L - omega_q [rad/s]."""

    rabi: np.ndarray
    omega_rel: np.ndarray
    cells: list
    omega_c: float
    metadata: dict = field(default_factory=dict)

    def field(self, name):
        return np.array([[getattr(c, name) for c in row] for row in self.cells])

    def regimes(self):
        return np.array([[c.regime for c in row] for row in self.cells])

    def t_eff_ratio(self):
        out = np.full((len(self.rabi), len(self.omega_rel)), math.nan)
        for i, row in enumerate(self.cells):
            for j, c in enumerate(row):
                if c.T_eff > 0 and c.T_o > 0:
                    out[i, j] = c.T_eff / c.T_o
        return out


def _eval_row(args):
    base, Om, oc, rel, dn, G = args
    try:
        row = _Row(base, Om, oc, dn)
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return [EquilibriumPoint(omega_offset=-y * G, Omega=Om * G, nbar=math.nan, error=msg, omega_c=oc * G)
                for y in rel]
    margins = _margins(row.r)
    return [_point(row, -y, G, margins) for y in rel]


def _strictly_monotone(a):
    a = np.asarray(a, dtype=float)
    d = np.diff(a)
    return a.ndim == 1 and a.size >= 1 and (np.all(d > 0) or np.all(d < 0))


def phase_diagram(atom, drive, rabi_grid, omega_rel_grid, T=None, *, theta=math.pi / 2, q=None, alpha_q=None,
                  kappa_q=0.0, doppler_neglected=True, threads=1) -> PhaseDiagram:
    """Regime map over Omega [rad/s] and omega_L - omega_q [rad/s] at the drive's detuning.

    T defaults to the Doppler temperature of the detuning (independent of
    Omega). Rows are evaluated independently, optionally in worker processes;
    the result does not depend on ``threads``.
    """
    if not (_strictly_monotone(rabi_grid) and _strictly_monotone(omega_rel_grid)):
        raise DomainError("phase-diagram grids must be strictly monotone")
    if np.any(np.asarray(rabi_grid) < 0):
        raise DomainError("Rabi frequencies must be >= 0")
    G = atom.Gamma
    T = doppler_temperature(atom, drive) if T is None else T
    base = _family(atom, drive, T, theta=theta, q=q, alpha_q=alpha_q, kappa_q=kappa_q)
    try:
        oc, _ = critical_rabi(base)
    except RootFindingError:
        oc = math.nan
    rel = [float(y) / G for y in omega_rel_grid]
    tasks = [(base, float(Om) / G, oc, rel, doppler_neglected, G) for Om in rabi_grid]
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_eval_row, tasks))
    else:
        rows = [_eval_row(t) for t in tasks]
    meta = dict(T=T, detuning_bar=drive.detuning_bar, theta=theta, q=float(np.linalg.norm(base.qv)) * drive.k_L,
                alpha_q=alpha_q, kappa_q=kappa_q, doppler_neglected=doppler_neglected)
    return PhaseDiagram(rabi=np.asarray(rabi_grid, dtype=float), omega_rel=np.asarray(omega_rel_grid, dtype=float),
                        cells=rows, omega_c=oc * G, metadata=meta)
