"""Quantum-jump view of system-photon emission and absorption.

A ground-state atom with momentum p evolves under the non-Hermitian effective
Hamiltonian until its next dissipative jump at t_J = -ln(r) / gamma(p). At the
jump the outcome is drawn from the (unnormalised) weights of a laser-bath
reset, system-photon emission, absorption back into the laser, or absorption
followed by bath scattering. The state amplitudes are first-order in the
couplings and carry the dissipative widths of the intermediate levels.

All level frequencies are expressed relative to g0 in the drive frame: the
laser frequency exchanged in a transition is already folded in, so
:func:`amplitude_f` can be called with ``drive_sign = 0`` for every level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .params import Reduced, reduce

LEVELS = ("g0", "g_plus_qL", "g_minus_qL", "e_minus_q")
OUTCOMES = ("bath_reset", "emit_system", "absorb_to_laser", "absorb_to_bath")


@dataclass(frozen=True)
class ComplexLevel:
    """A level with complex frequency z = omega - i gamma / 2."""

    label: str
    omega: float
    gamma: float

    def __post_init__(self):
        if self.label not in LEVELS:
            raise DomainError(f"unknown level {self.label!r}")
        if not self.gamma >= 0:
            raise DomainError("level width must be >= 0")

    @property
    def z(self):
        return self.omega - 0.5j * self.gamma


def _z(level):
    return level.z if isinstance(level, ComplexLevel) else complex(level) if np.isscalar(level) else level


def _phi1(w):
    """(exp(w) - 1) / w, accurate near w = 0."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 1e-3
    ws = np.where(small, 1.0, w)
    out = np.expm1(ws) / ws
    series = 1 + w / 2 * (1 + w / 3 * (1 + w / 4 * (1 + w / 5)))
    return np.where(small, series, out)


def amplitude_f(initial, final, t, drive_sign=0, omega_L=0.0):
    """f(t) = int_0^t e^{-i z_f (t - s)} e^{-i (z_0 + drive_sign omega_L) s} ds.

    ``initial`` and ``final`` are ComplexLevels or complex frequencies. In the
    lab frame the emission level uses ``drive_sign=+1``, the laser-absorption
    level ``-1`` and the excited level ``0``. Degenerate frequencies give
    t exp(-i z t).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("amplitude_f needs t >= 0")
    a = _z(initial) + drive_sign * omega_L
    zf = _z(final)
    w = -1j * (zf - a) * t
    # factor out the slower-decaying exponential so phi1 never overflows
    flip = np.real(w) > 0
    lead = np.where(flip, zf, a)
    return t * np.exp(-1j * lead * t) * _phi1(np.where(flip, -w, w))


def b14_time_integral(initial, final):
    """gamma_0 * int_0^inf |f(t)|^2 dt in closed form.

    (g0 + gf) / (gf [(w0 - wf)^2 + (g0 + gf)^2 / 4]) for drive-frame levels.
    """
    z0, zf = _z(initial), _z(final)
    g0, gf = -2 * z0.imag, -2 * zf.imag
    dw = z0.real - zf.real
    return (g0 + gf) / (gf * (dw * dw + (g0 + gf) ** 2 / 4))


class JumpModel:
    """Levels, couplings and jump weights for one (atom, drive, mode, T) in natural units."""

    def __init__(self, atom, drive, mode, T):
        self.atom = atom
        self.r: Reduced = reduce(atom, drive, mode, T)
        r = self.r
        self.sigma = math.sqrt(r.m / r.beta)
        self.dk = r.dk
        self.omega_A_minus_L = -r.Dl - 1.0 / (2 * r.m)

    # levels -----------------------------------------------------------
    def _ke(self, p):
        return np.einsum("...i,...i->...", p, p) / (2 * self.r.m)

    def level_arrays(self, p):
        """(omega, gamma) of each level for momenta p[..., 3]; dict keyed by label."""
        r = self.r
        p = np.asarray(p, dtype=float)
        pp, pm, pe = p + self.dk, p - self.dk, p + r.qv
        return {
            "g0": (self._ke(p), r.gamma(p[..., 0])),
            "g_plus_qL": (self._ke(pp) + r.x, r.gamma(pp[..., 0])),
            "g_minus_qL": (self._ke(pm) - r.x, r.gamma(pm[..., 0])),
            "e_minus_q": (self._ke(pe) - r.x + self.omega_A_minus_L, np.ones_like(self._ke(pe))),
        }

    def levels(self, p):
        """ComplexLevels for a single natural-unit momentum."""
        return {k: ComplexLevel(k, float(w), float(g)) for k, (w, g) in self.level_arrays(p).items()}

    def R2(self, p):
        r = self.r
        p = np.asarray(p, dtype=float)
        plus = (r.alpha * r.Omega) ** 2 / ((r.Dl - p[..., 0] / r.m) ** 2 + 0.25)
        minus = (r.alpha * r.Omega) ** 2 / ((r.Dq - (p @ r.qv) / r.m) ** 2 + 0.25)
        return plus, minus

    # jumps ------------------------------------------------------------
    def weights(self, p, n_q, t_J, rr):
        """Unnormalised outcome weights, shape (..., 4) in OUTCOMES order."""
        lv = self.level_arrays(p)
        w0, g0 = lv["g0"]
        z0 = w0 - 0.5j * g0
        R2p, R2m = self.R2(p)
        out = np.empty(np.shape(t_J) + (4,))
        out[..., 0] = g0
        for j, (label, coef) in enumerate((("g_plus_qL", R2p * (n_q + 1)), ("g_minus_qL", R2m * n_q)), start=1):
            w, g = lv[label]
            f = amplitude_f(z0, w - 0.5j * g, t_J)
            out[..., j] = g * coef * np.abs(f) ** 2 / rr
        w, g = lv["e_minus_q"]
        f = amplitude_f(z0, w - 0.5j * g, t_J)
        out[..., 3] = self.r.alpha**2 * n_q * np.abs(f) ** 2 / rr
        return out

    def emission_rate_at(self, p, n_q=0):
        """Per-momentum emission rate (natural units): gamma_f |R+|^2 (n+1) times the B14 integral."""
        lv = self.level_arrays(p)
        (w0, g0), (wf, gf) = lv["g0"], lv["g_plus_qL"]
        R2p, _ = self.R2(p)
        s = g0 + gf
        return R2p * (n_q + 1) * s / ((w0 - wf) ** 2 + s * s / 4)

    def absorption_rate_at(self, p, n_q=1):
        lv = self.level_arrays(p)
        (w0, g0), (wf, gf) = lv["g0"], lv["g_minus_qL"]
        _, R2m = self.R2(p)
        s = g0 + gf
        return R2m * n_q * s / ((w0 - wf) ** 2 + s * s / 4)

    # momentum averages ---------------------------------------------------
    def _basis(self):
        r = self.r
        nhat = r.nhat()
        perp = r.kL - (r.kL @ nhat) * nhat
        if np.linalg.norm(perp) < 1e-12:
            perp = np.array([0.0, 1.0, 0.0]) - nhat[1] * nhat
        return nhat, perp / np.linalg.norm(perp)

    def _s_nodes(self, center, half_width, n_gl=20, span=12.0):
        """Composite Gauss-Legendre nodes graded geometrically away from ``center``."""
        sig = self.sigma
        lo = min(-span * sig, center - 50 * half_width)
        hi = max(span * sig, center + 50 * half_width)
        h0 = max(half_width / 4, 1e-9 * sig)
        cap = sig / 4
        edges = [center]
        e, h = center, h0
        while e < hi:
            e = min(e + h, hi)
            edges.append(e)
            h = min(2 * h, cap)
        right = edges
        edges = [center]
        e, h = center, h0
        while e > lo:
            e = max(e - h, lo)
            edges.append(e)
            h = min(2 * h, cap)
        edges = np.array(sorted(set(edges[1:] + right)))
        x, w = np.polynomial.legendre.leggauss(n_gl)
        a, b = edges[:-1, None], edges[1:, None]
        nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
        weights = 0.5 * (b - a) * w
        return nodes.ravel(), weights.ravel()

    def _average(self, fn, center, n_perp=80, n_gl=20):
        """Boltzmann average of fn(p) where fn depends on p only through span{n, k_L}."""
        nhat, eperp = self._basis()
        sig = self.sigma
        y, wy = np.polynomial.hermite.hermgauss(n_perp)
        t = math.sqrt(2) * sig * y
        wt = wy / math.sqrt(math.pi)
        lv = self.level_arrays(center * nhat + t[:, None] * eperp)
        which = "g_minus_qL" if fn == "absorption" else "g_plus_qL"
        hw = float(np.min(lv["g0"][1] + lv[which][1])) / 2 * self.r.m / self.r.dk_norm
        s, ws = self._s_nodes(center, hw, n_gl)
        P = s[:, None, None] * nhat + t[None, :, None] * eperp
        if fn == "emission":
            vals = self.emission_rate_at(P)
        elif fn == "absorption":
            vals = self.absorption_rate_at(P)
        else:
            vals = fn(P)
        dens = np.exp(-s * s / (2 * sig * sig)) / (math.sqrt(2 * math.pi) * sig)
        return float((ws * dens) @ vals @ wt)

    def averaged(self, process, rtol=1e-6):
        """Converged Boltzmann average of the per-momentum emission/absorption rate."""
        r = self.r
        c = r.dk_norm**2 / (2 * r.m)
        center = r.m * (-r.x - c) / r.dk_norm if process == "emission" else r.m * (-r.x + c) / r.dk_norm
        a = self._average(process, center, 80, 20)
        b = self._average(process, center, 160, 30)
        if abs(a - b) > rtol * abs(b) + 1e-300:
            b = self._average(process, center, 320, 40)
        return b


# --------------------------------------------------------------------------
# public SI wrappers

@dataclass(frozen=True)
class OutcomeDistribution:
    probabilities: np.ndarray  # (..., 4) in OUTCOMES order
    correction: np.ndarray  # (sum of weights - P0) / P0

    def as_dict(self):
        return {k: self.probabilities[..., i] for i, k in enumerate(OUTCOMES)}


def jump_outcome_probabilities(model: JumpModel, p, n_q, t_J, r) -> OutcomeDistribution:
    """Normalised jump-outcome distribution for SI momentum p [kg m/s] and jump time t_J [s]."""
    r = np.asarray(r, dtype=float)
    if np.any((r <= 0) | (r > 1)):
        raise DomainError("r must lie in (0, 1]")
    u = model.r.scale.momentum_unit
    w = model.weights(np.asarray(p, dtype=float) / u, n_q, np.asarray(t_J, dtype=float) * model.atom.Gamma, r)
    total = w.sum(axis=-1)
    return OutcomeDistribution(w / total[..., None], (total - w[..., 0]) / w[..., 0])


def averaged_emission_rate(atom, drive, mode, T, p=None, n_q=0):
    """System-photon emission rate [1/s] of an atom with momentum p, or Boltzmann-averaged when p is None."""
    model = JumpModel(atom, drive, mode, T)
    if p is None:
        return model.averaged("emission") * (n_q + 1) * atom.Gamma
    pn = np.asarray(p, dtype=float) / model.r.scale.momentum_unit
    return float(model.emission_rate_at(pn, n_q)) * atom.Gamma


def averaged_absorption_rate(atom, drive, mode, T, p=None, n_q=1):
    """Laser-mediated absorption rate [1/s], per momentum or Boltzmann-averaged."""
    model = JumpModel(atom, drive, mode, T)
    if p is None:
        return model.averaged("absorption") * n_q * atom.Gamma
    pn = np.asarray(p, dtype=float) / model.r.scale.momentum_unit
    return float(model.absorption_rate_at(pn, n_q)) * atom.Gamma


def renewal_emission_rate(atom, drive, mode, T, n_q=0):
    """Long-run emission rate [1/s] of a trajectory that redraws p from Boltzmann after every jump.

    Each cycle lasts 1/gamma(p) on average and emits with probability
    Gamma+(p)/gamma(p), so the rate is E[Gamma+/gamma] / E[1/gamma].
    """
    m = JumpModel(atom, drive, mode, T)
    r = m.r
    c = r.dk_norm**2 / (2 * r.m)
    center = r.m * (-r.x - c) / r.dk_norm
    num = m._average(lambda P: m.emission_rate_at(P, n_q) / r.gamma(P[..., 0]), center, 160, 30)
    den = m._average(lambda P: 1.0 / r.gamma(P[..., 0]), center, 160, 30)
    return num / den * atom.Gamma


# --------------------------------------------------------------------------
# trajectories

@dataclass
class TrajectoryRecord:
    """Jump log of one trajectory. Times in s, momenta in kg m/s."""

    seed: int
    index: int
    n_q: int
    duration: float
    fixed_momentum: bool
    initial_p: np.ndarray
    jump_times: np.ndarray
    outcomes: np.ndarray  # int codes into OUTCOMES
    counts: dict = field(default_factory=dict)
    mean_correction: float = math.nan

    @property
    def n_jumps(self):
        return int(self.outcomes.size)

    def rate(self, outcome="emit_system"):
        """Ratio estimate (rate, standard error) [1/s] of one outcome over the completed cycles."""
        k = OUTCOMES.index(outcome)
        n = self.outcomes.size
        if n < 2:
            return math.nan, math.nan
        tau = np.diff(np.concatenate(([0.0], self.jump_times)))
        x = (self.outcomes == k).astype(float)
        R = x.sum() / tau.sum()
        resid = x - R * tau
        se = math.sqrt(resid.var(ddof=1) / n) / tau.mean()
        return float(R), float(se)

    def to_dict(self, include_events=False):
        d = dict(seed=self.seed, index=self.index, n_q=self.n_q, duration=self.duration,
                 fixed_momentum=self.fixed_momentum, initial_p=[float(v) for v in self.initial_p],
                 n_jumps=self.n_jumps, counts=dict(self.counts), mean_correction=self.mean_correction)
        if include_events:
            d["jump_times"] = self.jump_times.tolist()
            d["outcomes"] = [OUTCOMES[i] for i in self.outcomes]
        return d


def trajectory_rng(seed, index=0):
    """Independent, order-free stream for trajectory ``index`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def sample_trajectory(atom, drive, mode, T, n_q, duration, seed, *, p=None, index=0, max_jumps=None,
                      chunk=1 << 17) -> TrajectoryRecord:
    """Run jump cycles until ``duration`` [s] (or ``max_jumps``).

    Each cycle draws the atomic momentum from the Boltzmann distribution (or
    keeps the given ``p`` [kg m/s]), a uniform r, the jump time
    -ln(r)/gamma(p), and the outcome from :func:`jump_outcome_probabilities`.
    """
    if not duration > 0:
        raise DomainError("duration must be > 0")
    model = JumpModel(atom, drive, mode, T)
    rng = trajectory_rng(seed, index)
    G = atom.Gamma
    u = model.r.scale.momentum_unit
    horizon = duration * G
    cap = math.inf if max_jumps is None else int(max_jumps)
    fixed = p is not None
    pfix = None if p is None else np.asarray(p, dtype=float) / u
    times, codes, corr = [], [], []
    t0, n_done = 0.0, 0
    first_p = pfix
    while n_done < cap:
        n = int(min(chunk, cap - n_done))
        P = np.broadcast_to(pfix, (n, 3)) if fixed else rng.normal(0.0, model.sigma, size=(n, 3))
        if first_p is None:
            first_p = P[0].copy()
        rr = rng.random(n)
        rr[rr == 0.0] = np.finfo(float).tiny
        uu = rng.random(n)
        g0 = model.r.gamma(P[:, 0])
        with np.errstate(divide="ignore"):
            tJ = -np.log(rr) / g0
        if not np.all(np.isfinite(tJ)):
            break  # no dissipation, no jumps
        w = model.weights(P, n_q, tJ, rr)
        total = w.sum(axis=1)
        cum = np.cumsum(w, axis=1) / total[:, None]
        code = (uu[:, None] >= cum[:, :-1]).sum(axis=1).astype(np.int8)
        tt = t0 + np.cumsum(tJ)
        keep = tt <= horizon
        m = int(keep.sum())
        times.append(tt[:m])
        codes.append(code[:m])
        corr.append((total[:m] - w[:m, 0]) / w[:m, 0])
        n_done += m
        if m < n:
            break
        t0 = tt[-1]
    jt = np.concatenate(times) / G if times else np.zeros(0)
    oc = np.concatenate(codes) if codes else np.zeros(0, dtype=np.int8)
    cc = np.concatenate(corr) if corr else np.zeros(0)
    counts = {k: int((oc == i).sum()) for i, k in enumerate(OUTCOMES)}
    ip = np.zeros(3) if first_p is None else np.asarray(first_p) * u
    return TrajectoryRecord(seed=int(seed), index=int(index), n_q=int(n_q), duration=float(duration),
                            fixed_momentum=fixed, initial_p=ip, jump_times=jt, outcomes=oc, counts=counts,
                            mean_correction=float(cc.mean()) if cc.size else math.nan)
