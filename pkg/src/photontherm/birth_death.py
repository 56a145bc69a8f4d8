"""Exact simulation of the photon-number birth-death chain.

Up-rate (n+1) lambda_plus, down-rate n lambda_minus. For lambda_minus >
lambda_plus the stationary law is geometric, P(n) ~ (lambda_plus/lambda_minus)^n.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError

N_BATCHES = 100


@dataclass
class CountsRecord:
    """Dwell-time-weighted photon-number statistics of one run. Times in s."""

    seed: int
    lambda_plus: float
    lambda_minus: float
    n0: int
    events: int
    total_time: float
    n_max: int
    histogram: np.ndarray  # time spent at n = 0..n_max
    overflow_time: float  # time spent above n_max
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    transient_gain: bool

    @property
    def probabilities(self):
        return self.histogram / self.total_time

    def analytic_mean(self):
        if self.transient_gain:
            return math.inf
        return self.lambda_plus / (self.lambda_minus - self.lambda_plus)

    def to_dict(self):
        d = asdict(self)
        d["histogram"] = self.histogram.tolist()
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _batch_se(values, weights, nb):
    """Standard error of the weighted mean from contiguous event batches."""
    n = values.size
    if n < 2 * nb:
        nb = max(n // 2, 1)
    if nb < 2:
        return math.nan
    edges = np.linspace(0, n, nb + 1).astype(int)
    num = np.add.reduceat(values * weights, edges[:-1])
    den = np.add.reduceat(weights, edges[:-1])
    means = num / den
    return float(np.std(means, ddof=1) / math.sqrt(nb))


def simulate_photon_number(lambda_plus, lambda_minus, duration, seed, n0=0, max_events=None,
                           chunk=1 << 16) -> CountsRecord:
    """Gillespie simulation until ``duration`` [s] or ``max_events`` transitions.

    Runs also when lambda_minus <= lambda_plus; the record is then flagged as
    transient gain and the histogram cap is set from the run itself.
    """
    if lambda_plus < 0 or lambda_minus < 0:
        raise DomainError("rates must be >= 0")
    if not duration > 0:
        raise DomainError("duration must be > 0")
    if n0 < 0:
        raise DomainError("n0 must be >= 0")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    gain = not lambda_minus > lambda_plus
    cap = math.inf if max_events is None else int(max_events)

    ns, dwell = [], []
    n, t, k = int(n0), 0.0, 0
    lp, lm = float(lambda_plus), float(lambda_minus)
    while k < cap and t < duration:
        e = rng.standard_exponential(chunk)
        u = rng.random(chunk)
        for i in range(chunk):
            up = (n + 1) * lp
            total = up + n * lm
            if total == 0.0:
                tau = duration - t
            else:
                tau = e[i] / total
            if t + tau >= duration:
                tau = duration - t
                ns.append(n)
                dwell.append(tau)
                t = duration
                break
            ns.append(n)
            dwell.append(tau)
            t += tau
            k += 1
            n = n + 1 if u[i] * total < up else n - 1
            if k >= cap:
                break
    ns = np.asarray(ns, dtype=np.int64)
    dwell = np.asarray(dwell)
    if gain:
        n_max = int(ns.max()) if ns.size else int(n0)
    else:
        n_max = int(math.ceil(50 * (lp / (lm - lp) + 1)))
    inside = ns <= n_max
    hist = np.bincount(ns[inside], weights=dwell[inside], minlength=n_max + 1)
    total_time = float(dwell.sum())
    x = ns.astype(float)
    mean = float((x * dwell).sum() / total_time)
    var = float(((x - mean) ** 2 * dwell).sum() / total_time)
    return CountsRecord(seed=int(seed), lambda_plus=lp, lambda_minus=lm, n0=int(n0), events=k,
                        total_time=total_time, n_max=n_max, histogram=hist,
                        overflow_time=float(dwell[~inside].sum()), mean=mean,
                        mean_se=_batch_se(x, dwell, N_BATCHES), variance=var,
                        variance_se=_batch_se((x - mean) ** 2, dwell, N_BATCHES), transient_gain=gain)
