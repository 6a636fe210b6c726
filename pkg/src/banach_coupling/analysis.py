"""Closed-form laws and the statistics used to verify simulations.

All pass/fail helpers return plain dicts with at least the keys
``law``, ``n``, ``statistic``, ``critical_value`` and ``pass`` so they
serialize directly into summary documents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

# 99% two-sided Kolmogorov-Smirnov critical coefficient
KS_COEFF_99 = 1.63

LAW_FIRST_PASSAGE = "first-passage"
LAW_JOIN_MASS = "join-mass"
LAW_TV_AT_TIME = "tv-at-time"


def std_normal_tail(u):
    """Upper tail of the standard normal, P[N(0,1) > u]."""
    return 0.5 * erfc(np.asarray(u, dtype=np.float64) / np.sqrt(2.0))


def join_mass(hnorm):
    """Total overlap mass of a centered Gaussian and its shift by an
    admissible direction of Hilbert norm hnorm: 2 * Phi_bar(hnorm / 2).
    """
    h = np.asarray(hnorm, dtype=np.float64)
    if np.any(h < 0.0):
        raise ValueError("hnorm must be nonnegative")
    out = 2.0 * std_normal_tail(h / 2.0)
    return float(out) if np.ndim(hnorm) == 0 else out


def max_coupling_prob(hnorm, t):
    """Largest possible probability of having coupled by time t.

    Equals 2 * Phi_bar(hnorm / (2 sqrt(t))): one minus the total
    variation distance of the two time-t marginals, and exactly the
    probability the reflection coupling attains.
    """
    h = np.asarray(hnorm, dtype=np.float64)
    tt = np.asarray(t, dtype=np.float64)
    if np.any(h < 0.0):
        raise ValueError("hnorm must be nonnegative")
    if np.any(tt <= 0.0):
        raise ValueError("t must be positive")
    out = 2.0 * std_normal_tail(h / (2.0 * np.sqrt(tt)))
    return float(out) if np.ndim(hnorm) == 0 and np.ndim(t) == 0 else out


def first_passage_cdf(a, t):
    """Distribution function of the first time a rate-1 Brownian motion
    started at a > 0 hits 0: zero at t = 0, else 2 * Phi_bar(a / sqrt(t)).
    """
    if not np.all(np.asarray(a) > 0.0):
        raise ValueError("a must be positive")
    tt = np.asarray(t, dtype=np.float64)
    if np.any(tt < 0.0):
        raise ValueError("t must be nonnegative")
    with np.errstate(divide="ignore"):
        ratio = np.where(tt > 0.0, a / np.sqrt(tt), np.inf)
    out = 2.0 * std_normal_tail(ratio)
    out = np.where(tt > 0.0, out, 0.0)
    return float(out) if np.ndim(t) == 0 and np.ndim(a) == 0 else out


def cameron_martin_log_density(x, theta):
    """Log density of the x-shifted Gaussian against the unshifted one,
    evaluated along samples theta with iid standard normal coefficients:
    sum_k x_k theta_k - 0.5 * sum_k x_k**2.  theta may be a single
    vector or a matrix of row samples.
    """
    x = np.asarray(x, dtype=np.float64)
    th = np.asarray(theta, dtype=np.float64)
    if th.shape[-1] != x.size:
        raise ValueError(f"length mismatch: {x.size} coefficients vs samples {th.shape}")
    out = th @ x - 0.5 * float(np.dot(x, x))
    return float(out) if th.ndim == 1 else out


@dataclass(frozen=True)
class LawSpec:
    """A reference law: a first-passage CDF or a scalar overlap mass."""

    kind: str
    a: float | None = None
    hnorm: float | None = None
    t: float | None = None

    def __post_init__(self):
        if self.kind == LAW_FIRST_PASSAGE:
            if self.a is None or not self.a > 0.0:
                raise ValueError("first-passage law needs a positive level a")
        elif self.kind == LAW_JOIN_MASS:
            if self.hnorm is None or self.hnorm < 0.0:
                raise ValueError("join-mass law needs a nonnegative hnorm")
        elif self.kind == LAW_TV_AT_TIME:
            if self.hnorm is None or self.hnorm < 0.0 or self.t is None or not self.t > 0.0:
                raise ValueError("tv-at-time law needs hnorm >= 0 and t > 0")
        else:
            raise ValueError(f"unknown law kind: {self.kind!r}")

    def label(self) -> str:
        if self.kind == LAW_FIRST_PASSAGE:
            return f"first-passage(a={self.a:g})"
        if self.kind == LAW_JOIN_MASS:
            return f"join-mass(hnorm={self.hnorm:g})"
        return f"tv-at-time(hnorm={self.hnorm:g}, t={self.t:g})"

    def cdf(self, times):
        if self.kind != LAW_FIRST_PASSAGE:
            raise ValueError(f"{self.label()} has no distribution function")
        return first_passage_cdf(self.a, times)

    def value(self) -> float:
        if self.kind == LAW_JOIN_MASS:
            return join_mass(self.hnorm)
        if self.kind == LAW_TV_AT_TIME:
            return 1.0 - max_coupling_prob(self.hnorm, self.t)
        raise ValueError(f"{self.label()} is not a scalar law")


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Sorted draws with a per-draw censoring flag.

    Censored draws carry the horizon value at which observation stopped.
    """

    draws: np.ndarray
    censored: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.draws, dtype=np.float64)
        c = np.asarray(self.censored, dtype=bool)
        if d.shape != c.shape or d.ndim != 1:
            raise ValueError("draws and censoring flags must be equal-length vectors")
        order = np.argsort(d, kind="stable")
        d = d[order]
        c = c[order]
        d.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "draws", d)
        object.__setattr__(self, "censored", c)

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())


def empirical_sample(draws, horizon: float | None = None) -> EmpiricalSample:
    """Build a sample from draws where None marks a censored observation."""
    values = []
    flags = []
    for d in draws:
        if d is None:
            if horizon is None:
                raise ValueError("censored draws need a horizon value")
            values.append(horizon)
            flags.append(True)
        else:
            values.append(float(d))
            flags.append(False)
    return EmpiricalSample(np.asarray(values), np.asarray(flags))


def ks_statistic(sample: EmpiricalSample, law: LawSpec) -> float:
    """Sup distance between the empirical CDF of the uncensored draws
    and the law's CDF, evaluated on both sides of every jump.
    """
    x = sample.draws[~sample.censored]
    n = x.size
    if n == 0:
        raise ValueError("all draws are censored")
    f = law.cdf(x)
    i = np.arange(1, n + 1)
    return float(max((i / n - f).max(), (f - (i - 1) / n).max()))


def ks_report(sample: EmpiricalSample, law: LawSpec, critical: float | None = None) -> dict:
    n = int((~sample.censored).sum())
    stat = ks_statistic(sample, law)
    crit = KS_COEFF_99 / np.sqrt(n) if critical is None else critical
    return {
        "law": law.label(),
        "n": n,
        "n_censored": sample.n_censored,
        "statistic": stat,
        "critical_value": float(crit),
        "pass": bool(stat <= crit),
    }


def ruin_check(lam: float, sup_draws, z: float = 3.0) -> dict:
    """Compare the empirical exceedance P[sup >= lam] of the absorbed
    factor process with the gambler's-ruin value 1 / lam.
    """
    if not lam > 1.0:
        raise ValueError("lambda must exceed the starting level 1")
    draws = np.asarray(sup_draws, dtype=np.float64)
    if draws.size == 0:
        raise ValueError("no sup draws")
    target = 1.0 / lam
    empirical = float((draws >= lam).mean())
    sigma = np.sqrt(target * (1.0 - target) / draws.size)
    return {
        "law": f"ruin(lambda={lam:g})",
        "n": int(draws.size),
        "target": target,
        "empirical": empirical,
        "statistic": abs(empirical - target),
        "critical_value": float(z * sigma),
        "pass": bool(abs(empirical - target) <= z * sigma),
    }


def fraction_check(label: str, successes: int, n: int, target: float, z: float = 3.0) -> dict:
    """Binomial band check of an empirical fraction against a target."""
    empirical = successes / n
    sigma = np.sqrt(target * (1.0 - target) / n)
    return {
        "law": label,
        "n": int(n),
        "target": float(target),
        "empirical": float(empirical),
        "statistic": abs(empirical - target),
        "critical_value": float(z * sigma),
        "pass": bool(abs(empirical - target) <= z * sigma),
    }


def mean_check(label: str, draws, target: float, z: float = 3.0) -> dict:
    """Check a sample mean against a target within z estimated errors."""
    d = np.asarray(draws, dtype=np.float64)
    mean = float(d.mean())
    sigma = float(d.std(ddof=1) / np.sqrt(d.size))
    return {
        "law": label,
        "n": int(d.size),
        "target": float(target),
        "empirical": mean,
        "statistic": abs(mean - target),
        "critical_value": z * sigma,
        "pass": bool(abs(mean - target) <= z * sigma),
    }


def variance_check(label: str, draws, target_var: float, z: float = 3.0) -> dict:
    """Check a sample variance against a target within the z-sigma band
    of the normal-theory variance of the variance estimator."""
    d = np.asarray(draws, dtype=np.float64)
    n = d.size
    s2 = float(d.var(ddof=1))
    half_band = z * target_var * np.sqrt(2.0 / (n - 1))
    return {
        "law": label,
        "n": int(n),
        "target": float(target_var),
        "empirical": s2,
        "statistic": abs(s2 - target_var),
        "critical_value": float(half_band),
        "pass": bool(abs(s2 - target_var) <= half_band),
    }


def median_trajectory_check(label: str, times, medians, d0: float, final_ratio: float) -> dict:
    """Check that checkpoint medians strictly decrease and that the last
    one is at most final_ratio of the initial distance d0."""
    med = np.asarray(medians, dtype=np.float64)
    decreasing = bool(np.all(np.diff(med) < 0.0))
    ratio = float(med[-1] / d0) if d0 > 0.0 else 0.0
    return {
        "law": label,
        "n": int(med.size),
        "times": [float(t) for t in times],
        "medians": [float(v) for v in med],
        "initial_d_w": float(d0),
        "strictly_decreasing": decreasing,
        "statistic": ratio,
        "critical_value": float(final_ratio),
        "pass": bool(decreasing and ratio <= final_ratio),
    }
