"""Evaluators comparing observed statistics with the closed-form bounds.

Each evaluator returns :class:`BoundReport` objects.  Probabilistic bounds
are judged against a 95% Wilson interval on the empirical frequency:
a "probability at least b" bound holds when b is below the interval's upper
limit, a "probability at most b" bound when b is above its lower limit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import binom, binomtest

from .errors import InsufficientTrials, InvalidCap, InvalidGamma
from .solvers import ConflictGraph
from .stochastic import SeedSpec

MIN_TRIALS = 100
EXACT_TAIL_MAX_R = 10_000


@dataclass
class BoundReport:
    """Observed statistic ``lhs`` against bound ``rhs``.

    ``kind`` is ``"upper"`` (holds iff lhs <= rhs), ``"lower"`` (lhs >= rhs)
    or ``"interval"`` (rhs <= lhs <= params["upper"]).  For frequency
    comparisons ``holds`` is decided on the Wilson interval, stored in
    ``interval``.
    """

    bound_id: str
    lhs: float
    rhs: float
    holds: bool
    kind: str = "upper"
    params: dict = field(default_factory=dict)
    skipped: bool = False
    reason: str = ""
    deterministic: bool = False
    interval: Optional[tuple[float, float]] = None

    @property
    def violated(self) -> bool:
        return not self.skipped and not self.holds

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interval"] = list(self.interval) if self.interval is not None else None
        return d


def _compare(bound_id, lhs, rhs, kind="upper", **kw) -> BoundReport:
    holds = lhs <= rhs if kind == "upper" else lhs >= rhs
    return BoundReport(bound_id, float(lhs), float(rhs), bool(holds), kind, **kw)


def skipped_report(bound_id: str, reason: str, params: Optional[dict] = None) -> BoundReport:
    return BoundReport(bound_id, math.nan, math.nan, True, params=params or {},
                       skipped=True, reason=reason)


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    ci = binomtest(int(successes), int(trials)).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _frequency_report(bound_id, successes, trials, bound, kind, params) -> BoundReport:
    """kind="lower": P(event) >= bound; kind="upper": P(event) <= bound."""
    lo, hi = wilson_interval(successes, trials)
    freq = successes / trials
    holds = bound <= hi if kind == "lower" else lo <= bound
    return BoundReport(bound_id, freq, float(bound), bool(holds), kind,
                       params=dict(params, trials=trials), interval=(lo, hi))


def variance_slack(trials: int, slack_sigma: float) -> float:
    """Relative tolerance ``slack_sigma * sqrt(2/(T-1))`` for a sample variance."""
    return slack_sigma * math.sqrt(2.0 / (trials - 1))


# ---------------------------------------------------------- maximum size


def bound_theorem21_size(
    samples: Sequence[float], n: int, L: int, p_av: float, slack_sigma: float = 3.0
) -> tuple[BoundReport, BoundReport, BoundReport]:
    """Interval coverage of U_n and its variance against 2 and 4 times the mean."""
    u = np.asarray(samples, dtype=float)
    T = len(u)
    if T < MIN_TRIALS:
        raise InsufficientTrials(f"need at least {MIN_TRIALS} trials, got {T}")
    if L < 1:
        raise InvalidCap("interval bound needs L >= 1")
    lower = n * p_av / (28 * L)
    upper = 9 * n * p_av * L / 2
    prob = 1 - 2 * math.exp(-n * p_av * L / 16)
    params = dict(n=n, L=L, p_av=p_av, lower=lower, upper=upper)
    inside = int(np.sum((u >= lower) & (u <= upper)))
    coverage = _frequency_report("theorem21.interval", inside, T, prob, "lower", params)

    mean = float(u.mean())
    var = float(u.var(ddof=1))
    rel = variance_slack(T, slack_sigma)
    var_reports = []
    for factor in (2, 4):
        var_reports.append(_compare(
            f"theorem21.var{factor}", var, factor * mean * (1 + rel), "upper",
            params=dict(params, mean=mean, factor=factor, slack_sigma=slack_sigma,
                        unslacked=factor * mean, trials=T),
        ))
    return coverage, var_reports[0], var_reports[1]


def stable_set_lower_bound(Q: int, m: int) -> float:
    return Q * Q / (2 * (2 * m + Q)) if Q else 0.0


def bound_stable_set(cg: ConflictGraph, observed_size: float) -> BoundReport:
    """Q^2 / (2(2m+Q)) <= U_n <= Q."""
    Q, m = cg.Q, cg.m
    lo = stable_set_lower_bound(Q, m)
    holds = lo <= observed_size <= Q
    return BoundReport("stable_set", float(observed_size), lo, bool(holds), "interval",
                       params=dict(Q=Q, m=m, upper=Q), deterministic=True)


def bound_degree_cap(cg: ConflictGraph, L: int) -> BoundReport:
    """m <= 3 Q L^2."""
    return _compare("degree_cap", cg.m, 3 * cg.Q * L * L, "upper",
                    params=dict(Q=cg.Q, L=L), deterministic=True)


# --------------------------------------------------- Bernoulli deviation


def exact_deviation_probability(r: int, p: float, gamma: float) -> float:
    """P(|T_r - r p| >= gamma r p) for T_r ~ Binomial(r, p), summed exactly."""
    theta = r * p
    k = np.arange(r + 1)
    # boundary terms are included even under rounding, which only makes the
    # comparison stricter
    tail = np.abs(k - theta) >= theta * gamma - 1e-9
    return float(binom.pmf(k[tail], r, p).sum())


def bound_chernoff(
    r: int, p: float, gamma: float, trials: int = 0, seed: Optional[SeedSpec] = None
) -> BoundReport:
    """Deviation probability of a Binomial(r, p) sum vs 2 exp(-gamma^2 theta / 4).

    Exact for r <= 10^4; otherwise Monte Carlo with ``trials`` draws.
    """
    if not 0 < gamma <= 0.5:
        raise InvalidGamma(f"gamma={gamma} outside (0, 1/2]")
    theta = r * p
    bound = 2 * math.exp(-gamma * gamma * theta / 4)
    params = dict(r=r, p=p, gamma=gamma, theta=theta)
    if r <= EXACT_TAIL_MAX_R:
        tail = exact_deviation_probability(r, p, gamma)
        return _compare("chernoff", tail, bound, "upper",
                        params=dict(params, method="exact"), deterministic=True)
    if trials < 1 or seed is None:
        raise InsufficientTrials("Monte Carlo deviation check needs trials and a seed")
    draws = seed.rng().binomial(r, p, size=trials)
    hits = int(np.sum(np.abs(draws - theta) >= theta * gamma))
    return _frequency_report("chernoff", hits, trials, bound, "upper",
                             dict(params, method="monte_carlo"))


# ------------------------------------------------------- minimum weight


@dataclass(frozen=True)
class Theorem31Fit:
    """Constants fitted over an n-grid."""

    alpha1: float
    beta1: float
    D: float
    gamma: float
    max_ratio: dict  # n -> max M_n / (tau t_n)
    min_ratio: dict  # n -> min M_n / (tau s_n)
    gamma_n: dict  # n -> var(M_n) / c_n
    c_n: dict


def _c_n(n, tau, s_n, t_n, D):
    return min(n, D * tau * t_n / s_n)


def fit_theorem31(points: dict) -> Theorem31Fit:
    """Fit alpha1, beta1, D and gamma from ``{n: (samples, tau, s_n, t_n)}``.

    alpha1 is the largest observed M_n/(tau t_n), beta1 the smallest observed
    M_n/(tau s_n), D = max(1, 2 alpha1/beta1), and gamma the largest
    var(M_n)/c_n.  Points with infinite t_n are left out.
    """
    max_ratio, min_ratio = {}, {}
    for n, (samples, tau, s_n, t_n) in points.items():
        if not math.isfinite(t_n):
            continue
        m = np.asarray(samples, dtype=float)
        max_ratio[n] = float(m.max() / (tau * t_n))
        min_ratio[n] = float(m.min() / (tau * s_n))
    if not max_ratio:
        return Theorem31Fit(math.nan, math.nan, math.nan, math.nan, {}, {}, {}, {})
    alpha1 = max(max_ratio.values())
    beta1 = min(min_ratio.values())
    D = max(1.0, 2 * alpha1 / beta1) if beta1 > 0 else math.inf
    gamma_n, c_n = {}, {}
    for n, (samples, tau, s_n, t_n) in points.items():
        if n not in max_ratio:
            continue
        c_n[n] = _c_n(n, tau, s_n, t_n, D)
        gamma_n[n] = float(np.var(samples, ddof=1) / c_n[n])
    return Theorem31Fit(alpha1, beta1, D, max(gamma_n.values()), max_ratio, min_ratio,
                        gamma_n, c_n)


def bound_theorem31(
    samples: Sequence[float], n: int, tau: int, s_n: float, t_n: float, fit: Theorem31Fit
) -> list[BoundReport]:
    """Per-n checks of the upper/lower weight scales and the variance bound."""
    params = dict(n=n, tau=tau, s_n=s_n, t_n=t_n)
    if not math.isfinite(t_n):
        return [skipped_report(b, "t_n is infinite", params)
                for b in ("theorem31.upper", "theorem31.lower", "theorem31.variance")]
    m = np.asarray(samples, dtype=float)
    T = len(m)
    up_thr = fit.alpha1 * tau * t_n
    low_thr = fit.beta1 * tau * s_n
    c_n = _c_n(n, tau, s_n, t_n, fit.D)
    fitted = dict(alpha1=fit.alpha1, beta1=fit.beta1, D=fit.D, gamma=fit.gamma, c_n=c_n)
    return [
        _frequency_report("theorem31.upper", int(np.sum(m <= up_thr)), T, 1.0 - 1e-12,
                          "lower", dict(params, **fitted, threshold=up_thr)),
        _frequency_report("theorem31.lower", int(np.sum(m >= low_thr)), T, 1.0 - 1e-12,
                          "lower", dict(params, **fitted, threshold=low_thr)),
        _compare("theorem31.variance", float(np.var(m, ddof=1)), fit.gamma * c_n, "upper",
                 params=dict(params, **fitted, trials=T)),
    ]


def bound_ratio_stability(bound_id: str, values: dict, factor: float = 2.0) -> BoundReport:
    """Spread max/min of a per-n fitted constant against ``factor``."""
    v = np.array(list(values.values()), dtype=float)
    spread = float(v.max() / v.min()) if v.size and v.min() > 0 else math.inf
    return _compare(bound_id, spread, factor, "upper",
                    params={str(k): float(x) for k, x in values.items()})


# ------------------------------------------------- unconstrained Bernoulli


def bound_appendix_rn(
    samples: Sequence[float], n: int, p: float, slack_sigma: float = 3.0
) -> tuple[BoundReport, BoundReport]:
    """P(R_n >= 4en sqrt p) <= 2^(-4en sqrt p) and E R_n <= 16 e n sqrt p."""
    r = np.asarray(samples, dtype=float)
    T = len(r)
    if T < 1:
        raise InsufficientTrials("no samples")
    thr = 4 * math.e * n * math.sqrt(p)
    params = dict(n=n, p=p, threshold=thr)
    tail = _frequency_report("appendix.tail", int(np.sum(r >= thr)), T, 2.0 ** (-thr),
                             "upper", params)
    se = float(r.std(ddof=1) / math.sqrt(T)) if T > 1 else 0.0
    mean = _compare("appendix.mean", float(r.mean()), 16 * math.e * n * math.sqrt(p), "upper",
                    params=dict(params, se=se, trials=T))
    if mean.lhs - slack_sigma * se <= mean.rhs:
        mean.holds = True
    return tail, mean


# ------------------------------------------------------------ serialization

CSV_FIELDS = ("bound_id", "lhs", "rhs", "holds", "skipped", "params_json")


def write_reports_jsonl(reports: Iterable[BoundReport], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def write_reports_csv(reports: Iterable[BoundReport], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in reports:
            w.writerow([r.bound_id, repr(r.lhs), repr(r.rhs), int(r.holds), int(r.skipped),
                        json.dumps(r.params, sort_keys=True)])
