"""Monte Carlo engine and the studies built on it.

Trials are pure functions of a :class:`SeedSpec`; :func:`run_trials` maps
them over a thread pool and aggregates in trial-index order, so every table
is identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import (
    BoundReport,
    _compare,
    bound_appendix_rn,
    bound_chernoff,
    bound_degree_cap,
    bound_ratio_stability,
    bound_stable_set,
    bound_theorem21_size,
    bound_theorem31,
    fit_theorem31,
)
from .errors import NoTrials, PlanarMatchError, TooFewPoints
from .solvers import (
    build_conflict_graph,
    good_segment_edges,
    greedy_stable_set,
    max_size_planar,
    min_weight_profile,
)
from .stochastic import (
    EdgeProbabilityModel,
    SeedSpec,
    WeightDistribution,
    average_edge_probability,
    quantile_s,
    quantile_t,
    sample_states,
)

DEFAULT_SLACK = 3.0


def default_threads() -> int:
    env = os.environ.get("PLANARMATCH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def tau_for(rho: float, n: int) -> int:
    """ceil(rho n), guarding against rho*n landing just above an integer."""
    return max(0, math.ceil(rho * n - 1e-9))


# ------------------------------------------------------------------ engine


@dataclass(frozen=True)
class TrialSummary:
    trial_index: int
    seed: int
    values: dict


@dataclass(frozen=True)
class StatSummary:
    count: int
    mean: float
    variance: float  # unbiased; 0 for a single trial

    @property
    def se(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else math.nan


@dataclass
class TrialRun:
    trials: list[TrialSummary]
    summary: dict[str, StatSummary] = field(default_factory=dict)

    def values(self, key: str) -> np.ndarray:
        return np.array([t.values[key] for t in self.trials], dtype=float)

    def frequency(self, key: str, predicate: Callable[[float], bool]) -> float:
        v = self.values(key)
        return float(np.mean([predicate(x) for x in v]))


def summarize(trials: Sequence[TrialSummary]) -> dict[str, StatSummary]:
    out = {}
    if not trials:
        return out
    for key in trials[0].values:
        v = np.array([t.values[key] for t in trials], dtype=float)
        var = float(v.var(ddof=1)) if len(v) > 1 else 0.0
        out[key] = StatSummary(len(v), float(v.mean()), var)
    return out


def run_trials(
    trial_fn: Callable[[SeedSpec], dict],
    master_seed: int,
    trials: int,
    threads: Optional[int] = None,
    stream: int = 0,
) -> TrialRun:
    if trials < 1:
        raise NoTrials("trials must be at least 1")
    seeds = [SeedSpec(master_seed, t, stream) for t in range(trials)]
    threads = threads or 1
    if threads == 1:
        results = [trial_fn(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(trial_fn, seeds))
    summaries = [TrialSummary(s.trial_index, s.seed, r) for s, r in zip(seeds, results)]
    return TrialRun(summaries, summarize(summaries))


# ------------------------------------------------------------- trial kinds


@dataclass(frozen=True)
class MaxSizeTrial:
    """U_n(L) on a sampled state pattern, optionally with the conflict graph
    quantities (Q, m, greedy stable set) and their deterministic checks."""

    model: EdgeProbabilityModel
    L: int
    conflict_graph: bool = False

    def __call__(self, seed: SeedSpec) -> dict:
        inst = sample_states(self.model, seed)
        out = {"U": max_size_planar(inst, self.L).size}
        if self.conflict_graph:
            cg = build_conflict_graph(inst, self.L)
            greedy = greedy_stable_set(cg).size()
            out.update(
                Q=cg.Q,
                m=cg.m,
                greedy=greedy,
                stable_set_ok=int(bound_stable_set(cg, out["U"]).holds
                                  and bound_stable_set(cg, greedy).holds
                                  and greedy <= out["U"]),
                degree_cap_ok=int(bound_degree_cap(cg, self.L).holds),
            )
        return out


@dataclass(frozen=True)
class MinWeightTrial:
    """M_n(tau) for several tau from one DP profile of a sampled instance.

    ``segment_taus`` maps tau to a goodness threshold; the trial then also
    records the number X of good segments.
    """

    dist: WeightDistribution
    n: int
    taus: tuple[int, ...]
    segment_thresholds: tuple[tuple[int, float], ...] = ()

    def __call__(self, seed: SeedSpec) -> dict:
        from .core import BipartiteInstance

        w = self.dist.sample(seed.rng(), (self.n, self.n))
        profile = min_weight_profile(w)
        suffix_min = np.minimum.accumulate(profile[::-1])[::-1]
        out = {f"M[{t}]": float(suffix_min[t]) for t in self.taus}
        if self.segment_thresholds:
            inst = BipartiteInstance(self.n, weights=w)
            for tau, thr in self.segment_thresholds:
                out[f"X[{tau}]"] = len(good_segment_edges(inst, tau, thr))
        return out


@dataclass(frozen=True)
class MinEdgeTrial:
    dist: WeightDistribution
    r: int

    def __call__(self, seed: SeedSpec) -> dict:
        return {"min": float(self.dist.sample(seed.rng(), (self.r, self.r)).min())}


# -------------------------------------------------------------- theta(rho)


@dataclass
class ThetaEstimate:
    rho: float
    n_grid: list[int]
    taus: list[int]
    means: list[float]  # mean of M_n(tau)/n per n
    ses: list[float]
    variances: list[float]  # sample variance of M_n(tau)/n per n
    trend_violations: list[int] = field(default_factory=list)

    @property
    def theta_hat(self) -> float:
        return self.means[-1]

    @property
    def se(self) -> float:
        return self.ses[-1]


def estimate_theta_grid(
    rhos: Sequence[float],
    n_grid: Sequence[int],
    trials: int,
    dist: WeightDistribution,
    master_seed: int,
    threads: Optional[int] = None,
    slack_sigma: float = DEFAULT_SLACK,
) -> list[ThetaEstimate]:
    """theta-hat for every rho from shared instances (one DP per trial).

    Sharing instances across rho makes the estimates monotone in rho by
    construction, since M_n(tau) is non-decreasing in tau on each instance.
    """
    n_grid = sorted(n_grid)
    per_n = {}
    for n in n_grid:
        taus = tuple(sorted({tau_for(r, n) for r in rhos} - {0}))
        per_n[n] = run_trials(MinWeightTrial(dist, n, taus), master_seed, trials, threads,
                              stream=n)
    out = []
    for rho in rhos:
        taus, means, ses, variances = [], [], [], []
        for n in n_grid:
            tau = tau_for(rho, n)
            v = per_n[n].values(f"M[{tau}]") / n if tau else np.zeros(trials)
            taus.append(tau)
            means.append(float(v.mean()))
            variances.append(float(v.var(ddof=1)) if trials > 1 else 0.0)
            ses.append(math.sqrt(variances[-1] / trials))
        est = ThetaEstimate(rho, list(n_grid), taus, means, ses, variances)
        # E M_n / n should not grow with n (sub-additivity)
        for k in range(len(n_grid) - 1):
            gap = means[k + 1] - means[k]
            if gap > slack_sigma * math.hypot(ses[k], ses[k + 1]):
                est.trend_violations.append(n_grid[k + 1])
        out.append(est)
    return out


def estimate_theta(
    rho: float,
    n_grid: Sequence[int],
    trials: int,
    dist: WeightDistribution,
    master_seed: int,
    threads: Optional[int] = None,
) -> ThetaEstimate:
    if not 0 < rho <= 1:
        raise PlanarMatchError(f"rho={rho} outside (0, 1]")
    return estimate_theta_grid([rho], n_grid, trials, dist, master_seed, threads)[0]


def check_theta_shape(
    estimates: Sequence[ThetaEstimate], mu: float, slack_sigma: float = DEFAULT_SLACK
) -> list[BoundReport]:
    """Monotonicity, convexity and 0 < theta(rho) < mu rho on a rho-grid.

    Convexity needs three points; with two only monotonicity is checked.
    """
    if len(estimates) < 2:
        raise TooFewPoints("need at least two rho values")
    est = sorted(estimates, key=lambda e: e.rho)
    rho = [e.rho for e in est]
    th = [e.theta_hat for e in est]
    se = [e.se for e in est]
    reports = []
    for k in range(len(est) - 1):
        reports.append(_compare("theta.monotone", th[k] - th[k + 1], 0.0, "upper",
                                params=dict(rho_lo=rho[k], rho_hi=rho[k + 1])))
    for k in range(1, len(est) - 1):
        h1, h2 = rho[k] - rho[k - 1], rho[k + 1] - rho[k]
        # second divided difference and its standard error (independent terms)
        a, b, c = 1 / h1, -(1 / h1 + 1 / h2), 1 / h2
        d = (a * th[k - 1] + b * th[k] + c * th[k + 1]) * 2 / (h1 + h2)
        sd = math.sqrt((a * se[k - 1]) ** 2 + (b * se[k]) ** 2 + (c * se[k + 1]) ** 2) * 2 / (h1 + h2)
        reports.append(_compare("theta.convex", d, -slack_sigma * sd, "lower",
                                params=dict(rho=rho[k], se=sd, slack_sigma=slack_sigma)))
    for e in est:
        if 0 < e.rho < 1:
            reports.append(_compare("theta.below_mu_rho", e.theta_hat,
                                    mu * e.rho - slack_sigma * e.se, "upper",
                                    params=dict(rho=e.rho, mu=mu, se=e.se)))
            reports.append(_compare("theta.positive", e.theta_hat, 0.0, "lower",
                                    params=dict(rho=e.rho)))
            reports[-1].holds = e.theta_hat > 0
        elif e.rho == 1:
            reports.append(_compare("theta.at_one", abs(e.theta_hat - mu), 4 * e.se, "upper",
                                    params=dict(mu=mu, theta_hat=e.theta_hat, se=e.se)))
    return reports


def check_variance_decay(est: ThetaEstimate) -> list[BoundReport]:
    """var(M_n/n) should decrease along the n-grid."""
    return [
        _compare("theta.variance_decay", est.variances[k + 1], est.variances[k], "upper",
                 params=dict(rho=est.rho, n_lo=est.n_grid[k], n_hi=est.n_grid[k + 1]))
        for k in range(len(est.n_grid) - 1)
    ]


def check_superadditivity(
    n1: int,
    n2: int,
    rho1: float,
    rho2: float,
    trials: int,
    dist: WeightDistribution,
    master_seed: int,
    threads: Optional[int] = None,
    slack_sigma: float = DEFAULT_SLACK,
) -> BoundReport:
    """E M_{n1+n2}(rho1 n1 + rho2 n2) <= E M_{n1}(rho1 n1) + E M_{n2}(rho2 n2).

    The three expectations are estimated from independent instance streams.
    """
    t1, t2 = tau_for(rho1, n1), tau_for(rho2, n2)
    t = math.ceil(rho1 * n1 + rho2 * n2 - 1e-9)
    if min(t1, t2) < 1:
        raise PlanarMatchError("rho1 n1 and rho2 n2 must be positive")
    stream = (n1 << 20) ^ (n2 << 8)
    runs = [
        run_trials(MinWeightTrial(dist, n1 + n2, (t,)), master_seed, trials, threads, stream + 1),
        run_trials(MinWeightTrial(dist, n1, (t1,)), master_seed, trials, threads, stream + 2),
        run_trials(MinWeightTrial(dist, n2, (t2,)), master_seed, trials, threads, stream + 3),
    ]
    stats = [r.summary[f"M[{k}]"] for r, k in zip(runs, (t, t1, t2))]
    se = math.sqrt(sum(s.se**2 for s in stats))
    rhs = stats[1].mean + stats[2].mean
    return _compare(
        "superadditivity", stats[0].mean, rhs + slack_sigma * se, "upper",
        params=dict(n1=n1, n2=n2, rho1=rho1, rho2=rho2, tau=t, tau1=t1, tau2=t2,
                    rhs_mean=rhs, se=se, slack_sigma=slack_sigma, trials=trials),
    )


def random_superadditivity_configs(count: int, master_seed: int) -> list[tuple[int, int, float, float]]:
    rng = SeedSpec(master_seed, 0, stream=0x5AD).rng()
    rhos = np.round(np.arange(1, 11) / 10, 1)
    out = []
    for _ in range(count):
        n1, n2 = (int(x) for x in rng.integers(8, 41, size=2))
        r1, r2 = (float(x) for x in rng.choice(rhos, size=2))
        out.append((n1, n2, r1, r2))
    return out


def check_min_edge_mean(
    r: int,
    trials: int,
    dist: WeightDistribution,
    master_seed: int,
    threads: Optional[int] = None,
) -> tuple[BoundReport, BoundReport]:
    """Mean minimum weight over K_{r,r} vs mu, and vs its exact value."""
    if r < 2:
        raise PlanarMatchError(f"r={r} must be at least 2")
    run = run_trials(MinEdgeTrial(dist, r), master_seed, trials, threads, stream=0xED6E + r)
    s = run.summary["min"]
    exact = dist.expected_min(r * r)
    below = _compare("min_edge.below_mu", s.mean, dist.mean, "upper",
                     params=dict(r=r, se=s.se, trials=trials))
    below.holds = s.mean < dist.mean
    oracle = _compare("min_edge.oracle", abs(s.mean - exact), 4 * s.se, "upper",
                      params=dict(r=r, exact=exact, mean=s.mean, se=s.se, trials=trials))
    return below, oracle


# -------------------------------------------------------------- saturation


@dataclass
class SaturationTable:
    n: int
    taus: list[int]
    means: list[float]
    ses: list[float]
    slope: Optional[float]
    expected_slope: Optional[float]

    @property
    def scaled(self) -> list[float]:
        return [m / self.n for m in self.means]


def saturation_scan(
    n: int,
    tau_grid: Sequence[int],
    dist: WeightDistribution,
    trials: int,
    master_seed: int,
    threads: Optional[int] = None,
) -> SaturationTable:
    """E-hat M_n(tau) across tau; for power laws also the log-log slope."""
    taus = sorted(tau_grid)
    if taus[0] < 1 or taus[-1] > n:
        raise PlanarMatchError(f"tau grid must lie in [1, {n}]")
    run = run_trials(MinWeightTrial(dist, n, tuple(taus)), master_seed, trials, threads,
                     stream=0x5A7 + n)
    means = [run.summary[f"M[{t}]"].mean for t in taus]
    ses = [run.summary[f"M[{t}]"].se for t in taus]
    slope = expected = None
    if dist.family in ("power", "uniform01") and len(taus) >= 2 and min(means) > 0:
        slope = float(np.polyfit(np.log(taus), np.log(means), 1)[0])
        expected = 1 + 2 / dist.alpha
    return SaturationTable(n, taus, means, ses, slope, expected)


# -------------------------------------------------------- composite studies


@dataclass
class StudyResult:
    """Long-format results rows ``(point, statistic, value)`` plus reports."""

    rows: list[tuple[str, str, float]] = field(default_factory=list)
    reports: list[BoundReport] = field(default_factory=list)
    trial_header: list[str] = field(default_factory=list)
    trial_rows: list[list] = field(default_factory=list)

    def add(self, point: str, **stats) -> None:
        for k, v in stats.items():
            self.rows.append((point, k, v))


def _trial_table(res: StudyResult, run: TrialRun, point: str) -> None:
    keys = list(run.trials[0].values)
    if not res.trial_header:
        res.trial_header = ["point", "trial_index", "seed", *keys]
    for t in run.trials:
        res.trial_rows.append([point, t.trial_index, t.seed, *(t.values[k] for k in keys)])


def theorem21_study(
    model: EdgeProbabilityModel,
    L: int,
    trials: int,
    master_seed: int,
    threads: Optional[int] = None,
    slack_sigma: float = DEFAULT_SLACK,
    conflict_graph: bool = True,
) -> StudyResult:
    n = model.n
    run = run_trials(MaxSizeTrial(model, L, conflict_graph), master_seed, trials, threads)
    p_av = average_edge_probability(model, L)
    res = StudyResult()
    point = f"n={n};L={L}"
    u = run.values("U")
    s = run.summary["U"]
    res.add(point, p_av=p_av, mean_U=s.mean, var_U=s.variance, se_U=s.se)
    res.reports.extend(bound_theorem21_size(u, n, L, p_av, slack_sigma))
    res.add(point, coverage=res.reports[0].lhs)
    if conflict_graph:
        for key, bid in (("stable_set_ok", "stable_set"), ("degree_cap_ok", "degree_cap")):
            bad = int(trials - run.values(key).sum())
            res.reports.append(_compare(f"{bid}.violations", bad, 0, "upper",
                                        params=dict(trials=trials, n=n, L=L),
                                        deterministic=True))
        res.add(point, mean_Q=run.summary["Q"].mean, mean_m=run.summary["m"].mean,
                mean_greedy=run.summary["greedy"].mean)
    _trial_table(res, run, point)
    return res


def theorem31_study(
    n_grid: Sequence[int],
    dist: WeightDistribution,
    trials: int,
    master_seed: int,
    rho: Optional[float] = None,
    tau: Optional[int] = None,
    threads: Optional[int] = None,
    stability_factor: float = 2.0,
) -> StudyResult:
    """Weight scales tau*t_n and tau*s_n and the variance scale c_n over n."""
    res = StudyResult()
    points = {}
    for n in sorted(n_grid):
        t = tau if tau is not None else tau_for(rho, n)
        s_n, t_n = quantile_s(dist, n, t), quantile_t(dist, n, t)
        seg = ((t, 2 * t_n),) if 4 * t <= n and math.isfinite(t_n) else ()
        run = run_trials(MinWeightTrial(dist, n, (t,), seg), master_seed, trials, threads,
                         stream=n)
        m = run.values(f"M[{t}]")
        points[n] = (m, t, s_n, t_n)
        point = f"n={n};tau={t}"
        res.add(point, tau=t, s_n=s_n, t_n=t_n, mean_M=float(m.mean()),
                var_M=float(m.var(ddof=1)))
        if seg:
            x = run.values(f"X[{t}]")
            res.add(point, segment_success=float(np.mean(x >= t)))
        _trial_table(res, run, point)
    fit = fit_theorem31(points)
    for n, (m, t, s_n, t_n) in points.items():
        res.reports.extend(bound_theorem31(m, n, t, s_n, t_n, fit))
        if n in fit.max_ratio:
            res.add(f"n={n};tau={t}", max_ratio_t=fit.max_ratio[n], min_ratio_s=fit.min_ratio[n],
                    c_n=fit.c_n[n], gamma_n=fit.gamma_n[n])
    if fit.max_ratio:
        res.add("fit", alpha1=fit.alpha1, beta1=fit.beta1, D=fit.D, gamma=fit.gamma)
        res.reports.append(bound_ratio_stability("theorem31.alpha1_stability", fit.max_ratio,
                                                 stability_factor))
        res.reports.append(bound_ratio_stability("theorem31.beta1_stability", fit.min_ratio,
                                                 stability_factor))
        res.reports.append(bound_ratio_stability("theorem31.gamma_stability", fit.gamma_n,
                                                 stability_factor))
    return res


def theta_study(
    rhos: Sequence[float],
    n_grid: Sequence[int],
    dist: WeightDistribution,
    trials: int,
    master_seed: int,
    threads: Optional[int] = None,
    slack_sigma: float = DEFAULT_SLACK,
) -> StudyResult:
    res = StudyResult()
    ests = estimate_theta_grid(rhos, n_grid, trials, dist, master_seed, threads, slack_sigma)
    for e in ests:
        for n, tau, mean, se, var in zip(e.n_grid, e.taus, e.means, e.ses, e.variances):
            res.add(f"rho={e.rho!r};n={n}", tau=tau, mean=mean, se=se, variance=var)
        res.add(f"rho={e.rho!r}", theta_hat=e.theta_hat, se=e.se,
                trend_violations=len(e.trend_violations))
        res.reports.extend(check_variance_decay(e))
    res.reports.extend(check_theta_shape(ests, dist.mean, slack_sigma))
    return res


def superadd_study(
    configs: Sequence[tuple[int, int, float, float]],
    dist: WeightDistribution,
    trials: int,
    master_seed: int,
    threads: Optional[int] = None,
    slack_sigma: float = DEFAULT_SLACK,
) -> StudyResult:
    res = StudyResult()
    for n1, n2, r1, r2 in configs:
        rep = check_superadditivity(n1, n2, r1, r2, trials, dist, master_seed, threads,
                                    slack_sigma)
        res.reports.append(rep)
        res.add(f"n1={n1};n2={n2};rho1={r1!r};rho2={r2!r}", lhs=rep.lhs,
                rhs=rep.params["rhs_mean"], se=rep.params["se"])
    return res


def saturation_study(
    n: int,
    tau_grid: Sequence[int],
    dist: WeightDistribution,
    trials: int,
    master_seed: int,
    threads: Optional[int] = None,
    min_edge_r: Sequence[int] = (),
    slope_tolerance: float = 0.4,
) -> StudyResult:
    res = StudyResult()
    table = saturation_scan(n, tau_grid, dist, trials, master_seed, threads)
    for tau, mean, se in zip(table.taus, table.means, table.ses):
        res.add(f"n={n};tau={tau}", mean=mean, se=se, mean_over_n=mean / n)
    if table.slope is not None:
        res.add(f"n={n}", slope=table.slope, expected_slope=table.expected_slope)
        res.reports.append(_compare("saturation.slope", abs(table.slope - table.expected_slope),
                                    slope_tolerance, "upper",
                                    params=dict(slope=table.slope,
                                                expected=table.expected_slope)))
    for r in min_edge_r:
        below, oracle = check_min_edge_mean(r, trials, dist, master_seed, threads)
        res.reports.extend([below, oracle])
        res.add(f"r={r}", mean_min=below.lhs, exact=oracle.params["exact"],
                se=oracle.params["se"])
    return res


def appendix_study(
    n: int,
    p: float,
    trials: int,
    master_seed: int,
    threads: Optional[int] = None,
    slack_sigma: float = DEFAULT_SLACK,
) -> StudyResult:
    model = EdgeProbabilityModel.homogeneous(n, p)
    run = run_trials(MaxSizeTrial(model, n - 1), master_seed, trials, threads)
    res = StudyResult()
    point = f"n={n};p={p!r}"
    s = run.summary["U"]
    res.add(point, mean_R=s.mean, var_R=s.variance, threshold=4 * math.e * n * math.sqrt(p))
    res.reports.extend(bound_appendix_rn(run.values("U"), n, p, slack_sigma))
    _trial_table(res, run, point)
    return res


def chernoff_study(
    r_grid: Sequence[int],
    p_grid: Sequence[float],
    gamma_grid: Sequence[float],
    trials: int = 0,
    master_seed: int = 0,
) -> StudyResult:
    res = StudyResult()
    for k, (r, p, g) in enumerate((r, p, g) for r in r_grid for p in p_grid for g in gamma_grid):
        rep = bound_chernoff(r, p, g, trials, SeedSpec(master_seed, k, stream=0xC4E))
        res.reports.append(rep)
        res.add(f"r={r};p={p!r};gamma={g!r}", probability=rep.lhs, bound=rep.rhs)
    return res
