import json
import math
from fractions import Fraction

import numpy as np
import pytest

from planarmatch.bounds import (
    BoundReport,
    bound_appendix_rn,
    bound_chernoff,
    bound_degree_cap,
    bound_ratio_stability,
    bound_stable_set,
    bound_theorem21_size,
    bound_theorem31,
    exact_deviation_probability,
    fit_theorem31,
    wilson_interval,
    write_reports_csv,
    write_reports_jsonl,
)
from planarmatch.core import BipartiteInstance
from planarmatch.errors import InsufficientTrials, InvalidGamma
from planarmatch.solvers import build_conflict_graph, max_size_planar
from planarmatch.stochastic import EdgeProbabilityModel, SeedSpec, sample_states


def exact_tail(r, p, gamma):
    """Independent rational evaluation of P(|T - rp| >= gamma rp)."""
    p = Fraction(p).limit_denominator(10**6)
    g = Fraction(gamma).limit_denominator(10**6)
    theta = r * p
    total = Fraction(0)
    for k in range(r + 1):
        if abs(k - theta) >= g * theta:
            total += math.comb(r, k) * p**k * (1 - p) ** (r - k)
    return float(total)


@pytest.mark.parametrize("r, p, gamma", [(100, 0.5, 0.5), (10, 0.3, 0.2), (50, 0.9, 0.1),
                                         (1, 0.5, 0.5), (200, 0.1, 0.4)])
def test_exact_tail_agrees_with_rational_sum(r, p, gamma):
    assert exact_deviation_probability(r, p, gamma) == pytest.approx(exact_tail(r, p, gamma), abs=1e-12)


def test_chernoff_examples():
    rep = bound_chernoff(100, 0.5, 0.5)
    assert rep.holds and rep.rhs == pytest.approx(2 * math.exp(-50 / 16))
    assert bound_chernoff(50, 1.0, 0.3).lhs == 0.0
    rep = bound_chernoff(1, 0.5, 0.5)
    assert rep.lhs == pytest.approx(1.0) and rep.rhs == pytest.approx(2 * math.exp(-1 / 32))
    assert rep.holds and rep.deterministic


def test_chernoff_grid_never_violated():
    for r in (10, 100, 1000):
        for p in np.round(np.arange(1, 10) / 10, 1):
            for g in np.round(np.arange(1, 6) / 10, 1):
                assert bound_chernoff(r, float(p), float(g)).holds


def test_chernoff_monte_carlo_branch():
    rep = bound_chernoff(20_000, 0.5, 0.1, trials=200, seed=SeedSpec(1, 0))
    assert rep.params["method"] == "monte_carlo" and rep.holds
    with pytest.raises(InsufficientTrials):
        bound_chernoff(20_000, 0.5, 0.1)


@pytest.mark.parametrize("gamma", [0.0, -0.1, 0.51])
def test_chernoff_rejects_gamma(gamma):
    with pytest.raises(InvalidGamma):
        bound_chernoff(10, 0.5, gamma)


def test_stable_set_examples():
    empty = build_conflict_graph(BipartiteInstance(3, states=np.zeros((3, 3), bool)), 1)
    rep = bound_stable_set(empty, 0)
    assert rep.holds and rep.rhs == 0
    disjoint = build_conflict_graph(BipartiteInstance.from_edges(4, [(1, 1), (2, 2), (3, 3), (4, 4)]), 0)
    rep = bound_stable_set(disjoint, 4)
    assert rep.holds and rep.rhs == 2
    assert not bound_stable_set(disjoint, 5).holds
    assert not bound_stable_set(disjoint, 1).holds


def test_degree_cap_examples():
    empty = build_conflict_graph(BipartiteInstance(3, states=np.zeros((3, 3), bool)), 2)
    assert bound_degree_cap(empty, 2).holds
    single = build_conflict_graph(BipartiteInstance.from_edges(3, [(1, 2)]), 2)
    assert bound_degree_cap(single, 2).lhs == 0
    dense = build_conflict_graph(BipartiteInstance(30, states=np.ones((30, 30), bool)), 2)
    assert bound_degree_cap(dense, 2).holds


def test_deterministic_bounds_on_random_instances():
    for p in (0.1, 0.3, 0.6):
        model = EdgeProbabilityModel.homogeneous(40, p)
        for t in range(30):
            inst = sample_states(model, SeedSpec(2, t))
            cg = build_conflict_graph(inst, 2)
            assert bound_stable_set(cg, max_size_planar(inst, 2).size).holds
            assert bound_degree_cap(cg, 2).holds


def test_theorem21_requires_trials():
    with pytest.raises(InsufficientTrials):
        bound_theorem21_size([1.0] * 99, 10, 1, 0.5)


def test_theorem21_degenerate_cases():
    cov, v2, v4 = bound_theorem21_size([0.0] * 100, 50, 2, 0.0)
    assert cov.lhs == 1.0 and cov.holds and v2.holds and v4.holds
    cov, _, v4 = bound_theorem21_size([20.0] * 100, 20, 19, 1.0)
    assert cov.lhs == 1.0 and v4.lhs == 0.0


def test_wilson_interval_contains_estimate():
    lo, hi = wilson_interval(990, 1000)
    assert lo < 0.99 < hi
    lo, hi = wilson_interval(1000, 1000)
    assert hi == pytest.approx(1.0) and lo < 1.0


def test_theorem31_constant_weights():
    samples = [2.0 * 4] * 50
    fit = fit_theorem31({64: (samples, 4, 1.0, 2.0)})
    assert fit.alpha1 == 1.0
    reps = bound_theorem31(samples, 64, 4, 1.0, 2.0, fit)
    assert [r.holds for r in reps] == [True, True, True]


def test_theorem31_skips_infinite_t():
    fit = fit_theorem31({64: ([1.0, 2.0], 8, 0.1, math.inf)})
    reps = bound_theorem31([1.0, 2.0], 64, 8, 0.1, math.inf, fit)
    assert all(r.skipped and not r.violated for r in reps)


def test_ratio_stability():
    assert bound_ratio_stability("x", {1: 1.0, 2: 1.9}).holds
    assert not bound_ratio_stability("x", {1: 1.0, 2: 2.1}).holds


def test_appendix_degenerate():
    tail, mean = bound_appendix_rn([0.0] * 10, 50, 0.0)
    assert tail.holds and mean.holds
    tail, mean = bound_appendix_rn([50.0] * 10, 50, 1.0)
    assert mean.holds and mean.rhs == pytest.approx(16 * math.e * 50)


def test_report_serialization(tmp_path):
    reps = [bound_chernoff(10, 0.5, 0.5), bound_ratio_stability("r", {1: 1.0, 2: 3.0})]
    write_reports_jsonl(reps, tmp_path / "b.jsonl")
    write_reports_csv(reps, tmp_path / "b.csv")
    rows = [json.loads(x) for x in (tmp_path / "b.jsonl").read_text().splitlines()]
    assert rows[0]["bound_id"] == "chernoff" and rows[1]["holds"] is False
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "bound_id,lhs,rhs,holds,skipped,params_json"
    assert len(lines) == 3
    assert isinstance(reps[0], BoundReport) and not reps[0].violated and reps[1].violated
