"""Cross-check the fast solvers against the brute-force oracles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .core import BipartiteInstance, write_instance
from .solvers import (
    brute_force_max_size,
    brute_force_min_weight,
    max_size_planar,
    min_weight_planar,
)
from .stochastic import SeedSpec

EXHAUSTIVE_MAX_N = 4


@dataclass(frozen=True)
class Mismatch:
    kind: str  # "max_size" or "min_weight"
    inst: BipartiteInstance
    param: int  # L or tau
    expected: float
    got: float


def state_patterns(n: int):
    """Every n x n boolean state pattern, in binary counting order."""
    for bits in itertools.product((False, True), repeat=n * n):
        yield np.array(bits, dtype=bool).reshape(n, n)


def check_max_size(inst: BipartiteInstance, solver=max_size_planar) -> list[Mismatch]:
    out = []
    for L in range(inst.n):
        expected = brute_force_max_size(inst, L)
        got = solver(inst, L).size
        if got != expected:
            out.append(Mismatch("max_size", inst, L, expected, got))
    return out


def check_min_weight(
    inst: BipartiteInstance, solver=min_weight_planar, tol: float = 1e-12
) -> list[Mismatch]:
    out = []
    for tau in range(1, inst.n + 1):
        expected = brute_force_min_weight(inst, tau)
        got = solver(inst, tau).weight
        if not abs(got - expected) <= tol:
            out.append(Mismatch("min_weight", inst, tau, expected, got))
    return out


def oracle_check(
    n_max: int,
    trials: int,
    seed: int,
    max_size: Callable = max_size_planar,
    min_weight: Callable = min_weight_planar,
    progress: Optional[Callable[[str], None]] = None,
) -> list[Mismatch]:
    """State patterns are exhaustive for n <= 4 and ``trials`` random
    patterns (p = 1/2) above; weights are ``trials`` uniform instances."""
    mismatches: list[Mismatch] = []
    for n in range(1, n_max + 1):
        if n <= EXHAUSTIVE_MAX_N:
            patterns = state_patterns(n)
        else:
            patterns = (SeedSpec(seed, t, stream=n).rng().random((n, n)) < 0.5
                        for t in range(trials))
        count = 0
        for s in patterns:
            mismatches += check_max_size(BipartiteInstance(n, states=s), max_size)
            count += 1
        for t in range(trials):
            w = SeedSpec(seed, t, stream=1000 + n).rng().random((n, n))
            mismatches += check_min_weight(BipartiteInstance(n, weights=w), min_weight)
        if progress:
            progress(f"n={n}: {count} state patterns, {trials} weight instances, "
                     f"{len(mismatches)} mismatches so far")
    return mismatches


def dump_mismatches(mismatches: list[Mismatch], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["file,kind,param,expected,got"]
    for k, m in enumerate(mismatches):
        name = f"mismatch_{k:04d}.csv"
        write_instance(m.inst, out / name, "states" if m.kind == "max_size" else "weights")
        lines.append(f"{name},{m.kind},{m.param},{m.expected!r},{m.got!r}")
    (out / "mismatches.csv").write_text("\n".join(lines) + "\n")
