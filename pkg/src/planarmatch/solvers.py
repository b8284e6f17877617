"""Exact optimizers for maximum-size and minimum-weight planar matchings.

* :func:`max_size_planar` -- longest strictly increasing chain of present
  edges, O(Q log Q) in the number Q of admissible edges.
* :func:`min_weight_planar` -- layered grid DP over the number of edges,
  O(n^3) time and O(n^2) working memory.
* brute-force oracles that enumerate every pair of increasing index
  sequences, for cross-checking on small n.
* the conflict-graph stable set and block segmentation constructions.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Optional

import numpy as np

from .core import BipartiteInstance, Edge, PlanarMatching
from .errors import InsufficientSegments, InvalidCap, InvalidTau, TooLarge

BRUTE_FORCE_MAX_N = 12

# parent codes for the min-weight DP
SKIP_TOP, SKIP_BOTTOM, TAKE = 0, 1, 2


@dataclass(frozen=True)
class MaxSizeResult:
    size: int
    witness: PlanarMatching


@dataclass(frozen=True, eq=False)
class MinWeightResult:
    weight: float
    witness: Optional[PlanarMatching]
    profile: np.ndarray  # profile[k]: min weight with exactly k edges, inf if infeasible


def max_size_planar(inst: BipartiteInstance, L: int) -> MaxSizeResult:
    """Largest L-constrained planar matching using present edges only."""
    if L < 0:
        raise InvalidCap(f"L={L} must be nonnegative")
    edges = inst.present_edges(L)
    # j descending within equal i, so two edges at the same top vertex can
    # never both sit on a strictly increasing chain
    edges.sort(key=lambda e: (e.i, -e.j))
    tails: list[int] = []
    tail_at: list[int] = []
    pred = [-1] * len(edges)
    for k, e in enumerate(edges):
        pos = bisect_left(tails, e.j)
        if pos > 0:
            pred[k] = tail_at[pos - 1]
        if pos == len(tails):
            tails.append(e.j)
            tail_at.append(k)
        else:
            tails[pos] = e.j
            tail_at[pos] = k
    chain = []
    k = tail_at[-1] if tail_at else -1
    while k >= 0:
        chain.append(edges[k])
        k = pred[k]
    chain.reverse()
    return MaxSizeResult(len(chain), PlanarMatching(tuple(chain), inst.n))


def _check_tau(tau: int, n: int) -> None:
    if not 1 <= tau <= n:
        raise InvalidTau(f"tau={tau} outside [1, {n}]")


def _layers(w: np.ndarray, want_codes: bool):
    """Yield ``(k, D_k, codes_k)`` for k = 1..n.

    ``D_k[r, c]`` is the minimum weight of a planar matching with exactly k
    edges inside the top-left ``(r+k) x (c+k)`` corner; rows/columns below k
    are infeasible and omitted.  Since
    ``D_k[i][j] = min(D_k[i-1][j], D_k[i][j-1], D_{k-1}[i-1][j-1] + w(i,j))``,
    each layer is the 2-D prefix minimum of the shifted previous layer plus w.
    """
    n = w.shape[0]
    prev = np.zeros((n + 1, n + 1))
    for k in range(1, n + 1):
        take = prev[:-1, :-1] + w[k - 1:, k - 1:]
        cur = np.minimum.accumulate(np.minimum.accumulate(take, axis=0), axis=1)
        codes = None
        if want_codes:
            codes = np.full(cur.shape, TAKE, dtype=np.int8)
            left = np.zeros(cur.shape, dtype=bool)
            left[:, 1:] = cur[:, 1:] == cur[:, :-1]
            codes[left] = SKIP_BOTTOM
            up = np.zeros(cur.shape, dtype=bool)
            up[1:, :] = cur[1:, :] == cur[:-1, :]
            codes[up] = SKIP_TOP
        yield k, cur, codes
        prev = cur


def min_weight_profile(weights: np.ndarray) -> np.ndarray:
    """Minimum weight of a planar matching with exactly k edges, k = 0..n."""
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    profile = np.full(n + 1, np.inf)
    profile[0] = 0.0
    for k, cur, _ in _layers(w, False):
        profile[k] = cur[-1, -1]
    return profile


def min_weight_planar(
    inst: BipartiteInstance, tau: int, witness: bool = True
) -> MinWeightResult:
    """Minimum weight planar matching of K_{n,n} with at least ``tau`` edges.

    Ties in the recurrence prefer skipping the top vertex, then the bottom
    vertex, then taking the edge; among edge counts attaining the optimum the
    smallest is chosen.
    """
    w = inst.weights
    n = inst.n
    _check_tau(tau, n)
    profile = np.full(n + 1, np.inf)
    profile[0] = 0.0
    codes: list[Optional[np.ndarray]] = [None]
    for k, cur, c in _layers(w, witness):
        profile[k] = cur[-1, -1]
        codes.append(c)
    k_best = tau + int(np.argmin(profile[tau:]))
    weight = float(profile[k_best])
    profile.flags.writeable = False
    if not witness:
        return MinWeightResult(weight, None, profile)

    edges = []
    i = j = n
    k = k_best
    while k > 0:
        code = codes[k][i - k, j - k]
        if code == SKIP_TOP:
            i -= 1
        elif code == SKIP_BOTTOM:
            j -= 1
        else:
            edges.append(Edge(i, j))
            i, j, k = i - 1, j - 1, k - 1
    edges.reverse()
    return MinWeightResult(weight, PlanarMatching(tuple(edges), n), profile)


# ---------------------------------------------------------------- oracles


def _enumerate_pairs(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    combos = np.array(list(combinations(range(n), k)), dtype=np.intp).reshape(-1, k)
    c = len(combos)
    return np.repeat(combos, c, axis=0), np.tile(combos, (c, 1))


_enumerate_pairs_cached = lru_cache(maxsize=None)(_enumerate_pairs)


def planar_index_pairs(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """All planar matchings of size k as (tops, bottoms) 0-based index rows."""
    if n <= 8:
        return _enumerate_pairs_cached(n, k)
    return _enumerate_pairs(n, k)


def _guard(n: int) -> None:
    if n > BRUTE_FORCE_MAX_N:
        raise TooLarge(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")


def brute_force_max_size(inst: BipartiteInstance, L: int) -> int:
    n = inst.n
    _guard(n)
    idx = np.arange(n)
    ok = inst.states & (np.abs(idx[:, None] - idx[None, :]) <= L)
    for k in range(n, 0, -1):
        tops, bots = planar_index_pairs(n, k)
        if ok[tops, bots].all(axis=1).any():
            return k
    return 0


def brute_force_min_weight(inst: BipartiteInstance, tau: int) -> float:
    n = inst.n
    _guard(n)
    _check_tau(tau, n)
    w = inst.weights
    best = np.inf
    for k in range(tau, n + 1):
        tops, bots = planar_index_pairs(n, k)
        best = min(best, float(w[tops, bots].sum(axis=1).min()))
    return best


# ---------------------------------------------------------- conflict graph


@dataclass(frozen=True, eq=False)
class ConflictGraph:
    """Present edges of length <= L; two are adjacent iff they cross or
    share an endpoint."""

    vertex_edges: tuple[Edge, ...]
    adjacency: np.ndarray
    n: int

    @property
    def Q(self) -> int:
        return len(self.vertex_edges)

    @property
    def m(self) -> int:
        return int(self.adjacency.sum()) // 2

    @property
    def d_av(self) -> float:
        return 2 * self.m / self.Q if self.Q else 0.0


def build_conflict_graph(inst: BipartiteInstance, L: int) -> ConflictGraph:
    edges = tuple(inst.present_edges(L))
    ij = np.array(edges, dtype=np.int64).reshape(-1, 2)
    di = ij[:, 0, None] - ij[None, :, 0]
    dj = ij[:, 1, None] - ij[None, :, 1]
    adj = di * dj <= 0
    np.fill_diagonal(adj, False)
    adj.flags.writeable = False
    return ConflictGraph(edges, adj, inst.n)


def greedy_stable_set(cg: ConflictGraph) -> PlanarMatching:
    """Min-degree greedy stable set, returned as a planar matching.

    Picking a minimum-degree vertex and deleting its closed neighbourhood
    yields at least sum 1/(d(v)+1) >= Q^2/(2m+Q) vertices.
    """
    Q = cg.Q
    adj = cg.adjacency
    alive = np.ones(Q, dtype=bool)
    deg = adj.sum(axis=1).astype(np.int64)
    chosen = []
    while alive.any():
        v = int(np.argmin(np.where(alive, deg, np.iinfo(np.int64).max)))
        chosen.append(cg.vertex_edges[v])
        removed = alive & adj[v]
        removed[v] = True
        alive &= ~removed
        deg -= adj[removed].sum(axis=0)
    return PlanarMatching(tuple(sorted(chosen)), cg.n)


# ------------------------------------------------------------ segmentation


def segment_bounds(n: int, blocks: int) -> list[tuple[int, int]]:
    """1-based inclusive index ranges of ``blocks`` contiguous segments.

    The first ``n % blocks`` segments get one extra index.
    """
    base, extra = divmod(n, blocks)
    out = []
    start = 1
    for b in range(blocks):
        size = base + (1 if b < extra else 0)
        out.append((start, start + size - 1))
        start += size
    return out


def good_segment_edges(inst: BipartiteInstance, tau: int, threshold: float) -> list[Edge]:
    """Cheapest edge of each of the 4*tau diagonal blocks, kept if its
    weight is at most ``threshold``."""
    n = inst.n
    if tau < 1 or 4 * tau > n:
        raise InvalidTau(f"segmentation needs 1 <= tau <= n/4, got tau={tau}, n={n}")
    w = inst.weights
    good = []
    for lo, hi in segment_bounds(n, 4 * tau):
        block = w[lo - 1:hi, lo - 1:hi]
        r, c = np.unravel_index(int(np.argmin(block)), block.shape)
        if block[r, c] <= threshold:
            good.append(Edge(lo + int(r), lo + int(c)))
    return good


def segmentation_matching(
    inst: BipartiteInstance, tau: int, threshold: float
) -> PlanarMatching:
    good = good_segment_edges(inst, tau, threshold)
    if len(good) < tau:
        raise InsufficientSegments(len(good), tau)
    return PlanarMatching(tuple(good), inst.n)
