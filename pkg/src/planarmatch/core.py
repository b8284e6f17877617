"""Indexing, planarity checks and edge counting for K_{n,n}.

Vertices are 1-based on both sides: top vertices u_1..u_n, bottom vertices
v_1..v_n.  An edge ``(i, j)`` joins u_i and v_j and has length ``|i - j|``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InstanceFormatError, InvalidCap, LengthExceeded, NotPlanar

HEADER_RE = re.compile(r"^#\s*planarmatch\s+v1\s+n=(\d+)\s+kind=(weights|states)\s*$")


class Edge(NamedTuple):
    i: int
    j: int


def edge_length(e: Sequence[int]) -> int:
    return abs(e[0] - e[1])


@dataclass(frozen=True)
class PlanarMatching:
    """Edges sorted with both coordinates strictly increasing."""

    edges: tuple[Edge, ...]
    n: int

    def size(self) -> int:
        return len(self.edges)

    def max_length(self) -> int:
        return max((edge_length(e) for e in self.edges), default=0)

    def weight(self, weights: np.ndarray) -> float:
        # summed in edge order so the value is reproducible bit-for-bit
        total = 0.0
        for i, j in self.edges:
            total += float(weights[i - 1, j - 1])
        return total

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)


def validate_planar(
    edges: Iterable[Sequence[int]], n: int, L: Optional[int] = None
) -> PlanarMatching:
    """Check that ``edges`` form an (L-constrained) planar matching of K_{n,n}.

    The edges may be given in any order; they are sorted by top index.
    Raises :class:`NotPlanar` for crossing edges or a shared endpoint and
    :class:`LengthExceeded` if some edge is longer than ``L``.
    """
    es = sorted(Edge(int(a), int(b)) for a, b in edges)
    for e in es:
        if not (1 <= e.i <= n and 1 <= e.j <= n):
            raise NotPlanar(f"edge {tuple(e)} outside K_{{{n},{n}}}")
    for a, b in zip(es, es[1:]):
        if not (a.i < b.i and a.j < b.j):
            raise NotPlanar(f"edges {tuple(a)} and {tuple(b)} intersect")
    if L is not None:
        for e in es:
            if edge_length(e) > L:
                raise LengthExceeded(f"edge {tuple(e)} has length {edge_length(e)} > {L}")
    return PlanarMatching(tuple(es), n)


def count_length_bounded_edges(n: int, L: int) -> int:
    """Number of edges of K_{n,n} with length at most ``L``.

    ``L = n`` is accepted and clamped to ``n - 1`` (every edge qualifies).
    """
    if L < 0 or L > n:
        raise InvalidCap(f"L={L} outside [0, {n}]")
    L = min(L, n - 1)
    if L == 0:
        return n
    return n * L + (n - L) * (L + 1)


@dataclass(frozen=True, eq=False)
class BipartiteInstance:
    """K_{n,n} with edge states and/or edge weights.

    Arrays are n x n with row ``r`` holding top vertex u_{r+1}; they are
    copied and frozen on construction.
    """

    n: int
    states: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.states is None and self.weights is None:
            raise ValueError("instance needs states or weights")
        if self.states is not None:
            s = np.array(self.states, dtype=bool)
            if s.shape != (self.n, self.n):
                raise ValueError(f"states shape {s.shape} != ({self.n}, {self.n})")
            s.flags.writeable = False
            object.__setattr__(self, "states", s)
        if self.weights is not None:
            w = np.array(self.weights, dtype=float)
            if w.shape != (self.n, self.n):
                raise ValueError(f"weights shape {w.shape} != ({self.n}, {self.n})")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("weights must be finite and nonnegative")
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "BipartiteInstance":
        s = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            s[i - 1, j - 1] = True
        return cls(n, states=s)

    def present_edges(self, L: Optional[int] = None) -> list[Edge]:
        """Present edges (length <= L if given), sorted by (i, j)."""
        if self.states is None:
            raise ValueError("instance has no edge states")
        rows, cols = np.nonzero(self.states)
        if L is not None:
            keep = np.abs(rows - cols) <= L
            rows, cols = rows[keep], cols[keep]
        return [Edge(int(r) + 1, int(c) + 1) for r, c in zip(rows, cols)]


def read_instance(path: str | Path) -> BipartiteInstance:
    """Read the ``# planarmatch v1`` CSV instance format."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise InstanceFormatError(f"{path}: empty file")
    m = HEADER_RE.match(text[0].strip())
    if m is None:
        raise InstanceFormatError(
            f"{path}: first line must be '# planarmatch v1 n=<n> kind=<weights|states>'"
        )
    n, kind = int(m.group(1)), m.group(2)
    rows = [ln for ln in text[1:] if ln.strip()]
    if len(rows) != n:
        raise InstanceFormatError(f"{path}: expected {n} rows, found {len(rows)}")
    try:
        arr = np.array([[float(x) for x in ln.split(",")] for ln in rows])
    except ValueError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from None
    if arr.shape != (n, n):
        raise InstanceFormatError(f"{path}: expected {n} columns per row")
    if kind == "states":
        if not np.all((arr == 0) | (arr == 1)):
            raise InstanceFormatError(f"{path}: state entries must be 0 or 1")
        return BipartiteInstance(n, states=arr.astype(bool))
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InstanceFormatError(f"{path}: weights must be finite and nonnegative")
    return BipartiteInstance(n, weights=arr)


def write_instance(inst: BipartiteInstance, path: str | Path, kind: Optional[str] = None) -> None:
    if kind is None:
        kind = "weights" if inst.weights is not None else "states"
    if kind == "states":
        body = [",".join(str(int(x)) for x in row) for row in inst.states]
    else:
        body = [",".join(repr(float(x)) for x in row) for row in inst.weights]
    lines = [f"# planarmatch v1 n={inst.n} kind={kind}", *body]
    Path(path).write_text("\n".join(lines) + "\n")


def write_witness(m: PlanarMatching, path: str | Path) -> None:
    lines = ["k,i,j"] + [f"{k},{e.i},{e.j}" for k, e in enumerate(m.edges, start=1)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_witness(path: str | Path, n: int) -> PlanarMatching:
    rows = Path(path).read_text().splitlines()[1:]
    edges = [tuple(int(x) for x in ln.split(",")[1:]) for ln in rows if ln.strip()]
    return validate_planar(edges, n)
