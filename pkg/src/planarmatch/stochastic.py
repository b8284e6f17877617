"""Random edge states, random edge weights, quantiles and seeding.

Per-trial randomness is derived from ``(master_seed, trial_index, stream)``
with a fixed SplitMix64 mix, so any trial can be replayed in isolation and
results do not depend on how trials are scheduled across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .core import BipartiteInstance, count_length_bounded_edges
from .errors import ConfigError, InvalidCap, InvalidTau

MASK64 = (1 << 64) - 1

# SplitMix64 constants (Steele, Lea, Flood 2014); frozen, do not change
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, trial_index: int, stream: int = 0) -> int:
    """64-bit per-trial seed: nested SplitMix64 over master, trial, stream."""
    h = splitmix64(master_seed & MASK64)
    h = splitmix64(h ^ (trial_index & MASK64))
    return splitmix64(h ^ (stream & MASK64))


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    trial_index: int
    stream: int = 0

    @property
    def seed(self) -> int:
        return derive_seed(self.master_seed, self.trial_index, self.stream)

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))


# ------------------------------------------------------------ edge states


@dataclass(frozen=True, eq=False)
class EdgeProbabilityModel:
    """Edge presence probabilities p(i, j) on K_{n,n}.

    kinds: ``homogeneous`` (constant p), ``distance_decay``
    (``min(1, c / (1 + |i-j|))``) and ``matrix`` (explicit n x n array).
    """

    kind: str
    n: int
    p: Optional[float] = None
    c: Optional[float] = None
    matrix: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "homogeneous":
            if self.p is None or not 0 <= self.p <= 1:
                raise ConfigError(f"homogeneous model needs 0 <= p <= 1, got {self.p}")
        elif self.kind == "distance_decay":
            if self.c is None or self.c < 0:
                raise ConfigError(f"distance_decay model needs c >= 0, got {self.c}")
        elif self.kind == "matrix":
            m = np.array(self.matrix, dtype=float)
            if m.shape != (self.n, self.n):
                raise ConfigError(f"probability matrix shape {m.shape} != ({self.n}, {self.n})")
            if np.any(~np.isfinite(m)) or np.any(m < 0) or np.any(m > 1):
                raise ConfigError("probabilities must lie in [0, 1]")
            m.flags.writeable = False
            object.__setattr__(self, "matrix", m)
        else:
            raise ConfigError(f"unknown edge model kind {self.kind!r}")

    @classmethod
    def homogeneous(cls, n: int, p: float) -> "EdgeProbabilityModel":
        return cls("homogeneous", n, p=p)

    @classmethod
    def distance_decay(cls, n: int, c: float) -> "EdgeProbabilityModel":
        return cls("distance_decay", n, c=c)

    @classmethod
    def from_matrix(cls, matrix) -> "EdgeProbabilityModel":
        m = np.asarray(matrix, dtype=float)
        return cls("matrix", m.shape[0], matrix=m)

    @classmethod
    def from_spec(cls, spec: dict, n: int, base_dir: Path | str = ".") -> "EdgeProbabilityModel":
        kind = spec.get("kind")
        if kind == "homogeneous":
            return cls.homogeneous(n, float(spec["p"]))
        if kind == "distance_decay":
            return cls.distance_decay(n, float(spec["c"]))
        if kind == "matrix":
            path = Path(base_dir) / spec["path"]
            if not path.exists():
                raise ConfigError(f"probability matrix file {path} not found")
            m = read_probability_matrix(path)
            if m.shape != (n, n):
                raise ConfigError(f"{path}: expected {n}x{n} probabilities, got {m.shape}")
            return cls.from_matrix(m)
        raise ConfigError(f"unknown edge model kind {kind!r}")

    def probabilities(self) -> np.ndarray:
        n = self.n
        if self.kind == "homogeneous":
            return np.full((n, n), float(self.p))
        if self.kind == "distance_decay":
            idx = np.arange(n)
            dist = np.abs(idx[:, None] - idx[None, :])
            return np.minimum(1.0, self.c / (1.0 + dist))
        return np.array(self.matrix)


def read_probability_matrix(path: Path | str) -> np.ndarray:
    """Comma-separated n x n probabilities; lines starting with '#' are skipped."""
    rows = [
        [float(x) for x in ln.split(",")]
        for ln in Path(path).read_text().splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    return np.array(rows, dtype=float)


def average_edge_probability(model: EdgeProbabilityModel, L: int) -> float:
    """Mean of p(f) over the edges of length at most L."""
    n = model.n
    if L < 0 or L > n:
        raise InvalidCap(f"L={L} outside [0, {n}]")
    idx = np.arange(n)
    mask = np.abs(idx[:, None] - idx[None, :]) <= L
    zeta = count_length_bounded_edges(n, L)
    return math.fsum(model.probabilities()[mask]) / zeta


def sample_states(model: EdgeProbabilityModel, seed: SeedSpec) -> BipartiteInstance:
    rng = seed.rng()
    u = rng.random((model.n, model.n))
    return BipartiteInstance(model.n, states=u < model.probabilities())


# ----------------------------------------------------------- edge weights

FAMILIES = ("power", "uniform01", "exponential")


@dataclass(frozen=True)
class WeightDistribution:
    """I.i.d. edge-weight law, optionally with explicit cdf envelopes.

    ``power(alpha)`` has cdf x**alpha on [0, 1]; ``uniform01`` is power(1);
    ``exponential(lam)`` has rate ``lam``.  ``low``/``up`` override the cdf
    envelopes used for quantiles (for inhomogeneous weights); sampling
    always uses the base family.
    """

    family: str
    alpha: float = 1.0
    lam: float = 1.0
    low: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)
    up: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown weight family {self.family!r}")
        if self.family == "uniform01":
            object.__setattr__(self, "alpha", 1.0)
        if self.alpha <= 0 or self.lam <= 0:
            raise ConfigError("alpha and lambda must be positive")

    @classmethod
    def power(cls, alpha: float) -> "WeightDistribution":
        return cls("power", alpha=alpha)

    @classmethod
    def uniform01(cls) -> "WeightDistribution":
        return cls("uniform01")

    @classmethod
    def exponential(cls, lam: float = 1.0) -> "WeightDistribution":
        return cls("exponential", lam=lam)

    @classmethod
    def from_spec(cls, spec: dict) -> "WeightDistribution":
        family = spec.get("family")
        if family == "power":
            return cls.power(float(spec["alpha"]))
        if family == "uniform01":
            return cls.uniform01()
        if family == "exponential":
            return cls.exponential(float(spec.get("lambda", 1.0)))
        raise ConfigError(f"unknown weight family {family!r}")

    def to_spec(self) -> dict:
        if self.family == "exponential":
            return {"family": "exponential", "lambda": self.lam}
        if self.family == "power":
            return {"family": "power", "alpha": self.alpha}
        return {"family": "uniform01"}

    @property
    def has_envelopes(self) -> bool:
        return self.low is not None or self.up is not None

    def cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        if self.family == "exponential":
            return -math.expm1(-self.lam * x)
        return 1.0 if x >= 1 else x**self.alpha

    def f_low(self, x: float) -> float:
        return self.low(x) if self.low is not None else self.cdf(x)

    def f_up(self, x: float) -> float:
        return self.up(x) if self.up is not None else self.cdf(x)

    def inverse_cdf(self, q: float) -> float:
        """Closed-form quantile of the base family for 0 <= q < 1."""
        if self.family == "exponential":
            return -math.log1p(-q) / self.lam
        return q ** (1.0 / self.alpha)

    @property
    def mean(self) -> float:
        if self.family == "exponential":
            return 1.0 / self.lam
        return self.alpha / (self.alpha + 1.0)

    @property
    def support_max(self) -> float:
        return math.inf if self.family == "exponential" else 1.0

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        u = rng.random(shape)
        if self.family == "exponential":
            return -np.log1p(-u) / self.lam
        if self.alpha == 1.0:
            return u
        return u ** (1.0 / self.alpha)

    def expected_min(self, k: int) -> float:
        """Exact mean of the minimum of k independent draws."""
        if self.family == "exponential":
            return 1.0 / (k * self.lam)
        # E min = k B(k, 1 + 1/alpha) = Gamma(k+1) Gamma(1+1/a) / Gamma(k+1+1/a)
        a = 1.0 / self.alpha
        return float(np.exp(gammaln(k + 1) + gammaln(1 + a) - gammaln(k + 1 + a)))


def sample_weights(dist: WeightDistribution, n: int, seed: SeedSpec) -> BipartiteInstance:
    return BipartiteInstance(n, weights=dist.sample(seed.rng(), (n, n)))


# -------------------------------------------------------------- quantiles

BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200


def _bracket(pred: Callable[[float], bool]) -> float:
    hi = 1.0
    for _ in range(BISECT_MAX_ITER):
        if pred(hi):
            return hi
        hi *= 2.0
    return math.inf


def inverse_inf(cdf: Callable[[float], float], q: float) -> float:
    """``inf{x > 0 : cdf(x) >= q}`` by doubling then bisection."""
    if q <= 0:
        return 0.0
    hi = _bracket(lambda x: cdf(x) >= q)
    if math.isinf(hi):
        return hi
    lo = 0.0
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if cdf(mid) >= q:
            hi = mid
        else:
            lo = mid
    return hi


def inverse_sup(cdf: Callable[[float], float], q: float) -> float:
    """``sup{x > 0 : cdf(x) <= q}`` by doubling then bisection."""
    hi = _bracket(lambda x: cdf(x) > q)
    if math.isinf(hi):
        return hi
    lo = 0.0
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if cdf(mid) <= q:
            lo = mid
        else:
            hi = mid
    return lo


def _check_tau(n: int, tau: int) -> None:
    if not 1 <= tau <= n:
        raise InvalidTau(f"tau={tau} outside [1, {n}]")


def quantile_s(dist: WeightDistribution, n: int, tau: int) -> float:
    """Smallest x with F_up(x) >= (tau / 64n)^2."""
    _check_tau(n, tau)
    q = (tau / (64.0 * n)) ** 2
    if dist.up is None:
        return dist.inverse_cdf(q)
    return inverse_inf(dist.f_up, q)


def quantile_t(dist: WeightDistribution, n: int, tau: int) -> float:
    """Largest x with F_low(x) <= (8 tau / n)^2.

    When the level reaches 1 the support's upper end is returned (``inf``
    for unbounded families).
    """
    _check_tau(n, tau)
    q = (8.0 * tau / n) ** 2
    if q >= 1.0:
        return dist.support_max
    if dist.low is None:
        return dist.inverse_cdf(q)
    return inverse_sup(dist.f_low, q)
