"""Exact solvers and Monte Carlo checks for extremal planar matchings of
random bipartite graphs."""

from .core import (
    BipartiteInstance,
    Edge,
    PlanarMatching,
    count_length_bounded_edges,
    edge_length,
    read_instance,
    validate_planar,
    write_instance,
)
from .solvers import (
    ConflictGraph,
    MaxSizeResult,
    MinWeightResult,
    brute_force_max_size,
    brute_force_min_weight,
    build_conflict_graph,
    greedy_stable_set,
    max_size_planar,
    min_weight_planar,
    segmentation_matching,
)
from .stochastic import (
    EdgeProbabilityModel,
    SeedSpec,
    WeightDistribution,
    average_edge_probability,
    quantile_s,
    quantile_t,
    sample_states,
    sample_weights,
)

__version__ = "0.1.0"
