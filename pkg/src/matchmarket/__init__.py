"""Stochastic mate search with marriage thresholds.

A population of ``N`` agents holds random mutual affinities. Each step pairs
unmarried agents at random; a pair becomes a couple when both prefer each
other to their current situation, and couples whose utilities pass a
threshold marry for good. The package simulates this, solves its large-N
evolution equations (exactly for the Uniform model) and compares it with
the Gale-Shapley stable matching of the same society.
"""

__version__ = "0.1.0"

from ._backend import BACKEND, compiled_available
from .errors import MatchMarketError
from .matcher import (
    MarriagePolicy,
    MatchPlan,
    PartitionSpec,
    PolicyKind,
    PopulationState,
    Trajectory,
    draw_pairing,
    draw_partitioned_plan,
    evolve_step,
    run_trajectory,
)
from .model import (
    AffinityMatrix,
    DistributionSpec,
    Family,
    RngStream,
    affine_map,
    build_affinity,
)
from .stable import (
    BipartiteInstance,
    StableMatching,
    blocking_pairs,
    gale_shapley,
    matching_avg_utility,
    random_bipartition,
    verify_stability,
)
from .stats import (
    Direction,
    Histogram,
    StepStats,
    adaptive_threshold,
    cohort_select,
    histogram,
    summarize_step,
    summarize_trajectory,
)
