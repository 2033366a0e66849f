"""routepool: base node pools, subsampled routing instances, anytime solvers, benchmarks.

Pipeline: draw a large seeded pool from an underlying distribution (gen),
subsample train/test/epoch instance sets from it (subsample), solve them
with deterministic anytime heuristics under per-instance time budgets
(solve), and report percentage gaps against a reference solver (bench).
"""

__version__ = "0.1.0"

from .core import (
    Feasibility,
    Instance,
    Node,
    Problem,
    Provenance,
    Solution,
    StructuralMismatch,
    Violation,
    check_feasible,
    distance,
    evaluate,
)
from .gen import (
    DemandScheme,
    DepotScheme,
    DistributionSpec,
    DistributionTag,
    InvalidCount,
    SchemeMismatch,
    default_capacity,
    sample_coords,
    sample_demands,
    sample_depot,
    sample_explosion,
    sample_rotation,
    sample_uniform,
    sample_x,
)
from .subsample import (
    BaseNodeDistribution,
    Dataset,
    LabelMismatch,
    Role,
    SeedCollision,
    SeedRegistry,
    SizeExceedsBase,
    attach_labels,
    build_base,
    compute_base_id,
    make_epoch,
    make_test,
    make_train,
    subsample_instance,
)
from .solve import (
    Algorithm,
    SolverConfig,
    SolveTrace,
    config_for_name,
    construct_nearest_neighbor,
    construct_savings,
    exact_cvrp,
    exact_tsp,
    local_search,
    simulated_annealing,
    solve,
)
from .bench import BenchmarkReport, RunRecord, gap, run_benchmark, summarize
