"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.  The timing-sensitive criteria (5 and 7) dominate
the runtime; the whole suite stays well inside its stated budgets.
"""

import json
import math
import os
import re
import shutil
import time

import numpy as np
import pytest
from scipy import stats

from routepool import (
    DemandScheme,
    DepotScheme,
    DistributionSpec,
    DistributionTag,
    bench,
    build_base,
    check_feasible,
    construct_nearest_neighbor,
    construct_savings,
    exact_cvrp,
    exact_tsp,
    gap,
    interop,
    local_search,
    make_test,
    simulated_annealing,
    subsample_instance,
)
from routepool.bench import run_benchmark
from routepool.cli import main as cli_main
from routepool.rng import make_rng
from routepool.solve import Algorithm, SolverConfig, config_for_name


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


def spec_pair(tag: DistributionTag) -> tuple[DistributionSpec, DistributionSpec]:
    """(TSP spec, CVRP spec) for one underlying distribution."""
    if tag in (DistributionTag.X_CLUSTERED, DistributionTag.X_RANDOM_CLUSTERED):
        return (
            DistributionSpec(DistributionTag.X_CLUSTERED),
            DistributionSpec(
                DistributionTag.X_RANDOM_CLUSTERED, DemandScheme.UNITARY, DepotScheme.RANDOM
            ),
        )
    return (
        DistributionSpec(tag),
        DistributionSpec(tag, DemandScheme.UNIFORM_1_9, DepotScheme.RANDOM),
    )


# the seven dataset geometries: (label, distribution, N_base), N=100, L_test=128
GEOMETRIES = [
    ("unif-10k", DistributionTag.UNIFORM, 10_000),
    ("x-10k", DistributionTag.X_CLUSTERED, 10_000),
    ("x-200", DistributionTag.X_CLUSTERED, 200),
    ("exp-10k", DistributionTag.EXPLOSION, 10_000),
    ("exp-200", DistributionTag.EXPLOSION, 200),
    ("ro-10k", DistributionTag.ROTATION, 10_000),
    ("ro-500", DistributionTag.ROTATION, 500),
]

N = 100
L_TEST = 128


def test_criterion_1_reproducible_sampling(tmp_path):
    started = time.perf_counter()

    def build_all(root):
        root.mkdir(exist_ok=True)
        for label, tag, n_base in GEOMETRIES:
            for kind, spec in zip(("tsp", "cvrp"), spec_pair(tag)):
                pool = build_base(spec, n_base, master_seed=9000 + n_base)
                dataset = make_test(pool, N, test_seed=400 + n_base, l_test=L_TEST)
                interop.save_dataset(dataset, root / f"{label}-{kind}.json")

    build_all(tmp_path / "run1")
    build_all(tmp_path / "run2")
    mismatches = []
    for label, _, _ in GEOMETRIES:
        for kind in ("tsp", "cvrp"):
            a = (tmp_path / "run1" / f"{label}-{kind}.json").read_bytes()
            b = (tmp_path / "run2" / f"{label}-{kind}.json").read_bytes()
            if a != b:
                mismatches.append(f"{label}-{kind}")
    elapsed = time.perf_counter() - started
    report(
        "1",
        not mismatches and elapsed < 30.0,
        f"7 geometries x 2 problem classes byte-identical across runs in {elapsed:.1f}s "
        f"(mismatches: {mismatches or 'none'})",
    )


def test_criterion_2_depot_invariant():
    pools = [
        build_base(
            DistributionSpec(DistributionTag.UNIFORM, DemandScheme.UNIFORM_1_9, DepotScheme.RANDOM),
            300,
            71,
        ),
        build_base(
            DistributionSpec(
                DistributionTag.X_RANDOM_CLUSTERED, DemandScheme.UNITARY, DepotScheme.RANDOM
            ),
            300,
            72,
        ),
    ]
    rng = make_rng(515)
    violations = 0
    for case in range(10_000):
        pool = pools[case % 2]
        n = int(rng.integers(1, 51))
        inst = subsample_instance(pool, n, int(rng.integers(0, 2**32)), case)
        head = inst.nodes[0]
        if head.demand != 0 or (head.x, head.y) != (pool.depot.x, pool.depot.y):
            violations += 1
    report("2", violations == 0, f"10^4 fuzzed CVRP subsamples, {violations} depot violations")


def test_criterion_3_subsample_marginals():
    started = time.perf_counter()
    pool = build_base(DistributionSpec(DistributionTag.UNIFORM), 200, 2025)
    counts = [0] * 200
    draws = 10_000
    for i in range(draws):
        for p in subsample_instance(pool, 100, 555, i).provenance.pool_indices:
            counts[p] += 1
    freqs = [c / draws for c in counts]
    worst = max(abs(f - 0.5) for f in freqs)
    elapsed = time.perf_counter() - started
    report(
        "3",
        worst <= 0.02 and elapsed < 60.0,
        f"per-node inclusion frequency 0.5 +/- {worst:.4f} over 10^4 draws in {elapsed:.1f}s",
    )


def test_criterion_4_distribution_signatures():
    started = time.perf_counter()
    problems = []

    # uniform: per-axis KS vs U(0,1) below the alpha=0.01 critical value
    n = 100_000
    pool = build_base(DistributionSpec(DistributionTag.UNIFORM), n, 81)
    pts = np.array([(v.x, v.y) for v in pool.nodes])
    critical = 1.628 / math.sqrt(n)
    for axis in range(2):
        statistic = stats.kstest(pts[:, axis], "uniform").statistic
        if statistic >= critical:
            problems.append(f"KS axis {axis}: {statistic:.5f} >= {critical:.5f}")

    # explosion: empty hole of radius 0.3*(1-1e-9) around (0.5, 0.5)
    for n_base, seed in ((10_000, 82), (200, 83)):
        pool = build_base(DistributionSpec(DistributionTag.EXPLOSION), n_base, seed)
        d = np.array([math.hypot(v.x - 0.5, v.y - 0.5) for v in pool.nodes])
        inside = int((d < 0.3 * (1 - 1e-9)).sum())
        if inside:
            problems.append(f"explosion pool {n_base}: {inside} points in the hole")

    # X: all pre-normalization coordinates integral on the [0, 999]^2 grid
    for spec, seed in (
        (DistributionSpec(DistributionTag.X_CLUSTERED), 84),
        (
            DistributionSpec(
                DistributionTag.X_RANDOM_CLUSTERED, DemandScheme.UNITARY, DepotScheme.RANDOM
            ),
            85,
        ),
    ):
        pool = build_base(spec, 10_000, seed)
        grid = np.array([(v.x * 999, v.y * 999) for v in pool.nodes])
        residue = np.abs(grid - np.round(grid)).max()
        if residue > 1e-9 or grid.min() < 0 or grid.max() > 999:
            problems.append(f"{spec.tag.value}: grid residue {residue:.2e}")

    # rotation: every drawn angle lies in [1.2, 1.9]
    for seed in range(100):
        pool = build_base(DistributionSpec(DistributionTag.ROTATION), 50, seed)
        if not 1.2 <= pool.meta["angle"] <= 1.9:
            problems.append(f"rotation seed {seed}: angle {pool.meta['angle']}")

    elapsed = time.perf_counter() - started
    report(
        "4",
        not problems and elapsed < 60.0,
        f"uniform KS, explosion hole, X grid, rotation angles all hold in {elapsed:.1f}s "
        f"({problems or 'no violations'})",
    )


def test_criterion_5_oracle_equivalence():
    started = time.perf_counter()
    tsp_pool = build_base(DistributionSpec(DistributionTag.UNIFORM), 200, 31)
    sa_hits = sa_beats = 0
    two_opt_gaps = []
    for i in range(100):
        inst = subsample_instance(tsp_pool, 10, 77, i)
        opt = exact_tsp(inst)
        trace = simulated_annealing(
            inst, SolverConfig(Algorithm.SIMULATED_ANNEALING, budget_seconds=1.0, seed=i)
        )
        if trace.best.cost < opt.cost - 1e-9:
            sa_beats += 1
        if abs(trace.best.cost - opt.cost) <= 1e-9 * max(1.0, opt.cost):
            sa_hits += 1
        nn = construct_nearest_neighbor(inst, i)
        two = local_search(inst, nn, SolverConfig(Algorithm.TWO_OPT, budget_seconds=5.0, seed=i))
        two_opt_gaps.append(100 * (two.best.cost - opt.cost) / opt.cost)
    two_opt_mean = sum(two_opt_gaps) / len(two_opt_gaps)

    cvrp_pool = build_base(
        DistributionSpec(DistributionTag.UNIFORM, DemandScheme.UNIFORM_1_9, DepotScheme.RANDOM),
        200,
        32,
    )
    ls_beats = 0
    ls_gaps = []
    for i in range(100):
        inst = subsample_instance(cvrp_pool, 8, 88, i)
        opt = exact_cvrp(inst)
        start = construct_savings(inst)
        trace = local_search(
            inst, start, SolverConfig(Algorithm.CVRP_LOCAL_SEARCH, budget_seconds=5.0, seed=i)
        )
        if trace.best.cost < opt.cost - 1e-9:
            ls_beats += 1
        ls_gaps.append(100 * (trace.best.cost - opt.cost) / opt.cost)
    ls_mean = sum(ls_gaps) / len(ls_gaps)

    elapsed = time.perf_counter() - started
    ok = (
        sa_hits >= 95
        and sa_beats == 0
        and two_opt_mean <= 5.0
        and ls_beats == 0
        and ls_mean <= 10.0
        and elapsed < 600.0
    )
    report(
        "5",
        ok,
        f"SA optimum {sa_hits}/100 (beats: {sa_beats}), 2-opt mean gap {two_opt_mean:.2f}%, "
        f"CVRP LS mean gap {ls_mean:.2f}% (beats: {ls_beats}) in {elapsed:.0f}s",
    )


def test_criterion_6_gap_metric_exactness():
    z_ref = 10.0
    checks = [
        gap(z_ref, z_ref) == 0.0,
        gap(11.0, z_ref) == 10.0,  # 11 = 1.1 * 10 exactly
        gap(0.95776, 1.0) == pytest.approx(-4.224, abs=1e-9),
    ]
    pool = build_base(DistributionSpec(DistributionTag.UNIFORM), 50, 61)
    dataset = make_test(pool, 10, 62, l_test=4)
    rep = run_benchmark(
        dataset,
        {"sa": config_for_name("sa", dataset.problem, seed=1)},
        budgets=[0.02],
        reference="sa",
    )
    checks.append(all(r.gap_percent == 0.0 for r in rep.records))
    report(
        "6",
        all(checks),
        "gap(z,z)=0, gap(1.1 z, z)=10.0 exactly, reference self-column identically 0",
    )


def test_criterion_7_budget_compliance_and_anytime_monotonicity():
    started = time.perf_counter()
    pool = build_base(DistributionSpec(DistributionTag.UNIFORM), 200, 73)
    dataset = make_test(pool, N, 74, l_test=L_TEST)
    solvers = {"sa": config_for_name("sa", dataset.problem, seed=5)}
    budgets = (0.1, 0.7, 5.0)
    jobs_for = {0.1: 1, 0.7: min(2, os.cpu_count() or 1), 5.0: min(2, os.cpu_count() or 1)}
    mean_cost = {}
    overshoots = []
    for budget in budgets:
        rep = run_benchmark(dataset, solvers, [budget], reference="sa", jobs=jobs_for[budget])
        costs = [r.cost for r in rep.records]
        mean_cost[budget] = sum(costs) / len(costs)
        for r in rep.records:
            if r.wall_time > budget * 1.05:
                overshoots.append((budget, r.instance_index, round(r.wall_time, 4)))
    monotone = mean_cost[0.7] <= mean_cost[0.1] and mean_cost[5.0] <= mean_cost[0.7]
    elapsed = time.perf_counter() - started
    report(
        "7",
        not overshoots and monotone and elapsed < 1200.0,
        f"wall <= 1.05 x budget on {3 * L_TEST} runs (overshoots: {overshoots or 'none'}), "
        f"mean cost {mean_cost[0.1]:.4f} -> {mean_cost[0.7]:.4f} -> {mean_cost[5.0]:.4f} "
        f"non-increasing in budget, in {elapsed:.0f}s",
    )


def test_criterion_8_structural_reproduction_of_tables(tmp_path):
    # 7 datasets x 2 solvers x 3 budget tiers through cmd_bench
    dataset_files = []
    for label, tag, n_base in GEOMETRIES:
        spec = spec_pair(tag)[0]
        pool = build_base(spec, min(n_base, 500), master_seed=8000 + n_base)
        dataset = make_test(pool, 20, test_seed=100, l_test=4)
        path = tmp_path / f"{label}.json"
        interop.save_dataset(dataset, path)
        dataset_files.append(str(path))
    out = tmp_path / "bench"
    code = cli_main(
        ["bench", "--dataset", *dataset_files, "--solvers", "sa,greedy",
         "--budgets", "0.02,0.05,0.1", "--reference", "greedy", "--seed", "3",
         "--out", str(out)]
    )
    summary = (out / "summary.txt").read_text()
    tiers = len(re.findall(r"T_MAX = ", summary))
    reports = list(out.glob("report-*.json"))
    per_dataset_rows = all(
        len(json.loads(p.read_text())["records"]) == 2 * 3 * 4 for p in reports
    )
    negative_flagged = "outperforms the reference" in summary and "*" in summary
    ok = (
        code == 0
        and tiers == 3
        and len(reports) == 7
        and per_dataset_rows
        and negative_flagged
    )
    report(
        "8",
        ok,
        f"report grid: {len(reports)} datasets x 3 tiers x 2 solver columns, "
        f"negative gaps flagged as outperforming the reference",
    )


@pytest.mark.skipif(shutil.which("LKH") is None, reason="optional: LKH3 binary not installed")
def test_criterion_9a_lkh_adapter():
    pool = build_base(DistributionSpec(DistributionTag.UNIFORM), 50, 91)
    bound = 2 * 10 / interop.DEFAULT_SCALE
    for i in range(5):
        inst = subsample_instance(pool, 10, 92, i)
        sol = interop.run_lkh(inst, budget=2.0)
        opt = exact_tsp(inst)
        assert abs(sol.cost - opt.cost) <= bound
    report("9a", True, "LKH matches exact_tsp within the rounding bound")


@pytest.mark.skipif(shutil.which("hgs") is None, reason="optional: HGS binary not installed")
def test_criterion_9b_hgs_adapter():
    pool = build_base(
        DistributionSpec(DistributionTag.UNIFORM, DemandScheme.UNIFORM_1_9, DepotScheme.RANDOM),
        300,
        93,
    )
    dataset = make_test(pool, 30, 94, l_test=128)
    for inst in dataset.instances:
        sol = interop.run_hgs(inst, budget=1.0)
        assert check_feasible(inst, sol).ok
    report("9b", True, "HGS solutions pass feasibility re-validation on 128 instances")
