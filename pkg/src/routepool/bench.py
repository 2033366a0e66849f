"""Time-budgeted benchmark harness reporting percentage gaps to a reference solver.

Every (solver, budget, instance) cell runs once (or `repeats` times) under a
per-instance wall-clock budget; gaps are computed against the reference
solver's cost at the same budget tier.  Failed cells are recorded as
missing, never as zero gaps.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .core import evaluate
from .rng import mix
from .solve import Algorithm, SolverConfig, solve
from .subsample import Dataset

GAP_EPS = 1e-9


class NonpositiveReference(ValueError):
    pass


def gap(z: float, z_ref: float) -> float:
    """Percentage gap 100 * (z - z_ref) / z_ref; negative means z beat the reference."""
    if z_ref <= 0:
        raise NonpositiveReference(f"reference cost must be positive, got {z_ref}")
    return (100.0 * (z - z_ref)) / z_ref


@dataclass(frozen=True)
class RunRecord:
    dataset: str
    instance_index: int
    solver: str
    budget: float
    seed: int
    cost: Optional[float] = None
    wall_time: Optional[float] = None
    iterations: Optional[int] = None
    gap_percent: Optional[float] = None
    cost_std: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.cost is not None


@dataclass(frozen=True)
class AggregateRow:
    dataset: str
    solver: str
    budget: float
    mean_gap: Optional[float]
    mean_time: Optional[float]
    n_ok: int
    n_failed: int


@dataclass(frozen=True)
class BenchmarkReport:
    dataset: str
    reference: str
    solvers: tuple[str, ...]
    budgets: tuple[float, ...]
    records: tuple[RunRecord, ...]
    solver_configs: dict

    @property
    def has_failures(self) -> bool:
        return any(not r.ok for r in self.records)

    def aggregates(self) -> list[AggregateRow]:
        return aggregate_records(self.records)


def aggregate_records(records: Sequence[RunRecord]) -> list[AggregateRow]:
    """Arithmetic mean gap and time per (dataset, solver, budget); no trimming."""
    groups: dict[tuple[str, str, float], list[RunRecord]] = {}
    order: list[tuple[str, str, float]] = []
    for r in records:
        key = (r.dataset, r.solver, r.budget)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    rows = []
    for key in order:
        # canonical instance order keeps float sums permutation-invariant
        cells = sorted(groups[key], key=lambda c: c.instance_index)
        gaps = [c.gap_percent for c in cells if c.gap_percent is not None]
        times = [c.wall_time for c in cells if c.ok and c.wall_time is not None]
        rows.append(
            AggregateRow(
                dataset=key[0],
                solver=key[1],
                budget=key[2],
                mean_gap=sum(gaps) / len(gaps) if gaps else None,
                mean_time=sum(times) / len(times) if times else None,
                n_ok=sum(1 for c in cells if c.ok),
                n_failed=sum(1 for c in cells if not c.ok),
            )
        )
    return rows


def dataset_label(dataset: Dataset) -> str:
    return f"{dataset.spec.tag.value}-{dataset.problem.value}-n{dataset.n}-{dataset.base_id[:8]}"


def _pin_worker(cores: Sequence[int]) -> None:
    # Best effort: pin each worker to one physical core so timed budgets are honest.
    try:
        pid = os.getpid()
        core = cores[pid % len(cores)]
        os.sched_setaffinity(0, {core})
    except (AttributeError, OSError):
        pass


def _run_cell(args):
    instance, config, max_steps = args
    if max_steps is not None:
        config = dataclasses.replace(config, params={**config.params, "max_steps": max_steps})
    trace = solve(instance, config)
    cost = evaluate(instance, trace.best)  # never trust the solver's cached cost
    return cost, trace.wall_time, trace.iterations


def run_benchmark(
    dataset: Dataset,
    solvers: dict[str, SolverConfig],
    budgets: Sequence[float],
    reference: str,
    jobs: int = 1,
    repeats: int = 1,
    timed: bool = True,
    label: Optional[str] = None,
    iteration_caps: Optional[dict] = None,
) -> BenchmarkReport:
    """Run the full (solver x budget x instance) sweep and gap it against `reference`.

    `iteration_caps` maps (solver, budget, index) to a recorded step count for
    exact replay; replayed cells ignore the wall clock.
    """
    if reference not in solvers:
        raise ValueError(f"reference solver {reference!r} not among solvers {sorted(solvers)}")
    if any(b <= 0 for b in budgets):
        raise ValueError("budgets must be positive")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    ncores = os.cpu_count() or 1
    if timed and jobs > ncores:
        raise ValueError(f"timed mode refuses to oversubscribe: jobs={jobs} > cores={ncores}")

    name = label if label is not None else dataset_label(dataset)
    tasks = []
    keys = []
    for budget in budgets:
        for solver_name, base_config in solvers.items():
            for index, instance in enumerate(dataset.instances):
                for rep in range(repeats):
                    seed = base_config.seed if rep == 0 else mix(base_config.seed, rep)
                    config = dataclasses.replace(
                        base_config, budget_seconds=budget, seed=seed
                    )
                    cap = None
                    if iteration_caps is not None:
                        cap = iteration_caps.get((solver_name, budget, index))
                        if cap is not None:
                            config = dataclasses.replace(config, budget_seconds=1e9)
                    tasks.append((instance, config, cap))
                    keys.append((budget, solver_name, index, rep, config.seed))

    if jobs == 1:
        raw = [_run_cell_safe(t) for t in tasks]
    else:
        cores = sorted(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else list(range(ncores))
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_pin_worker, initargs=(cores,)
        ) as pool:
            raw = list(pool.map(_run_cell_safe, tasks, chunksize=1))

    # collapse repeats into one logical cell
    cells: dict[tuple[float, str, int], dict] = {}
    for key, outcome in zip(keys, raw):
        budget, solver_name, index, rep, seed = key
        cell = cells.setdefault(
            (budget, solver_name, index), {"costs": [], "times": [], "iters": [], "seed": seed, "error": None}
        )
        if rep == 0:
            cell["seed"] = seed
        if isinstance(outcome, str):
            cell["error"] = outcome
        else:
            cost, wall, iters = outcome
            cell["costs"].append(cost)
            cell["times"].append(wall)
            cell["iters"].append(iters)

    records: list[RunRecord] = []
    for budget in budgets:
        ref_costs: dict[int, Optional[float]] = {}
        for index in range(len(dataset.instances)):
            cell = cells[(budget, reference, index)]
            ref_costs[index] = _mean(cell["costs"]) if cell["error"] is None and cell["costs"] else None
        for solver_name in solvers:
            for index in range(len(dataset.instances)):
                cell = cells[(budget, solver_name, index)]
                if cell["error"] is not None or not cell["costs"]:
                    records.append(
                        RunRecord(name, index, solver_name, budget, cell["seed"], error=cell["error"] or "no result")
                    )
                    continue
                cost = _mean(cell["costs"])
                ref = ref_costs[index]
                cell_gap = None
                if ref is not None:
                    cell_gap = 0.0 if solver_name == reference else gap(cost, ref)
                records.append(
                    RunRecord(
                        dataset=name,
                        instance_index=index,
                        solver=solver_name,
                        budget=budget,
                        seed=cell["seed"],
                        cost=cost,
                        wall_time=_mean(cell["times"]),
                        iterations=max(cell["iters"]),
                        gap_percent=cell_gap,
                        cost_std=_std(cell["costs"]),
                    )
                )

    return BenchmarkReport(
        dataset=name,
        reference=reference,
        solvers=tuple(solvers),
        budgets=tuple(budgets),
        records=tuple(records),
        solver_configs={k: config_to_dict(v) for k, v in solvers.items()},
    )


def _run_cell_safe(task):
    try:
        return _run_cell(task)
    except Exception as exc:  # per-cell failures never abort the sweep
        return f"{type(exc).__name__}: {exc}"


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _std(values: Sequence[float]) -> Optional[float]:
    if len(values) < 2:
        return None
    m = _mean(values)
    return (sum((v - m) ** 2 for v in values) / (len(values) - 1)) ** 0.5


def replay_caps(report: BenchmarkReport) -> dict:
    """Iteration caps keyed by (solver, budget, index) for exact replay."""
    return {
        (r.solver, r.budget, r.instance_index): r.iterations
        for r in report.records
        if r.iterations is not None
    }


# ---------------------------------------------------------------------------
# serialization

def config_to_dict(config: SolverConfig) -> dict:
    return {
        "algorithm": config.algorithm.value,
        "budget_seconds": config.budget_seconds,
        "seed": config.seed,
        "params": dict(config.params),
    }


def config_from_dict(d: dict) -> SolverConfig:
    return SolverConfig(
        algorithm=Algorithm(d["algorithm"]),
        budget_seconds=d["budget_seconds"],
        seed=d["seed"],
        params=dict(d.get("params", {})),
    )


def report_to_dict(report: BenchmarkReport) -> dict:
    return {
        "format": "routepool-report",
        "version": 1,
        "dataset": report.dataset,
        "reference": report.reference,
        "solvers": list(report.solvers),
        "budgets": list(report.budgets),
        "solver_configs": report.solver_configs,
        "records": [dataclasses.asdict(r) for r in report.records],
    }


def report_from_dict(d: dict) -> BenchmarkReport:
    if d.get("format") != "routepool-report" or d.get("version") != 1:
        raise ValueError("not a version-1 routepool report")
    return BenchmarkReport(
        dataset=d["dataset"],
        reference=d["reference"],
        solvers=tuple(d["solvers"]),
        budgets=tuple(d["budgets"]),
        records=tuple(RunRecord(**r) for r in d["records"]),
        solver_configs=dict(d.get("solver_configs", {})),
    )


def save_report(report: BenchmarkReport, path: Path | str) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")


def load_report(path: Path | str) -> BenchmarkReport:
    return report_from_dict(json.loads(Path(path).read_text()))


CELL_FIELDS = (
    "dataset",
    "solver",
    "budget",
    "instance_index",
    "seed",
    "cost",
    "wall_time",
    "iterations",
    "gap_percent",
    "cost_std",
    "error",
)


def cells_to_csv(records: Sequence[RunRecord]) -> str:
    """One CSV row per cell; floats exported with full round-trip precision."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CELL_FIELDS)
    for r in records:
        writer.writerow(
            [
                r.dataset,
                r.solver,
                repr(r.budget),
                r.instance_index,
                r.seed,
                "" if r.cost is None else repr(r.cost),
                "" if r.wall_time is None else repr(r.wall_time),
                "" if r.iterations is None else r.iterations,
                "" if r.gap_percent is None else repr(r.gap_percent),
                "" if r.cost_std is None else repr(r.cost_std),
                r.error or "",
            ]
        )
    return out.getvalue()


def cells_from_csv(text: str) -> list[RunRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CELL_FIELDS:
        raise ValueError("unrecognized cells CSV header")
    records = []
    for row in rows[1:]:
        rec = dict(zip(CELL_FIELDS, row))
        records.append(
            RunRecord(
                dataset=rec["dataset"],
                solver=rec["solver"],
                budget=float(rec["budget"]),
                instance_index=int(rec["instance_index"]),
                seed=int(rec["seed"]),
                cost=float(rec["cost"]) if rec["cost"] else None,
                wall_time=float(rec["wall_time"]) if rec["wall_time"] else None,
                iterations=int(rec["iterations"]) if rec["iterations"] else None,
                gap_percent=float(rec["gap_percent"]) if rec["gap_percent"] else None,
                cost_std=float(rec["cost_std"]) if rec["cost_std"] else None,
                error=rec["error"] or None,
            )
        )
    return records


# ---------------------------------------------------------------------------
# rendering

def summarize(reports: BenchmarkReport | Sequence[BenchmarkReport]) -> tuple[str, str]:
    """(aligned text table, aggregate CSV) for one report or a report collection.

    Rows are grouped by budget tier with one row per dataset and one gap
    column per solver; negative gaps are flagged because they mean the
    solver outperformed the reference within the same budget.
    """
    if isinstance(reports, BenchmarkReport):
        reports = [reports]
    rows = [row for report in reports for row in report.aggregates()]
    solvers: list[str] = []
    for report in reports:
        for s in report.solvers:
            if s not in solvers:
                solvers.append(s)
    budgets: list[float] = []
    datasets: list[str] = []
    for report in reports:
        for b in report.budgets:
            if b not in budgets:
                budgets.append(b)
        if report.dataset not in datasets:
            datasets.append(report.dataset)

    by_key = {(r.dataset, r.solver, r.budget): r for r in rows}
    width = max([len(d) for d in datasets] + [7]) + 2
    col = max([len(s) for s in solvers] + [10]) + 2
    lines = []
    has_negative = False
    header = "dataset".ljust(width) + "".join(s.rjust(col) for s in solvers)
    for b in budgets:
        lines.append(f"== budget T_MAX = {b:g} s " + "=" * max(4, width + col * len(solvers) - 24 - len(f"{b:g}")))
        lines.append(header)
        for dname in datasets:
            cells = []
            for s in solvers:
                row = by_key.get((dname, s, b))
                if row is None or row.mean_gap is None:
                    cells.append("—".rjust(col))
                else:
                    mark = "*" if row.mean_gap < 0 else ""
                    if row.mean_gap < 0:
                        has_negative = True
                    cells.append(f"{row.mean_gap:+.3f}{mark}".rjust(col))
            lines.append(dname.ljust(width) + "".join(cells))
        lines.append("")
    if has_negative:
        lines.append("* negative gap: solver outperforms the reference under the same budget")
    text = "\n".join(lines).rstrip() + "\n"

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["dataset", "solver", "budget", "mean_gap", "mean_time"])
    for r in rows:
        writer.writerow(
            [
                r.dataset,
                r.solver,
                repr(r.budget),
                "" if r.mean_gap is None else repr(r.mean_gap),
                "" if r.mean_time is None else repr(r.mean_time),
            ]
        )
    return text, out.getvalue()
