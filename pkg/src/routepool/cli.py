"""Command-line surface: generate pools, mint datasets, solve, benchmark, export, plot.

Every subcommand prints its fully resolved configuration before acting and
is idempotent for identical flags and seeds.  Exit codes: 0 ok, 2 invalid
input, 3 seed-policy violation, 4 partial benchmark failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from pathlib import Path

from . import __version__, bench, interop
from .core import Problem
from .gen import DemandScheme, DepotScheme, DistributionSpec, DistributionTag
from .solve import SOLVER_ALIASES, TooLarge, config_for_name, exact_cvrp, exact_tsp, solve
from .subsample import (
    SeedCollision,
    SeedRegistry,
    attach_labels,
    build_base,
    make_epoch,
    make_test,
    make_train,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SEED_POLICY = 3
EXIT_PARTIAL_FAILURE = 4

DIST_CHOICES = ("uniform", "explosion", "rotation", "x-c", "x-rc")

_TAG_BY_DIST = {
    "uniform": DistributionTag.UNIFORM,
    "explosion": DistributionTag.EXPLOSION,
    "rotation": DistributionTag.ROTATION,
    "x-c": DistributionTag.X_CLUSTERED,
    "x-rc": DistributionTag.X_RANDOM_CLUSTERED,
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


def _print_config(args: argparse.Namespace) -> None:
    print("resolved configuration:")
    for key in sorted(vars(args)):
        if key in ("func", "config"):
            continue
        print(f"  {key} = {getattr(args, key)}")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _update_manifest(out: Path, entries: list[dict]) -> None:
    manifest_path = out / "manifest.json"
    manifest = {"artifacts": {}}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
    for entry in entries:
        path = out / entry["file"]
        entry = dict(entry)
        entry["sha256"] = hashlib.sha256(path.read_bytes()).hexdigest()
        manifest["artifacts"][entry["file"]] = entry
    manifest["artifacts"] = dict(sorted(manifest["artifacts"].items()))
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _spec_for(dist: str, problem: str, demands: str) -> DistributionSpec:
    tag = _TAG_BY_DIST[dist]
    if problem == "tsp":
        if tag is DistributionTag.X_RANDOM_CLUSTERED:
            raise CliError("x-rc is a CVRP distribution (random depot plus demands)")
        return DistributionSpec(tag)
    if demands == "auto":
        scheme = (
            DemandScheme.UNITARY
            if tag is DistributionTag.X_RANDOM_CLUSTERED
            else DemandScheme.UNIFORM_1_9
        )
    else:
        scheme = DemandScheme.UNITARY if demands == "unitary" else DemandScheme.UNIFORM_1_9
    return DistributionSpec(tag, scheme, DepotScheme.RANDOM)


def _dataset_stem(dataset) -> str:
    stem = (
        f"{dataset.role.value}-{dataset.spec.tag.value}-{dataset.problem.value}"
        f"-n{dataset.n}-L{len(dataset)}-seed{dataset.sample_seed}"
    )
    if dataset.epoch is not None:
        stem += f"-e{dataset.epoch}"
    return stem


# ---------------------------------------------------------------------------
# subcommands

def cmd_gen_base(args) -> int:
    spec = _spec_for(args.dist, args.problem, args.demands)
    min_nodes = 1 if spec.is_cvrp else 2
    if args.n_base < min_nodes:
        raise CliError(f"--n-base must be >= {min_nodes} for {args.problem}")
    pool = build_base(spec, args.n_base, args.seed, capacity=args.capacity)
    out = _out_dir(args)
    filename = f"base-{pool.base_id}.json"
    interop.save_pool(pool, out / filename)
    _update_manifest(
        out,
        [{
            "file": filename,
            "kind": "pool",
            "base_id": pool.base_id,
            "dist": args.dist,
            "problem": args.problem,
            "n_base": args.n_base,
            "seed": args.seed,
        }],
    )
    print(f"pool written to {out / filename}")
    print(f"base_id {pool.base_id}")
    return EXIT_OK


def cmd_subsample(args) -> int:
    pool = interop.load_pool(args.base)
    out = _out_dir(args)
    registry = SeedRegistry(out / "seed-registry.json")
    length = args.length
    if length is None:
        length = 128 if args.role == "test" else 1000
    if args.role == "test":
        dataset = make_test(pool, args.n, args.seed, length, registry=registry)
    elif args.role == "train":
        dataset = make_train(pool, args.n, args.seed, length, registry=registry)
    else:
        if args.epoch is None:
            raise CliError("--epoch is required for --role epoch")
        dataset = make_epoch(pool, args.n, args.seed, args.epoch, length, registry=registry)
    stem = _dataset_stem(dataset)
    if args.role == "epoch":
        # epoch sets are the RL array surface; persist the canonical batch bytes
        filename = f"{stem}.bin"
        interop.save_epoch_batch(dataset, out / filename)
    else:
        filename = f"{stem}.json"
        interop.save_dataset(dataset, out / filename)
    _update_manifest(
        out,
        [{
            "file": filename,
            "kind": "epoch-batch" if args.role == "epoch" else "dataset",
            "base_id": dataset.base_id,
            "role": dataset.role.value,
            "n": dataset.n,
            "seed": dataset.sample_seed,
            "length": len(dataset),
        }],
    )
    print(f"dataset written to {out / filename}")
    return EXIT_OK


def cmd_solve(args) -> int:
    dataset = interop.load_dataset(args.dataset)
    config = config_for_name(args.solver, dataset.problem, args.budget, args.seed)
    out = _out_dir(args)
    runs = []
    for index, instance in enumerate(dataset.instances):
        trace = solve(instance, config)
        runs.append(
            {
                "index": index,
                "cost": trace.best.cost,
                "wall_time": trace.wall_time,
                "iterations": trace.iterations,
                "solution": interop.solution_to_dict(trace.best),
            }
        )
        print(f"instance {index:4d}  cost {trace.best.cost:.6f}  time {trace.wall_time:.3f}s")
    doc = {
        "format": "routepool-solutions",
        "version": 1,
        "dataset": bench.dataset_label(dataset),
        "solver": args.solver,
        "budget": args.budget,
        "seed": args.seed,
        "runs": runs,
    }
    filename = f"solutions-{_dataset_stem(dataset)}-{args.solver}.json"
    (out / filename).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _update_manifest(out, [{"file": filename, "kind": "solutions", "solver": args.solver}])
    mean = sum(r["cost"] for r in runs) / len(runs) if runs else float("nan")
    print(f"mean cost {mean:.6f} over {len(runs)} instances; written to {out / filename}")
    return EXIT_OK


def cmd_bench(args) -> int:
    budgets = [float(tok) for tok in args.budgets.split(",") if tok]
    solver_names = [tok.strip() for tok in args.solvers.split(",") if tok.strip()]
    if args.reference not in solver_names:
        raise CliError(f"--reference {args.reference!r} must be one of --solvers {solver_names}")
    datasets = [interop.load_dataset(p) for p in args.dataset]
    if args.replay and len(datasets) != 1:
        raise CliError("--replay works with exactly one dataset")
    out = _out_dir(args)
    jobs = args.jobs if args.jobs is not None else 1  # timed mode defaults to one worker
    reports = []
    failures = 0
    artifacts = []
    for dataset in datasets:
        solvers = {
            name: config_for_name(name, dataset.problem, budgets[0], args.seed)
            for name in solver_names
        }
        caps = None
        if args.replay:
            caps = bench.replay_caps(bench.load_report(args.replay))
        report = bench.run_benchmark(
            dataset,
            solvers,
            budgets,
            reference=args.reference,
            jobs=jobs,
            repeats=args.repeats,
            iteration_caps=caps,
        )
        reports.append(report)
        failures += sum(1 for r in report.records if not r.ok)
        label = report.dataset
        bench.save_report(report, out / f"report-{label}.json")
        (out / f"cells-{label}.csv").write_text(bench.cells_to_csv(report.records))
        artifacts += [
            {"file": f"report-{label}.json", "kind": "bench-report", "dataset": label},
            {"file": f"cells-{label}.csv", "kind": "bench-cells", "dataset": label},
        ]
    text, agg_csv = bench.summarize(reports)
    (out / "summary.txt").write_text(text)
    (out / "aggregates.csv").write_text(agg_csv)
    artifacts += [
        {"file": "summary.txt", "kind": "bench-summary"},
        {"file": "aggregates.csv", "kind": "bench-aggregates"},
    ]
    _update_manifest(out, artifacts)
    print(text)
    if failures:
        print(f"{failures} cells failed; see cells CSVs for diagnostics", file=sys.stderr)
        return EXIT_PARTIAL_FAILURE
    return EXIT_OK


def cmd_label(args) -> int:
    dataset = interop.load_dataset(args.dataset)
    out = _out_dir(args)
    solutions = []
    if args.solver == "exact":
        for instance in dataset.instances:
            try:
                sol = exact_tsp(instance) if instance.problem is Problem.TSP else exact_cvrp(instance)
            except TooLarge as exc:
                raise CliError(f"exact labeling impossible: {exc}") from exc
            solutions.append(sol)
    else:
        runner = interop.run_lkh if args.solver == "lkh" else interop.run_hgs
        try:
            for instance in dataset.instances:
                solutions.append(runner(instance, args.budget))
        except interop.BinaryNotFound as exc:
            print(f"labeling skipped: {exc}")
            return EXIT_OK
    labeled = attach_labels(dataset, solutions)
    filename = f"{_dataset_stem(labeled)}-labeled-{args.solver}.json"
    interop.save_dataset(labeled, out / filename)
    _update_manifest(out, [{"file": filename, "kind": "labeled-dataset", "solver": args.solver}])
    print(f"labeled dataset written to {out / filename}")
    return EXIT_OK


def cmd_export(args) -> int:
    dataset = interop.load_dataset(args.dataset)
    out = _out_dir(args)
    stem = _dataset_stem(dataset)
    ext = "vrp" if dataset.problem is Problem.CVRP else "tsp"
    entries = []
    for index, instance in enumerate(dataset.instances):
        filename = f"{stem}-i{index}.{ext}"
        (out / filename).write_text(interop.export_tsplib(instance, scale=args.scale))
        entries.append({"file": filename, "kind": "tsplib", "index": index})
    _update_manifest(out, entries)
    print(f"exported {len(entries)} instances to {out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plotsvg import render_pool_svg

    pool = interop.load_pool(args.base) if args.base else None
    instance = None
    title = ""
    if args.dataset:
        dataset = interop.load_dataset(args.dataset)
        instance = dataset.instances[args.instance]
        title = f"{bench.dataset_label(dataset)} instance {args.instance}"
    elif pool is not None:
        title = f"pool {pool.base_id} ({pool.spec.tag.value}, n_base={pool.n_base})"
    if pool is None and instance is None:
        raise CliError("pass --base and/or --dataset")
    svg = render_pool_svg(pool, instance, title=title)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(svg)
    print(f"plot written to {args.out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    doc = json.loads(Path(args.path).read_text())
    kind = doc.get("format", "unknown")
    print(f"format: {kind} (version {doc.get('version')})")
    if kind == interop.POOL_FORMAT:
        print(f"base_id: {doc['base_id']}")
        print(f"spec: {doc['spec']}")
        print(f"n_base: {doc['n_base']}  master_seed: {doc['master_seed']}  capacity: {doc['capacity']}")
        print(f"meta: {doc.get('meta')}")
    elif kind == interop.DATASET_FORMAT:
        print(f"base_id: {doc['base_id']}  role: {doc['role']}  problem: {doc['problem']}")
        print(f"n: {doc['n']}  length: {doc['length']}  seed: {doc['seed']}  epoch: {doc.get('epoch')}")
        print(f"labeled: {bool(doc.get('labels'))}")
    elif kind == "routepool-report":
        print(f"dataset: {doc['dataset']}  reference: {doc['reference']}")
        print(f"solvers: {doc['solvers']}  budgets: {doc['budgets']}")
        print(f"records: {len(doc['records'])}")
    else:
        print(json.dumps(doc, indent=2)[:2000])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="routepool",
        description="Base node pools, subsampled routing instances, anytime solvers, benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"routepool {__version__}")
    parser.add_argument("--config", help="INI file with per-subcommand default flags")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(func=func)
        return p

    p = add("gen-base", cmd_gen_base, "draw and persist a base node distribution")
    p.add_argument("--dist", choices=DIST_CHOICES, required=True)
    p.add_argument("--problem", choices=("tsp", "cvrp"), required=True)
    p.add_argument("--demands", choices=("auto", "uniform-1-9", "unitary"), default="auto")
    p.add_argument("--n-base", type=int, required=True, help="pool size N_base")
    p.add_argument("--capacity", type=int, default=None, help="vehicle capacity override")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default="out", help="output directory")

    p = add("subsample", cmd_subsample, "mint a test/train/epoch dataset from a pool")
    p.add_argument("--base", required=True, help="pool file from gen-base")
    p.add_argument("--n", type=int, required=True, help="instance size N")
    p.add_argument("--role", choices=("test", "train", "epoch"), default="test")
    p.add_argument("--epoch", type=int, default=None, help="epoch number (role=epoch)")
    p.add_argument("--length", type=int, default=None, help="dataset length (test default 128)")
    p.add_argument("--seed", type=int, default=0, help="sample seed")
    p.add_argument("--out", default="out")

    p = add("solve", cmd_solve, "run one solver over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--solver", choices=SOLVER_ALIASES, default="sa")
    p.add_argument("--budget", type=float, default=1.0, help="per-instance budget T_MAX seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")

    p = add("bench", cmd_bench, "benchmark solvers across budget tiers")
    p.add_argument("--dataset", nargs="+", required=True, help="one or more dataset files")
    p.add_argument("--solvers", default="sa,ls", help="comma-separated solver names")
    p.add_argument("--budgets", default="0.7,5,50", help="comma-separated T_MAX tiers")
    p.add_argument("--reference", default="sa", help="reference solver for gaps")
    p.add_argument("--repeats", type=int, default=1, help="repeated runs per cell")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (timed default: 1)")
    p.add_argument("--replay", default=None, help="report file with recorded iteration caps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")

    p = add("label", cmd_label, "attach reference solutions to a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--solver", choices=("exact", "lkh", "hgs"), default="exact")
    p.add_argument("--budget", type=float, default=10.0, help="per-instance budget for lkh/hgs")
    p.add_argument("--out", default="out")

    p = add("export", cmd_export, "export a dataset as TSPLIB files")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scale", type=int, default=interop.DEFAULT_SCALE)
    p.add_argument("--out", default="out")

    p = add("plot", cmd_plot, "render a pool and/or instance as SVG")
    p.add_argument("--base", default=None, help="pool file")
    p.add_argument("--dataset", default=None, help="dataset file (overlays one instance)")
    p.add_argument("--instance", type=int, default=0, help="instance index to overlay")
    p.add_argument("--out", default="plot.svg", help="output SVG path")

    p = add("inspect", cmd_inspect, "summarize a pool/dataset/report file")
    p.add_argument("--path", required=True)

    return parser


def _merge_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Apply INI-file values as subparser defaults; explicit flags still win."""
    if "--config" not in argv:
        return
    config_path = argv[argv.index("--config") + 1]
    command = next((a for a in argv if not a.startswith("-") and a != config_path), None)
    if command is None:
        return
    ini = configparser.ConfigParser()
    ini.read(config_path)
    if command not in ini:
        return
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    subparser = sub_actions[0].choices.get(command)
    if subparser is None:
        return
    overrides = {}
    for action in subparser._actions:
        key = action.dest.replace("_", "-")
        if key in ini[command] or action.dest in ini[command]:
            raw = ini[command].get(key, ini[command].get(action.dest))
            if action.nargs in ("+", "*"):
                overrides[action.dest] = raw.split()
            elif action.type is not None:
                overrides[action.dest] = action.type(raw)
            else:
                overrides[action.dest] = raw
    subparser.set_defaults(**overrides)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _merge_config_file(parser, argv)
    except (OSError, configparser.Error, ValueError) as exc:
        print(f"error reading --config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    args = parser.parse_args(argv)
    _print_config(args)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except SeedCollision as exc:
        print(f"seed policy violation: {exc}", file=sys.stderr)
        return EXIT_SEED_POLICY
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
