"""Serialization, TSPLIB export, and adapters for external LKH3 / HGS binaries.

File writes are canonical (sorted keys, compact separators, repr floats), so
identical in-memory objects always produce byte-identical files.  Loaders
verify a sha256 checksum over the payload and reject unknown versions.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import shutil
import subprocess
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import Instance, Node, Problem, Provenance, Solution, check_feasible, evaluate
from .subsample import BaseNodeDistribution, Dataset, Role, spec_from_dict, spec_to_dict

DATASET_FORMAT = "routepool-dataset"
POOL_FORMAT = "routepool-pool"
EPOCH_FORMAT = "routepool-epoch"
FORMAT_VERSION = 1

DEFAULT_SCALE = 10**6


class ChecksumMismatch(ValueError):
    pass


class VersionUnsupported(ValueError):
    pass


class BinaryNotFound(RuntimeError):
    pass


class ExternalSolverError(RuntimeError):
    """The external binary failed or produced unparseable output."""


class InfeasibleExternalSolution(ValueError):
    pass


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _checksum(doc: dict) -> str:
    payload = {k: v for k, v in doc.items() if k != "checksum"}
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


# ---------------------------------------------------------------------------
# dict round-trips

def node_to_list(v: Node) -> list:
    return [v.id, v.x, v.y, v.demand]


def node_from_list(raw: Sequence) -> Node:
    return Node(int(raw[0]), float(raw[1]), float(raw[2]), int(raw[3]))


def instance_to_dict(inst: Instance) -> dict:
    doc = {
        "problem": inst.problem.value,
        "nodes": [node_to_list(v) for v in inst.nodes],
        "capacity": inst.capacity,
    }
    if inst.provenance is not None:
        doc["provenance"] = {
            "base_id": inst.provenance.base_id,
            "distribution": inst.provenance.distribution,
            "sample_seed": inst.provenance.sample_seed,
            "index": inst.provenance.index,
            "pool_indices": list(inst.provenance.pool_indices or ()) or None,
        }
    return doc


def instance_from_dict(doc: dict) -> Instance:
    prov = None
    if doc.get("provenance"):
        p = doc["provenance"]
        prov = Provenance(
            base_id=p["base_id"],
            distribution=p["distribution"],
            sample_seed=p["sample_seed"],
            index=p["index"],
            pool_indices=tuple(p["pool_indices"]) if p.get("pool_indices") else None,
        )
    return Instance(
        problem=Problem(doc["problem"]),
        nodes=tuple(node_from_list(r) for r in doc["nodes"]),
        capacity=doc.get("capacity"),
        provenance=prov,
    )


def solution_to_dict(sol: Solution) -> dict:
    doc = {"problem": sol.problem.value, "cost": sol.cost}
    if sol.tour is not None:
        doc["tour"] = list(sol.tour)
    if sol.routes is not None:
        doc["routes"] = [list(r) for r in sol.routes]
    return doc


def solution_from_dict(doc: dict) -> Solution:
    if "tour" in doc:
        return Solution.for_tsp(doc["tour"], doc["cost"])
    return Solution.for_cvrp(doc["routes"], doc["cost"])


# ---------------------------------------------------------------------------
# pool and dataset files

def pool_to_dict(pool: BaseNodeDistribution) -> dict:
    doc = {
        "format": POOL_FORMAT,
        "version": FORMAT_VERSION,
        "base_id": pool.base_id,
        "spec": spec_to_dict(pool.spec),
        "n_base": pool.n_base,
        "master_seed": pool.master_seed,
        "capacity": pool.capacity,
        "depot": node_to_list(pool.depot) if pool.depot is not None else None,
        "nodes": [node_to_list(v) for v in pool.nodes],
        "meta": pool.meta,
    }
    doc["checksum"] = _checksum(doc)
    return doc


def pool_from_dict(doc: dict) -> BaseNodeDistribution:
    if doc.get("format") != POOL_FORMAT:
        raise VersionUnsupported(f"not a {POOL_FORMAT} file")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionUnsupported(f"unsupported version {doc.get('version')}")
    if doc.get("checksum") != _checksum(doc):
        raise ChecksumMismatch("pool file checksum does not match its payload")
    return BaseNodeDistribution(
        base_id=doc["base_id"],
        spec=spec_from_dict(doc["spec"]),
        n_base=doc["n_base"],
        nodes=tuple(node_from_list(r) for r in doc["nodes"]),
        depot=node_from_list(doc["depot"]) if doc.get("depot") else None,
        capacity=doc.get("capacity"),
        master_seed=doc["master_seed"],
        meta=dict(doc.get("meta", {})),
    )


def save_pool(pool: BaseNodeDistribution, path: Path | str) -> None:
    Path(path).write_text(canonical_json(pool_to_dict(pool)) + "\n")


def load_pool(path: Path | str) -> BaseNodeDistribution:
    return pool_from_dict(json.loads(Path(path).read_text()))


def dataset_to_dict(dataset: Dataset) -> dict:
    instances = [instance_to_dict(inst) for inst in dataset.instances]
    doc = {
        "format": DATASET_FORMAT,
        "version": FORMAT_VERSION,
        "base_id": dataset.base_id,
        "spec": spec_to_dict(dataset.spec),
        "problem": dataset.problem.value,
        "role": dataset.role.value,
        "n": dataset.n,
        "seed": dataset.sample_seed,
        "epoch": dataset.epoch,
        "length": len(dataset.instances),
        "instances": instances,
        "labels": [solution_to_dict(s) for s in dataset.labels] if dataset.labels else None,
        "instance_checksums": [
            hashlib.sha256(canonical_json(i).encode()).hexdigest()[:16] for i in instances
        ],
    }
    doc["checksum"] = _checksum(doc)
    return doc


def dataset_from_dict(doc: dict) -> Dataset:
    if doc.get("format") != DATASET_FORMAT:
        raise VersionUnsupported(f"not a {DATASET_FORMAT} file")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionUnsupported(f"unsupported version {doc.get('version')}")
    if doc.get("checksum") != _checksum(doc):
        raise ChecksumMismatch("dataset file checksum does not match its payload")
    for payload, expect in zip(doc["instances"], doc["instance_checksums"]):
        got = hashlib.sha256(canonical_json(payload).encode()).hexdigest()[:16]
        if got != expect:
            raise ChecksumMismatch("instance checksum does not match its payload")
    return Dataset(
        role=Role(doc["role"]),
        instances=tuple(instance_from_dict(i) for i in doc["instances"]),
        base_id=doc["base_id"],
        spec=spec_from_dict(doc["spec"]),
        sample_seed=doc["seed"],
        n=doc["n"],
        epoch=doc.get("epoch"),
        labels=tuple(solution_from_dict(s) for s in doc["labels"]) if doc.get("labels") else None,
    )


def save_dataset(dataset: Dataset, path: Path | str) -> None:
    Path(path).write_text(canonical_json(dataset_to_dict(dataset)) + "\n")


def load_dataset(path: Path | str) -> Dataset:
    return dataset_from_dict(json.loads(Path(path).read_text()))


def dataset_manifest(dataset: Dataset) -> dict:
    doc = dataset_to_dict(dataset)
    return {
        "base_id": doc["base_id"],
        "spec": doc["spec"],
        "n": doc["n"],
        "role": doc["role"],
        "seed": doc["seed"],
        "length": doc["length"],
        "instance_checksums": doc["instance_checksums"],
    }


# ---------------------------------------------------------------------------
# epoch batches (the array surface consumed by training loops)

def epoch_arrays(dataset: Dataset) -> tuple[np.ndarray, Optional[np.ndarray], Optional[int]]:
    """(coordinates, demands, capacity) arrays; CVRP row 0 of each instance is the depot."""
    rows = len(dataset.instances[0].nodes) if dataset.instances else 0
    coords = np.array(
        [[(v.x, v.y) for v in inst.nodes] for inst in dataset.instances], dtype="<f8"
    ).reshape(len(dataset.instances), rows, 2)
    if dataset.problem is Problem.CVRP:
        demands = np.array(
            [[v.demand for v in inst.nodes] for inst in dataset.instances], dtype="<i8"
        ).reshape(len(dataset.instances), rows)
        capacity = dataset.instances[0].capacity if dataset.instances else None
        return coords, demands, capacity
    return coords, None, None


def epoch_bytes(
    coords: np.ndarray,
    demands: Optional[np.ndarray],
    *,
    base_id: str,
    problem: str,
    n: int,
    seed: int,
    epoch: Optional[int],
    capacity: Optional[int],
    role: str = "epoch",
) -> bytes:
    """Canonical epoch encoding: one JSON header line followed by raw C-order arrays."""
    header = {
        "format": EPOCH_FORMAT,
        "version": FORMAT_VERSION,
        "base_id": base_id,
        "problem": problem,
        "role": role,
        "n": n,
        "rows": int(coords.shape[1]),
        "length": int(coords.shape[0]),
        "seed": seed,
        "epoch": epoch,
        "capacity": capacity,
        "coords_dtype": "<f8",
        "demands_dtype": "<i8" if demands is not None else None,
    }
    blob = canonical_json(header).encode() + b"\n" + np.ascontiguousarray(coords, "<f8").tobytes()
    if demands is not None:
        blob += np.ascontiguousarray(demands, "<i8").tobytes()
    return blob


def epoch_batch_bytes(dataset: Dataset) -> bytes:
    """Canonical byte encoding of a dataset as an epoch batch."""
    coords, demands, capacity = epoch_arrays(dataset)
    return epoch_bytes(
        coords,
        demands,
        base_id=dataset.base_id,
        problem=dataset.problem.value,
        n=dataset.n,
        seed=dataset.sample_seed,
        epoch=dataset.epoch,
        capacity=capacity,
        role=dataset.role.value,
    )


def save_epoch_batch(dataset: Dataset, path: Path | str) -> None:
    Path(path).write_bytes(epoch_batch_bytes(dataset))


# ---------------------------------------------------------------------------
# TSPLIB export and external solvers

def export_tsplib(instance: Instance, scale: int = DEFAULT_SCALE, name: Optional[str] = None) -> str:
    """TSPLIB EUC_2D document with coordinates scaled to integers.

    The default scale of 1e6 keeps the rounding error of any tour below
    n*sqrt(2)/scale.  Pools generated on the [0, 999] grid can pass
    scale=999 for an exact integer export.
    """
    if name is None:
        prov = instance.provenance
        name = f"routepool-{prov.base_id}-{prov.index}" if prov else "routepool-instance"
    is_cvrp = instance.problem is Problem.CVRP
    lines = [
        f"NAME : {name}",
        f"TYPE : {'CVRP' if is_cvrp else 'TSP'}",
        f"COMMENT : exported at scale {scale}",
        f"DIMENSION : {len(instance.nodes)}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
    ]
    if is_cvrp:
        lines.append(f"CAPACITY : {instance.capacity}")
    lines.append("NODE_COORD_SECTION")
    for k, v in enumerate(instance.nodes, start=1):
        lines.append(f"{k} {round(v.x * scale)} {round(v.y * scale)}")
    if is_cvrp:
        lines.append("DEMAND_SECTION")
        for k, v in enumerate(instance.nodes, start=1):
            lines.append(f"{k} {v.demand}")
        lines.append("DEPOT_SECTION")
        lines.append("1")
        lines.append("-1")
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def parse_tsplib_instance(text: str, scale: int = DEFAULT_SCALE) -> Instance:
    """Read back an EUC_2D TSPLIB document written by export_tsplib."""
    capacity = None
    problem = Problem.TSP
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, int] = {}
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line == "EOF":
            continue
        upper = line.upper()
        if ":" in line and not upper.startswith(("NODE_COORD", "DEMAND", "DEPOT")):
            key, _, value = line.partition(":")
            key = key.strip().upper()
            if key == "TYPE":
                problem = Problem.CVRP if value.strip().upper() == "CVRP" else Problem.TSP
            elif key == "CAPACITY":
                capacity = int(value)
            continue
        if upper.startswith("NODE_COORD_SECTION"):
            section = "coords"
            continue
        if upper.startswith("DEMAND_SECTION"):
            section = "demands"
            continue
        if upper.startswith("DEPOT_SECTION"):
            section = "depot"
            continue
        if section == "coords":
            idx, x, y = line.split()
            coords[int(idx)] = (float(x) / scale, float(y) / scale)
        elif section == "demands":
            idx, q = line.split()
            demands[int(idx)] = int(q)
    nodes = tuple(
        Node(i - 1, coords[i][0], coords[i][1], demands.get(i, 0))
        for i in sorted(coords)
    )
    return Instance(problem=problem, nodes=nodes, capacity=capacity)


def parse_tsplib_tour(text: str, instance: Instance) -> Solution:
    """Parse an LKH TOUR_SECTION into a Solution for the given instance.

    Ids above DIMENSION are depot copies (LKH3's giant-tour encoding for
    CVRP) and split the tour into routes.
    """
    dim = len(instance.nodes)
    ids: list[int] = []
    in_section = False
    for raw in text.splitlines():
        token = raw.strip()
        if not token:
            continue
        if token.upper().startswith("TOUR_SECTION"):
            in_section = True
            continue
        if not in_section:
            continue
        for part in token.split():
            val = int(part)
            if val == -1:
                in_section = False
                break
            ids.append(val)
    if not ids:
        raise ExternalSolverError("no TOUR_SECTION entries found")
    if instance.problem is Problem.TSP:
        tour = [v - 1 for v in ids]
        sol = Solution.for_tsp(tour, 0.0)
        return dataclasses.replace(sol, cost=evaluate(instance, sol))
    routes: list[list[int]] = []
    current: list[int] = []
    for val in ids:
        if val == 1 or val > dim:  # depot or depot copy
            if current:
                routes.append(current)
                current = []
        else:
            current.append(val - 1)
    if current:
        routes.append(current)
    anchored = [[0] + r + [0] for r in routes]
    sol = Solution.for_cvrp(anchored, 0.0)
    return dataclasses.replace(sol, cost=evaluate(instance, sol))


def parse_hgs_solution(text: str, instance: Instance) -> Solution:
    """Parse an HGS-CVRP .sol file ('Route #k: i j k' lines, 1-based customers)."""
    routes: list[list[int]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line.lower().startswith("route"):
            continue
        _, _, tail = line.partition(":")
        customers = [int(tok) for tok in tail.split()]
        if customers:
            routes.append([0] + customers + [0])
    if not routes:
        raise ExternalSolverError("no Route lines found in HGS output")
    sol = Solution.for_cvrp(routes, 0.0)
    return dataclasses.replace(sol, cost=evaluate(instance, sol))


def _find_binary(explicit: Optional[str], env_var: str, name: str) -> str:
    for candidate in (explicit, os.environ.get(env_var), shutil.which(name)):
        if candidate and shutil.which(candidate):
            return candidate
    raise BinaryNotFound(f"{name} binary not found (set ${env_var} or pass binary=...)")


def _validated(instance: Instance, sol: Solution, origin: str) -> Solution:
    verdict = check_feasible(instance, sol)
    if not verdict.ok:
        raise InfeasibleExternalSolution(
            f"{origin} returned an infeasible solution: {verdict.violations[0].message}"
        )
    return sol


def run_lkh(instance: Instance, budget: float, binary: Optional[str] = None) -> Solution:
    """Solve via an installed LKH3 binary; cost is re-evaluated in unit-square units."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    exe = _find_binary(binary, "LKH_BIN", "LKH")
    with tempfile.TemporaryDirectory(prefix="routepool-lkh-") as scratch:
        scratch_path = Path(scratch)
        problem_file = scratch_path / "problem.txt"
        tour_file = scratch_path / "out.tour"
        param_file = scratch_path / "params.par"
        problem_file.write_text(export_tsplib(instance))
        params = [
            f"PROBLEM_FILE = {problem_file}",
            f"TOUR_FILE = {tour_file}",
            f"TIME_LIMIT = {budget}",
            "RUNS = 1",
            "SEED = 1",
            "TRACE_LEVEL = 0",
        ]
        param_file.write_text("\n".join(params) + "\n")
        proc = subprocess.run(
            [exe, str(param_file)],
            capture_output=True,
            text=True,
            timeout=max(3 * budget, budget + 60),
        )
        if not tour_file.exists():
            raise ExternalSolverError(
                f"LKH produced no tour file (exit {proc.returncode}): {proc.stdout[-500:]}"
            )
        sol = parse_tsplib_tour(tour_file.read_text(), instance)
    return _validated(instance, sol, "LKH")


def run_hgs(instance: Instance, budget: float, binary: Optional[str] = None) -> Solution:
    """Solve a CVRP via an installed HGS-CVRP binary."""
    if instance.problem is not Problem.CVRP:
        raise ValueError("HGS solves CVRP instances only")
    if budget <= 0:
        raise ValueError("budget must be positive")
    exe = _find_binary(binary, "HGS_BIN", "hgs")
    with tempfile.TemporaryDirectory(prefix="routepool-hgs-") as scratch:
        scratch_path = Path(scratch)
        problem_file = scratch_path / "problem.vrp"
        sol_file = scratch_path / "out.sol"
        problem_file.write_text(export_tsplib(instance))
        proc = subprocess.run(
            [exe, str(problem_file), str(sol_file), "-t", str(budget), "-seed", "1"],
            capture_output=True,
            text=True,
            timeout=max(3 * budget, budget + 60),
        )
        if not sol_file.exists():
            raise ExternalSolverError(
                f"HGS produced no solution file (exit {proc.returncode}): {proc.stdout[-500:]}"
            )
        sol = parse_hgs_solution(sol_file.read_text(), instance)
    return _validated(instance, sol, "HGS")
