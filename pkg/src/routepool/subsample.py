"""Base node pools and the train/test/epoch subsampling protocol.

A pool is drawn once from an underlying distribution; every instance is a
uniform without-replacement draw of n customers from it, so nodes recur
across instances.  Substreams are derived with the documented seed mixer,
which makes datasets order-independent and partially materializable.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .core import Instance, Node, Problem, Provenance, Solution, check_feasible, evaluate
from .gen import DemandScheme, DepotScheme, DistributionSpec, DistributionTag
from .gen import default_capacity, sample_coords, sample_demands, sample_depot
from .rng import TAG_COORDS, TAG_DEMANDS, TAG_DEPOT, TAG_EPOCH, TAG_INSTANCE, make_rng, mix


class SizeExceedsBase(ValueError):
    pass


class SeedCollision(ValueError):
    """A train seed collides with a registered test seed on the same pool."""


class LabelMismatch(ValueError):
    def __init__(self, message: str, indices: Sequence[int]):
        super().__init__(message)
        self.indices = tuple(indices)


class Role(str, Enum):
    TRAIN = "train"
    TEST = "test"
    EPOCH = "epoch"


def spec_to_dict(spec: DistributionSpec) -> dict:
    return {
        "tag": spec.tag.value,
        "demand_scheme": spec.demand_scheme.value,
        "depot_scheme": spec.depot_scheme.value,
        "params": dict(sorted(spec.params.items())),
    }


def spec_from_dict(d: dict) -> DistributionSpec:
    return DistributionSpec(
        tag=DistributionTag(d["tag"]),
        demand_scheme=DemandScheme(d["demand_scheme"]),
        depot_scheme=DepotScheme(d["depot_scheme"]),
        params=dict(d.get("params", {})),
    )


def compute_base_id(spec: DistributionSpec, n_base: int, master_seed: int) -> str:
    payload = json.dumps(
        {"spec": spec_to_dict(spec), "n_base": n_base, "master_seed": master_seed},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class BaseNodeDistribution:
    base_id: str
    spec: DistributionSpec
    n_base: int
    nodes: tuple[Node, ...]  # customers, pool indices 0..n_base-1
    depot: Optional[Node]
    capacity: Optional[int]
    master_seed: int
    meta: dict

    def __post_init__(self) -> None:
        if len(self.nodes) != self.n_base:
            raise ValueError("pool must hold exactly n_base customer nodes")
        if self.spec.is_cvrp:
            if self.depot is None or self.capacity is None:
                raise ValueError("CVRP pools carry a depot and a capacity")
        elif self.depot is not None or self.capacity is not None:
            raise ValueError("TSP pools carry neither depot nor capacity")

    @property
    def problem(self) -> Problem:
        return Problem.CVRP if self.spec.is_cvrp else Problem.TSP


@dataclass(frozen=True)
class Dataset:
    role: Role
    instances: tuple[Instance, ...]
    base_id: str
    spec: DistributionSpec
    sample_seed: int
    n: int
    epoch: Optional[int] = None
    labels: Optional[tuple[Solution, ...]] = None

    def __post_init__(self) -> None:
        if self.labels is not None and len(self.labels) != len(self.instances):
            raise ValueError("labels must align one-to-one with instances")

    @property
    def problem(self) -> Problem:
        return Problem.CVRP if self.spec.is_cvrp else Problem.TSP

    def __len__(self) -> int:
        return len(self.instances)


def build_base(
    spec: DistributionSpec,
    n_base: int,
    master_seed: int,
    capacity: Optional[int] = None,
) -> BaseNodeDistribution:
    """Draw a pool of n_base customers (plus depot/capacity for CVRP specs)."""
    min_nodes = 1 if spec.is_cvrp else 2
    if n_base < min_nodes:
        raise ValueError(f"n_base must be >= {min_nodes} for this spec, got {n_base}")
    nodes, meta = sample_coords(spec, n_base, mix(master_seed, TAG_COORDS))
    if spec.demand_scheme is not DemandScheme.NONE:
        demands = sample_demands(n_base, spec.demand_scheme, mix(master_seed, TAG_DEMANDS))
        nodes = [dataclasses.replace(v, demand=q) for v, q in zip(nodes, demands)]
    depot = None
    if spec.depot_scheme is DepotScheme.RANDOM:
        depot = dataclasses.replace(
            sample_depot(spec, mix(master_seed, TAG_DEPOT)), id=n_base
        )
    resolved_capacity = capacity
    if spec.is_cvrp and resolved_capacity is None:
        resolved_capacity = default_capacity(spec.demand_scheme)
    if spec.is_cvrp and (resolved_capacity is None or resolved_capacity <= 0):
        raise ValueError("CVRP pools need a positive capacity")
    if not spec.is_cvrp:
        resolved_capacity = None
    return BaseNodeDistribution(
        base_id=compute_base_id(spec, n_base, master_seed),
        spec=spec,
        n_base=n_base,
        nodes=tuple(nodes),
        depot=depot,
        capacity=resolved_capacity,
        master_seed=master_seed,
        meta=meta,
    )


def subsample_instance(
    base: BaseNodeDistribution, n: int, sample_seed: int, index: int
) -> Instance:
    """Draw n distinct customers uniformly from the pool (substream (seed, index)).

    CVRP: the pool depot is always prepended at position 0 and the pool
    capacity is copied over.  Customers keep pool order and are re-indexed
    to instance-local ids.
    """
    if n < 1:
        raise ValueError(f"instance size must be >= 1, got {n}")
    if n > base.n_base:
        raise SizeExceedsBase(f"requested n={n} from a pool of {base.n_base}")
    rng = make_rng(sample_seed, TAG_INSTANCE, index)
    picks = sorted(int(i) for i in rng.permutation(base.n_base)[:n])
    provenance = Provenance(
        base_id=base.base_id,
        distribution=base.spec.tag.value,
        sample_seed=sample_seed,
        index=index,
        pool_indices=tuple(picks),
    )
    if base.problem is Problem.CVRP:
        assert base.depot is not None
        nodes = [dataclasses.replace(base.depot, id=0)]
        nodes += [dataclasses.replace(base.nodes[p], id=k + 1) for k, p in enumerate(picks)]
        return Instance(Problem.CVRP, tuple(nodes), capacity=base.capacity, provenance=provenance)
    nodes = [dataclasses.replace(base.nodes[p], id=k) for k, p in enumerate(picks)]
    return Instance(Problem.TSP, tuple(nodes), provenance=provenance)


class SeedRegistry:
    """Records test seeds per pool and refuses colliding train seeds.

    The registry is the only stateful piece of the sampling pipeline; it
    serializes writers with a lock and can persist to a small JSON file.
    """

    def __init__(self, path: Optional[Path] = None):
        self._lock = threading.Lock()
        self._path = Path(path) if path is not None else None
        self._test_seeds: dict[str, set[int]] = {}
        if self._path is not None and self._path.exists():
            raw = json.loads(self._path.read_text())
            self._test_seeds = {k: set(v) for k, v in raw.get("test_seeds", {}).items()}

    def _save(self) -> None:
        if self._path is None:
            return
        doc = {"test_seeds": {k: sorted(v) for k, v in sorted(self._test_seeds.items())}}
        self._path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def register_test(self, base_id: str, seed: int) -> None:
        with self._lock:
            self._test_seeds.setdefault(base_id, set()).add(seed)
            self._save()

    def is_test_seed(self, base_id: str, seed: int) -> bool:
        with self._lock:
            return seed in self._test_seeds.get(base_id, ())

    def check_train_seed(self, base_id: str, seed: int) -> None:
        if self.is_test_seed(base_id, seed):
            raise SeedCollision(
                f"seed {seed} is registered as a test seed for pool {base_id}"
            )


def make_test(
    base: BaseNodeDistribution,
    n: int,
    test_seed: int,
    l_test: int = 128,
    registry: Optional[SeedRegistry] = None,
) -> Dataset:
    """A persisted test set of l_test instances (indices 0..l_test-1)."""
    if l_test < 0:
        raise ValueError("l_test must be non-negative")
    instances = tuple(subsample_instance(base, n, test_seed, i) for i in range(l_test))
    if registry is not None:
        registry.register_test(base.base_id, test_seed)
    return Dataset(Role.TEST, instances, base.base_id, base.spec, test_seed, n)


def make_train(
    base: BaseNodeDistribution,
    n: int,
    train_seed: int,
    l_train: int,
    registry: Optional[SeedRegistry] = None,
) -> Dataset:
    """A persisted train set, e.g. for labeling and supervised export."""
    if registry is not None:
        registry.check_train_seed(base.base_id, train_seed)
    instances = tuple(subsample_instance(base, n, train_seed, i) for i in range(l_train))
    return Dataset(Role.TRAIN, instances, base.base_id, base.spec, train_seed, n)


def make_epoch(
    base: BaseNodeDistribution,
    n: int,
    train_seed: int,
    epoch: int,
    l_epoch: int,
    registry: Optional[SeedRegistry] = None,
) -> Dataset:
    """One epoch's worth of freshly subsampled training instances.

    Instance i of epoch e uses substream (mix(train_seed, epoch-tag, e), i),
    so epochs are disjoint and any instance can be regenerated in isolation.
    """
    if l_epoch < 0:
        raise ValueError("l_epoch must be non-negative")
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    if registry is not None:
        registry.check_train_seed(base.base_id, train_seed)
    epoch_seed = mix(train_seed, TAG_EPOCH, epoch)
    instances = tuple(subsample_instance(base, n, epoch_seed, i) for i in range(l_epoch))
    return Dataset(Role.EPOCH, instances, base.base_id, base.spec, train_seed, n, epoch=epoch)


def attach_labels(dataset: Dataset, solutions: Sequence[Solution]) -> Dataset:
    """Pair instances with reference solutions, re-validating every label.

    Label costs are never trusted: each is recomputed with evaluate().
    Infeasible or misaligned labels are rejected with their indices.
    """
    if len(solutions) != len(dataset.instances):
        raise LabelMismatch(
            f"{len(solutions)} labels for {len(dataset.instances)} instances",
            range(min(len(solutions), len(dataset.instances)), max(len(solutions), len(dataset.instances))),
        )
    bad: list[int] = []
    relabeled: list[Solution] = []
    for i, (inst, sol) in enumerate(zip(dataset.instances, solutions)):
        try:
            verdict = check_feasible(inst, sol)
            if not verdict.ok:
                bad.append(i)
                continue
            relabeled.append(dataclasses.replace(sol, cost=evaluate(inst, sol)))
        except Exception:
            bad.append(i)
    if bad:
        raise LabelMismatch(f"{len(bad)} labels are infeasible or misaligned: {bad[:10]}", bad)
    return dataclasses.replace(dataset, labels=tuple(relabeled))
