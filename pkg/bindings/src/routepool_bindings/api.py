from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from routepool import (
    BaseNodeDistribution,
    DistributionSpec,
    SeedRegistry,
    build_base,
    make_epoch,
)
from routepool.interop import epoch_arrays, epoch_bytes, load_pool


@dataclass(frozen=True)
class EpochBatch:
    """One epoch of subsampled instances as dense, read-only arrays.

    coordinates: (l_epoch, rows, 2) float64, where rows = n for TSP and
    n + 1 for CVRP with row 0 holding the depot.  demands: (l_epoch, rows)
    int64 for CVRP, None for TSP.
    """

    coordinates: np.ndarray
    demands: Optional[np.ndarray]
    capacity: Optional[int]
    base_id: str
    problem: str
    n: int
    train_seed: int
    epoch: int

    def __len__(self) -> int:
        return int(self.coordinates.shape[0])

    def to_bytes(self) -> bytes:
        """Canonical encoding, byte-identical to the primary pipeline's."""
        return epoch_bytes(
            self.coordinates,
            self.demands,
            base_id=self.base_id,
            problem=self.problem,
            n=self.n,
            seed=self.train_seed,
            epoch=self.epoch,
            capacity=self.capacity,
        )


class BaseHandle:
    """Immutable pool wrapper, cheap to share across training workers."""

    def __init__(self, pool: BaseNodeDistribution, registry: Optional[SeedRegistry] = None):
        self._pool = pool
        self._registry = registry

    @property
    def base_id(self) -> str:
        return self._pool.base_id

    @property
    def n_base(self) -> int:
        return self._pool.n_base

    @property
    def problem(self) -> str:
        return self._pool.problem.value

    @property
    def capacity(self) -> Optional[int]:
        return self._pool.capacity

    def __repr__(self) -> str:
        return f"BaseHandle({self.base_id}, n_base={self.n_base}, problem={self.problem})"


def open_base(
    path: Optional[str | Path] = None,
    *,
    spec: Optional[DistributionSpec] = None,
    n_base: Optional[int] = None,
    seed: Optional[int] = None,
    registry_path: Optional[str | Path] = None,
) -> BaseHandle:
    """Open a saved pool file, or construct the pool from (spec, n_base, seed).

    A registry file (the CLI's seed-registry.json) makes sample_epoch refuse
    train seeds registered for testing on the same pool.
    """
    if (path is None) == (spec is None):
        raise ValueError("pass either a pool file path or spec+n_base+seed")
    if path is not None:
        pool = load_pool(path)
    else:
        if n_base is None or seed is None:
            raise ValueError("spec construction needs n_base and seed")
        pool = build_base(spec, n_base, seed)
    registry = SeedRegistry(Path(registry_path)) if registry_path is not None else None
    return BaseHandle(pool, registry)


def sample_epoch(
    handle: BaseHandle, n: int, train_seed: int, epoch: int, l_epoch: int
) -> EpochBatch:
    """Subsample one epoch; bit-identical to the primary make_epoch output."""
    dataset = make_epoch(
        handle._pool, n, train_seed, epoch=epoch, l_epoch=l_epoch, registry=handle._registry
    )
    coordinates, demands, capacity = epoch_arrays(dataset)
    coordinates.setflags(write=False)
    if demands is not None:
        demands.setflags(write=False)
    return EpochBatch(
        coordinates=coordinates,
        demands=demands,
        capacity=capacity,
        base_id=handle.base_id,
        problem=handle.problem,
        n=n,
        train_seed=train_seed,
        epoch=epoch,
    )
