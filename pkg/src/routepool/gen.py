"""Samplers for the four underlying node distributions.

Coordinate samplers return ``(nodes, meta)`` where ``meta`` records the
draw-specific parameters a pool should remember (rotation angle, cluster
seed count, ...).  Every sampler is a pure function of (params, count,
seed) and bit-for-bit reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .core import Node
from .rng import make_rng

GRID_MAX = 999  # Uchoa-style generation grid is [0, 999]^2, normalized by 999


class DistributionTag(str, Enum):
    UNIFORM = "uniform"
    EXPLOSION = "explosion"
    ROTATION = "rotation"
    X_CLUSTERED = "x_clustered"
    X_RANDOM_CLUSTERED = "x_random_clustered"


class DemandScheme(str, Enum):
    NONE = "none"
    UNIFORM_1_9 = "uniform_1_9"
    UNITARY = "unitary"


class DepotScheme(str, Enum):
    NONE = "none"
    RANDOM = "random"


class InvalidCount(ValueError):
    pass


class SchemeMismatch(ValueError):
    pass


# Defaults for the tunable knobs; DistributionSpec.params may override them.
DEFAULT_PARAMS: dict[str, float] = {
    "explosion_radius": 0.3,
    "explosion_tail_mean": 0.1,
    "rotation_angle_min": 1.2,
    "rotation_angle_max": 1.9,
    "cluster_count_min": 3,
    "cluster_count_max": 8,
    "attraction_decay": 40.0,  # grid units
}


@dataclass(frozen=True)
class DistributionSpec:
    """Which generative law a pool follows, and with what knobs."""

    tag: DistributionTag
    demand_scheme: DemandScheme = DemandScheme.NONE
    depot_scheme: DepotScheme = DepotScheme.NONE
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.demand_scheme is DemandScheme.NONE) != (self.depot_scheme is DepotScheme.NONE):
            raise ValueError("demand and depot schemes must both be set (CVRP) or both absent (TSP)")
        if self.tag is DistributionTag.X_RANDOM_CLUSTERED:
            if self.depot_scheme is not DepotScheme.RANDOM or self.demand_scheme is DemandScheme.NONE:
                raise ValueError("x_random_clustered pools are CVRP pools: random depot plus demands")
        unknown = set(self.params) - set(DEFAULT_PARAMS)
        if unknown:
            raise ValueError(f"unknown params: {sorted(unknown)}")
        p = self.resolved_params()
        if not 0.0 < p["explosion_radius"] <= 0.5:
            raise ValueError("explosion_radius must be in (0, 0.5]")
        if p["explosion_tail_mean"] <= 0.0:
            raise ValueError("explosion_tail_mean must be positive")
        if not 0.0 <= p["rotation_angle_min"] <= p["rotation_angle_max"] <= 2 * math.pi:
            raise ValueError("rotation angle range must satisfy 0 <= min <= max <= 2*pi")
        if not 1 <= p["cluster_count_min"] <= p["cluster_count_max"]:
            raise ValueError("cluster count range must satisfy 1 <= min <= max")
        if p["attraction_decay"] <= 0.0:
            raise ValueError("attraction_decay must be positive")

    def resolved_params(self) -> dict[str, float]:
        merged = dict(DEFAULT_PARAMS)
        merged.update(self.params)
        return merged

    @property
    def is_cvrp(self) -> bool:
        return self.demand_scheme is not DemandScheme.NONE


def _nodes_from_coords(coords: np.ndarray) -> list[Node]:
    return [Node(i, float(x), float(y)) for i, (x, y) in enumerate(coords)]


def sample_uniform(count: int, seed: int) -> tuple[list[Node], dict]:
    """Nodes with i.i.d. coordinates uniform on the unit square."""
    if count < 1:
        raise InvalidCount(f"count must be >= 1, got {count}")
    rng = make_rng(seed)
    coords = rng.random((count, 2))
    return _nodes_from_coords(coords), {}


def mutate_explosion(
    coords: np.ndarray, rng: np.random.Generator, radius: float, tail_mean: float
) -> int:
    """Throw every point inside the blast radius outward, in place.

    A point at distance d < radius from the center (0.5, 0.5) moves to
    distance radius + s along its original ray (a seeded random ray if it
    sits exactly at the center), s ~ Exponential(tail_mean), then clips to
    the unit square.  Clipping cannot re-enter the hole: a clipped
    coordinate offset is 0.5, already beyond the radius.  Returns the
    number of mutated points.
    """
    center = np.array([0.5, 0.5])
    offsets = coords - center
    dist = np.hypot(offsets[:, 0], offsets[:, 1])
    inside = dist < radius
    n_inside = int(inside.sum())
    if n_inside:
        tail = rng.exponential(tail_mean, size=n_inside)
        theta = rng.uniform(0.0, 2 * math.pi, size=n_inside)
        d_in = dist[inside]
        rays = np.where(
            (d_in > 0)[:, None],
            offsets[inside] / np.where(d_in > 0, d_in, 1.0)[:, None],
            np.column_stack([np.cos(theta), np.sin(theta)]),
        )
        coords[inside] = center + (radius + tail)[:, None] * rays
        np.clip(coords, 0.0, 1.0, out=coords)
    return n_inside


def sample_explosion(
    count: int,
    seed: int,
    radius: float = DEFAULT_PARAMS["explosion_radius"],
    tail_mean: float = DEFAULT_PARAMS["explosion_tail_mean"],
) -> tuple[list[Node], dict]:
    """Uniform nodes with everything inside the blast radius thrown outward."""
    if count < 1:
        raise InvalidCount(f"count must be >= 1, got {count}")
    rng = make_rng(seed)
    coords = rng.random((count, 2))
    n_inside = mutate_explosion(coords, rng, radius, tail_mean)
    meta = {"radius": radius, "tail_mean": tail_mean, "mutated": n_inside}
    return _nodes_from_coords(coords), meta


def sample_rotation(
    count: int,
    seed: int,
    angle_min: float = DEFAULT_PARAMS["rotation_angle_min"],
    angle_max: float = DEFAULT_PARAMS["rotation_angle_max"],
) -> tuple[list[Node], dict]:
    """Uniform nodes rigidly rotated about (0.5, 0.5) by one pool-level angle.

    The angle is drawn uniformly from [angle_min, angle_max] radians; each
    axis is then min-max rescaled back onto [0, 1].
    """
    if count < 1:
        raise InvalidCount(f"count must be >= 1, got {count}")
    rng = make_rng(seed)
    coords = rng.random((count, 2))
    angle = float(rng.uniform(angle_min, angle_max))
    c, s = math.cos(angle), math.sin(angle)
    offsets = coords - 0.5
    rotated = np.column_stack(
        [c * offsets[:, 0] - s * offsets[:, 1], s * offsets[:, 0] + c * offsets[:, 1]]
    )
    for axis in range(2):
        lo = rotated[:, axis].min()
        span = rotated[:, axis].max() - lo
        if span > 0:
            rotated[:, axis] = (rotated[:, axis] - lo) / span
        else:
            rotated[:, axis] = 0.5
    return _nodes_from_coords(rotated), {"angle": angle}


def _sample_clustered_grid(
    rng: np.random.Generator, count: int, decay: float, cluster_min: int, cluster_max: int
) -> tuple[np.ndarray, int]:
    """Uchoa-style clustered points on the integer grid, plus the seed count used."""
    n_seeds = min(int(rng.integers(cluster_min, cluster_max + 1)), count)
    seeds = rng.integers(0, GRID_MAX + 1, size=(n_seeds, 2))
    chunks = [seeds]
    need = count - n_seeds
    while need > 0:
        batch = min(max(4 * need, 1024), 200_000)
        cand = rng.integers(0, GRID_MAX + 1, size=(batch, 2))
        d = np.sqrt(((cand[:, None, :] - seeds[None, :, :]).astype(float) ** 2).sum(axis=2))
        accept_p = np.minimum(np.exp(-d / decay).sum(axis=1) / n_seeds, 1.0)
        kept = cand[rng.random(batch) < accept_p]
        if len(kept) > need:
            kept = kept[:need]
        chunks.append(kept)
        need -= len(kept)
    return np.concatenate(chunks, axis=0), n_seeds


def sample_x(
    count: int,
    variant: str,
    seed: int,
    decay: float = DEFAULT_PARAMS["attraction_decay"],
    cluster_min: int = int(DEFAULT_PARAMS["cluster_count_min"]),
    cluster_max: int = int(DEFAULT_PARAMS["cluster_count_max"]),
) -> tuple[list[Node], dict]:
    """Uchoa-style nodes on the [0, 999]^2 grid, normalized to the unit square.

    variant "clustered": seed points attract the rest via rejection with
    acceptance probability (1/S) * sum_s exp(-d_s / decay), distances in
    grid units.  variant "random_clustered": ceil(count/2) uniform grid
    points followed by floor(count/2) clustered ones.
    """
    if variant not in ("clustered", "random_clustered"):
        raise ValueError(f"unknown x variant {variant!r}")
    if count < 1:
        raise InvalidCount(f"count must be >= 1, got {count}")
    if variant == "random_clustered" and count < 2:
        raise InvalidCount("random_clustered needs count >= 2 for the half split")
    rng = make_rng(seed)
    if variant == "clustered":
        grid, n_seeds = _sample_clustered_grid(rng, count, decay, cluster_min, cluster_max)
        meta = {"cluster_count": n_seeds}
    else:
        n_uniform = (count + 1) // 2
        uniform_part = rng.integers(0, GRID_MAX + 1, size=(n_uniform, 2))
        clustered_part, n_seeds = _sample_clustered_grid(
            rng, count - n_uniform, decay, cluster_min, cluster_max
        )
        grid = np.concatenate([uniform_part, clustered_part], axis=0)
        meta = {
            "cluster_count": n_seeds,
            "uniform_count": n_uniform,
            "clustered_count": count - n_uniform,
        }
    return _nodes_from_coords(grid / GRID_MAX), meta


def sample_demands(count: int, scheme: DemandScheme, seed: int) -> list[int]:
    """Customer demands: i.i.d. integers in {1..9} or all ones."""
    if count < 1:
        raise InvalidCount(f"count must be >= 1, got {count}")
    if scheme is DemandScheme.UNITARY:
        return [1] * count
    if scheme is DemandScheme.UNIFORM_1_9:
        rng = make_rng(seed)
        return [int(q) for q in rng.integers(1, 10, size=count)]
    raise SchemeMismatch(f"demand scheme {scheme.value!r} carries no demands")


def sample_depot(spec: DistributionSpec, seed: int) -> Node:
    """A zero-demand depot node, uniform on the spec's coordinate space.

    X pools draw the depot on the generation grid and normalize; the other
    distributions draw it directly on the unit square.
    """
    if spec.depot_scheme is not DepotScheme.RANDOM:
        raise SchemeMismatch("spec has no random depot")
    rng = make_rng(seed)
    if spec.tag in (DistributionTag.X_CLUSTERED, DistributionTag.X_RANDOM_CLUSTERED):
        gx, gy = rng.integers(0, GRID_MAX + 1, size=2)
        return Node(0, float(gx) / GRID_MAX, float(gy) / GRID_MAX, 0)
    x, y = rng.random(2)
    return Node(0, float(x), float(y), 0)


def sample_coords(spec: DistributionSpec, count: int, seed: int) -> tuple[list[Node], dict]:
    """Dispatch to the spec's coordinate sampler."""
    p = spec.resolved_params()
    if spec.tag is DistributionTag.UNIFORM:
        return sample_uniform(count, seed)
    if spec.tag is DistributionTag.EXPLOSION:
        return sample_explosion(count, seed, p["explosion_radius"], p["explosion_tail_mean"])
    if spec.tag is DistributionTag.ROTATION:
        return sample_rotation(count, seed, p["rotation_angle_min"], p["rotation_angle_max"])
    variant = "clustered" if spec.tag is DistributionTag.X_CLUSTERED else "random_clustered"
    return sample_x(
        count,
        variant,
        seed,
        p["attraction_decay"],
        int(p["cluster_count_min"]),
        int(p["cluster_count_max"]),
    )


def default_capacity(scheme: DemandScheme, n: int = 100) -> Optional[int]:
    """Vehicle capacity convention for instances of size n.

    Q=50 for {1..9} demands at n=100 (the community convention); for
    unitary demands, capacity sized for about four routes.
    """
    if scheme is DemandScheme.NONE:
        return None
    if scheme is DemandScheme.UNITARY:
        return math.ceil(n / 4)
    return 50
