"""Solver configuration, anytime traces, and shared geometry caches."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from ..core import Instance, Problem, Solution


class Algorithm(str, Enum):
    NEAREST_NEIGHBOR = "nearest_neighbor"
    SAVINGS = "savings"
    TWO_OPT = "two_opt"
    OR_OPT = "or_opt"
    CVRP_LOCAL_SEARCH = "cvrp_local_search"
    SIMULATED_ANNEALING = "simulated_annealing"
    EXACT_ORACLE = "exact_oracle"


class WrongProblemClass(ValueError):
    pass


class InfeasibleStart(ValueError):
    pass


class Infeasible(ValueError):
    pass


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    algorithm: Algorithm
    budget_seconds: float = 1.0
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.algorithm is not Algorithm.EXACT_ORACLE and self.budget_seconds <= 0:
            raise ValueError("budget_seconds must be positive")


@dataclass(frozen=True)
class CurvePoint:
    iteration: int
    elapsed: float
    cost: float


@dataclass(frozen=True)
class SolveTrace:
    best: Solution
    cost_curve: tuple[CurvePoint, ...]
    iterations: int
    wall_time: float
    seed: int

    def __post_init__(self) -> None:
        costs = [p.cost for p in self.cost_curve]
        if any(b > a for a, b in zip(costs, costs[1:])):
            raise ValueError("cost curve must be non-increasing")
        if self.cost_curve and self.best.cost != self.cost_curve[-1].cost:
            raise ValueError("best cost must equal the final curve entry")

    def cost_at(self, elapsed: float) -> Optional[float]:
        """Best cost the run had achieved by the given elapsed time."""
        best = None
        for p in self.cost_curve:
            if p.elapsed <= elapsed:
                best = p.cost
        return best


class Budget:
    """Iteration-granular wall-clock budget against a monotonic clock."""

    def __init__(self, seconds: float):
        self.seconds = seconds
        self.start = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def exceeded(self) -> bool:
        return self.elapsed() >= self.seconds


class Geometry:
    """Per-instance distance matrix and k-nearest-neighbor candidate lists.

    Plain nested lists: scalar indexing is the hot operation and Python
    lists beat numpy there.  Neighbor lists cover customers only (the CVRP
    depot is never a move target) and break distance ties by lower node id.
    """

    def __init__(self, instance: Instance, k: int = 10):
        self.instance = instance
        pts = np.array([(v.x, v.y) for v in instance.nodes])
        diff = pts[:, None, :] - pts[None, :, :]
        matrix = np.sqrt(diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2)
        self.dist: list[list[float]] = matrix.tolist()
        n = len(instance.nodes)
        first = 1 if instance.problem is Problem.CVRP else 0
        self.customers = list(range(first, n))
        self.demand = [v.demand for v in instance.nodes]
        self.capacity = instance.capacity
        self.knn: list[list[int]] = [[] for _ in range(n)]
        for i in self.customers:
            others = [j for j in self.customers if j != i]
            others.sort(key=lambda j: (matrix[i, j], j))
            self.knn[i] = others[:k]

    def tour_cost(self, tour: list[int]) -> float:
        d = self.dist
        total = 0.0
        for a, b in zip(tour, tour[1:]):
            total += d[a][b]
        total += d[tour[-1]][tour[0]]
        return total

    def routes_cost(self, routes: list[list[int]]) -> float:
        """Cost of depot-anchored routes given as customer sequences."""
        d = self.dist
        total = 0.0
        for r in routes:
            if not r:
                continue
            total += d[0][r[0]]
            for a, b in zip(r, r[1:]):
                total += d[a][b]
            total += d[r[-1]][0]
        return total


def canonical_tour(tour: list[int]) -> tuple[int, ...]:
    """Rotate to start at node 0 and pick the lexicographically smaller direction."""
    n = len(tour)
    if n == 0:
        return ()
    at = tour.index(0)
    fwd = [tour[(at + k) % n] for k in range(n)]
    rev = [tour[(at - k) % n] for k in range(n)]
    return tuple(fwd if fwd <= rev else rev)


def canonical_routes(routes: list[list[int]]) -> tuple[tuple[int, ...], ...]:
    """Depot-anchored route tuples, each oriented and sorted lexicographically."""
    out = []
    for r in routes:
        if not r:
            continue
        seq = list(r)
        if seq[::-1] < seq:
            seq = seq[::-1]
        out.append(tuple([0] + seq + [0]))
    out.sort()
    return tuple(out)
