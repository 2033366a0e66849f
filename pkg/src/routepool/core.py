"""Domain model for routing problems.

Nodes live in the unit square.  An Instance is a TSP over its nodes or a
CVRP whose node 0 is the depot.  A Solution is a tour (TSP) or a set of
depot-anchored routes (CVRP).  Everything is immutable after construction;
the operations here are pure functions, so instances and solutions can be
shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence


class Problem(str, Enum):
    TSP = "tsp"
    CVRP = "cvrp"


class StructuralMismatch(ValueError):
    """Solution shape does not match the instance (problem class or node count)."""


@dataclass(frozen=True, slots=True)
class Node:
    id: int
    x: float
    y: float
    demand: int = 0

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"node id must be non-negative, got {self.id}")
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"coordinates must lie in the unit square, got ({self.x}, {self.y})")
        if self.demand < 0:
            raise ValueError(f"demand must be non-negative, got {self.demand}")


@dataclass(frozen=True, slots=True)
class Provenance:
    """Where an instance came from: pool, distribution, substream, draw index."""

    base_id: str
    distribution: str
    sample_seed: int
    index: int
    pool_indices: Optional[tuple[int, ...]] = None


@dataclass(frozen=True, slots=True)
class Instance:
    problem: Problem
    nodes: tuple[Node, ...]
    capacity: Optional[int] = None
    provenance: Optional[Provenance] = None

    def __post_init__(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be distinct")
        if self.problem is Problem.TSP:
            if self.capacity is not None:
                raise ValueError("TSP instances carry no capacity")
            if any(n.demand != 0 for n in self.nodes):
                raise ValueError("TSP nodes must have zero demand")
            if len(self.nodes) < 1:
                raise ValueError("TSP instance needs at least one node")
        else:
            if self.capacity is None or self.capacity <= 0:
                raise ValueError("CVRP instances need a positive capacity")
            if len(self.nodes) < 2:
                raise ValueError("CVRP instance needs a depot and at least one customer")
            if self.nodes[0].demand != 0:
                raise ValueError("depot (node 0) must have zero demand")
            worst = max(n.demand for n in self.nodes[1:])
            if worst > self.capacity:
                raise ValueError(f"customer demand {worst} exceeds capacity {self.capacity}")

    @property
    def size(self) -> int:
        """Number of customer nodes (excludes the CVRP depot)."""
        if self.problem is Problem.CVRP:
            return len(self.nodes) - 1
        return len(self.nodes)

    @property
    def depot(self) -> Optional[Node]:
        return self.nodes[0] if self.problem is Problem.CVRP else None

    @property
    def customers(self) -> tuple[Node, ...]:
        return self.nodes[1:] if self.problem is Problem.CVRP else self.nodes


@dataclass(frozen=True, slots=True)
class Solution:
    problem: Problem
    cost: float
    tour: Optional[tuple[int, ...]] = None
    routes: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self) -> None:
        if self.problem is Problem.TSP:
            if self.tour is None or self.routes is not None:
                raise ValueError("TSP solutions carry a tour and no routes")
        else:
            if self.routes is None or self.tour is not None:
                raise ValueError("CVRP solutions carry routes and no tour")
        if self.cost < 0:
            raise ValueError("cost must be non-negative")

    @classmethod
    def for_tsp(cls, tour: Sequence[int], cost: float) -> "Solution":
        return cls(Problem.TSP, cost, tour=tuple(tour))

    @classmethod
    def for_cvrp(cls, routes: Sequence[Sequence[int]], cost: float) -> "Solution":
        return cls(Problem.CVRP, cost, routes=tuple(tuple(r) for r in routes))


@dataclass(frozen=True, slots=True)
class Violation:
    kind: str
    message: str
    route: Optional[int] = None
    node: Optional[int] = None


@dataclass(frozen=True, slots=True)
class Feasibility:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def distance(a: Node, b: Node) -> float:
    """Euclidean distance in full floating precision."""
    dx = a.x - b.x
    dy = a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


def _check_structure(instance: Instance, solution: Solution) -> None:
    if instance.problem is not solution.problem:
        raise StructuralMismatch(
            f"solution is {solution.problem.value}, instance is {instance.problem.value}"
        )
    n = len(instance.nodes)
    if solution.problem is Problem.TSP:
        assert solution.tour is not None
        if len(solution.tour) != n:
            raise StructuralMismatch(f"tour visits {len(solution.tour)} nodes, instance has {n}")
        if any(not (0 <= i < n) for i in solution.tour):
            raise StructuralMismatch("tour references an unknown node index")
    else:
        assert solution.routes is not None
        visits = [i for r in solution.routes for i in r if i != 0]
        if len(visits) != instance.size:
            raise StructuralMismatch(
                f"routes visit {len(visits)} customers, instance has {instance.size}"
            )
        if any(not (0 <= i < n) for r in solution.routes for i in r):
            raise StructuralMismatch("route references an unknown node index")


def evaluate(instance: Instance, solution: Solution) -> float:
    """Total edge length of the solution (closing edge / depot legs included)."""
    _check_structure(instance, solution)
    nodes = instance.nodes
    total = 0.0
    if solution.problem is Problem.TSP:
        tour = solution.tour
        assert tour is not None
        for k in range(len(tour)):
            total += distance(nodes[tour[k]], nodes[tour[(k + 1) % len(tour)]])
    else:
        assert solution.routes is not None
        for route in solution.routes:
            for a, b in zip(route, route[1:]):
                total += distance(nodes[a], nodes[b])
    return total


def check_feasible(instance: Instance, solution: Solution) -> Feasibility:
    """Collect every feasibility violation; empty list means the solution is feasible.

    Violations are data, not errors: malformed solutions produce violation
    records instead of raising.
    """
    violations: list[Violation] = []
    n = len(instance.nodes)

    if instance.problem is not solution.problem:
        violations.append(
            Violation("problem-class", f"solution is for {solution.problem.value}")
        )
        return Feasibility(tuple(violations))

    if solution.problem is Problem.TSP:
        assert solution.tour is not None
        seen: set[int] = set()
        for i in solution.tour:
            if not (0 <= i < n):
                violations.append(Violation("unknown-node", f"tour visits unknown node {i}", node=i))
            elif i in seen:
                violations.append(Violation("duplicate-visit", f"node {i} visited twice", node=i))
            else:
                seen.add(i)
        for i in range(n):
            if i not in seen:
                violations.append(Violation("missing-customer", f"node {i} never visited", node=i))
    else:
        assert solution.routes is not None
        seen = set()
        for k, route in enumerate(solution.routes):
            if len(route) < 2 or route[0] != 0 or route[-1] != 0:
                violations.append(
                    Violation("not-depot-anchored", f"route {k} does not start and end at the depot", route=k)
                )
            load = 0
            for pos, i in enumerate(route):
                if not (0 <= i < n):
                    violations.append(
                        Violation("unknown-node", f"route {k} visits unknown node {i}", route=k, node=i)
                    )
                    continue
                if i == 0:
                    if 0 < pos < len(route) - 1:
                        violations.append(
                            Violation("interior-depot", f"route {k} revisits the depot mid-route", route=k)
                        )
                    continue
                if i in seen:
                    violations.append(
                        Violation("duplicate-visit", f"customer {i} visited twice", route=k, node=i)
                    )
                else:
                    seen.add(i)
                load += instance.nodes[i].demand
            if instance.capacity is not None and load > instance.capacity:
                violations.append(
                    Violation(
                        "capacity",
                        f"route {k} carries demand {load} > capacity {instance.capacity}",
                        route=k,
                    )
                )
        for i in range(1, n):
            if i not in seen:
                violations.append(Violation("missing-customer", f"customer {i} never visited", node=i))

    return Feasibility(tuple(violations))
