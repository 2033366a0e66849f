"""Construction heuristics: nearest-neighbor tours and Clarke-Wright savings."""

from __future__ import annotations

from ..core import Instance, Problem, Solution
from ..rng import TAG_SOLVER, make_rng
from .base import Geometry, Infeasible, WrongProblemClass, canonical_routes, canonical_tour


def construct_nearest_neighbor(
    instance: Instance, seed: int, geometry: Geometry | None = None
) -> Solution:
    """Greedy tour from a seeded random start node; ties go to the lower id."""
    if instance.problem is not Problem.TSP:
        raise WrongProblemClass("nearest-neighbor construction is TSP-only")
    n = len(instance.nodes)
    if n < 2:
        raise ValueError("nearest neighbor needs at least 2 nodes")
    geom = geometry if geometry is not None else Geometry(instance)
    d = geom.dist
    rng = make_rng(seed, TAG_SOLVER)
    start = int(rng.integers(n))
    tour = [start]
    visited = [False] * n
    visited[start] = True
    current = start
    for _ in range(n - 1):
        row = d[current]
        best_j = -1
        best_d = float("inf")
        for j in range(n):
            if not visited[j] and row[j] < best_d:
                best_d = row[j]
                best_j = j
        tour.append(best_j)
        visited[best_j] = True
        current = best_j
    tour = list(canonical_tour(tour))
    return Solution.for_tsp(tour, geom.tour_cost(tour))


def construct_savings(instance: Instance, geometry: Geometry | None = None) -> Solution:
    """Parallel Clarke-Wright savings; merges only strictly positive savings.

    Deterministic: savings ties are broken by the lower (i, j) pair, routes
    come out in canonical orientation and order.
    """
    if instance.problem is not Problem.CVRP:
        raise WrongProblemClass("savings construction is CVRP-only")
    assert instance.capacity is not None
    cap = instance.capacity
    over = [v.id for v in instance.nodes[1:] if v.demand > cap]
    if over:
        raise Infeasible(f"customers {over} exceed the vehicle capacity")
    geom = geometry if geometry is not None else Geometry(instance)
    d = geom.dist
    n = len(instance.nodes)

    routes: dict[int, list[int]] = {i: [i] for i in range(1, n)}
    load = {i: instance.nodes[i].demand for i in range(1, n)}
    owner = {i: i for i in range(1, n)}  # customer -> route key

    savings = []
    for i in range(1, n):
        for j in range(i + 1, n):
            s = d[0][i] + d[0][j] - d[i][j]
            if s > 0:
                savings.append((-s, i, j))
    savings.sort()

    for neg_s, i, j in savings:
        ri, rj = owner[i], owner[j]
        if ri == rj:
            continue
        if load[ri] + load[rj] > cap:
            continue
        a, b = routes[ri], routes[rj]
        # merge only at endpoints: i must sit at one end of a, j at one end of b
        if a[0] == i:
            a.reverse()
        elif a[-1] != i:
            continue
        if b[-1] == j:
            b.reverse()
        elif b[0] != j:
            continue
        a.extend(b)
        load[ri] += load[rj]
        for c in b:
            owner[c] = ri
        del routes[rj], load[rj]

    route_tuples = canonical_routes(list(routes.values()))
    cost = geom.routes_cost([list(r[1:-1]) for r in route_tuples])
    return Solution.for_cvrp(route_tuples, cost)
