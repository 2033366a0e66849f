"""Exact small-instance oracles: Held-Karp TSP and set-partition CVRP."""

from __future__ import annotations

from ..core import Instance, Problem, Solution
from .base import Geometry, TooLarge, WrongProblemClass, canonical_routes, canonical_tour

MAX_TSP = 15
MAX_CVRP = 8

_INF = float("inf")


def exact_tsp(instance: Instance) -> Solution:
    """Provably optimal tour via Held-Karp dynamic programming (n <= 15)."""
    if instance.problem is not Problem.TSP:
        raise WrongProblemClass("exact_tsp expects a TSP instance")
    n = len(instance.nodes)
    if n > MAX_TSP:
        raise TooLarge(f"Held-Karp oracle is capped at n={MAX_TSP}, got {n}")
    geom = Geometry(instance, k=1)
    if n == 1:
        return Solution.for_tsp((0,), 0.0)
    d = geom.dist
    m = n - 1  # customers 1..n-1 mapped to bits 0..m-1
    size = 1 << m
    dp = [[_INF] * m for _ in range(size)]
    parent = [[-1] * m for _ in range(size)]
    for k in range(m):
        dp[1 << k][k] = d[0][k + 1]
    for mask in range(size):
        row = dp[mask]
        for last in range(m):
            cur = row[last]
            if cur == _INF or not (mask >> last) & 1:
                continue
            base = d[last + 1]
            for nxt in range(m):
                if (mask >> nxt) & 1:
                    continue
                nm = mask | (1 << nxt)
                cand = cur + base[nxt + 1]
                if cand < dp[nm][nxt]:
                    dp[nm][nxt] = cand
                    parent[nm][nxt] = last
    full = size - 1
    best_last = -1
    best_cost = _INF
    for last in range(m):
        cand = dp[full][last] + d[last + 1][0]
        if cand < best_cost:
            best_cost = cand
            best_last = last
    chain = []
    mask, last = full, best_last
    while last != -1:
        chain.append(last)
        mask, last = mask ^ (1 << last), parent[mask][last]
    tour = [0] + [k + 1 for k in reversed(chain)]
    tour = list(canonical_tour(tour))
    return Solution.for_tsp(tour, geom.tour_cost(tour))


def exact_cvrp(instance: Instance) -> Solution:
    """Optimal CVRP by exhaustive set partition with per-route path DP (n <= 8)."""
    if instance.problem is not Problem.CVRP:
        raise WrongProblemClass("exact_cvrp expects a CVRP instance")
    n = instance.size
    if n > MAX_CVRP:
        raise TooLarge(f"exhaustive CVRP oracle is capped at n={MAX_CVRP}, got {n}")
    assert instance.capacity is not None
    geom = Geometry(instance, k=1)
    d = geom.dist
    demand = geom.demand
    size = 1 << n  # customers 1..n mapped to bits 0..n-1

    demand_sum = [0] * size
    for mask in range(1, size):
        low = (mask & -mask).bit_length() - 1
        demand_sum[mask] = demand_sum[mask ^ (1 << low)] + demand[low + 1]

    # dp[mask][last]: cheapest depot-started path visiting mask, ending at last+1
    dp = [[_INF] * n for _ in range(size)]
    parent = [[-1] * n for _ in range(size)]
    for k in range(n):
        dp[1 << k][k] = d[0][k + 1]
    for mask in range(size):
        row = dp[mask]
        for last in range(n):
            cur = row[last]
            if cur == _INF or not (mask >> last) & 1:
                continue
            base = d[last + 1]
            for nxt in range(n):
                if (mask >> nxt) & 1:
                    continue
                nm = mask | (1 << nxt)
                cand = cur + base[nxt + 1]
                if cand < dp[nm][nxt]:
                    dp[nm][nxt] = cand
                    parent[nm][nxt] = last

    route_cost = [_INF] * size
    route_last = [-1] * size
    cap = instance.capacity
    for mask in range(1, size):
        if demand_sum[mask] > cap:
            continue
        row = dp[mask]
        for last in range(n):
            if (mask >> last) & 1 and row[last] != _INF:
                cand = row[last] + d[last + 1][0]
                if cand < route_cost[mask]:
                    route_cost[mask] = cand
                    route_last[mask] = last

    best = [_INF] * size
    choice = [0] * size
    best[0] = 0.0
    for mask in range(1, size):
        lsb = mask & -mask
        sub = mask
        while sub:
            if sub & lsb and route_cost[sub] != _INF:
                rest = best[mask ^ sub]
                if rest != _INF:
                    cand = route_cost[sub] + rest
                    if cand < best[mask]:
                        best[mask] = cand
                        choice[mask] = sub
            sub = (sub - 1) & mask

    routes = []
    mask = size - 1
    while mask:
        sub = choice[mask]
        seq = []
        m, last = sub, route_last[sub]
        while last != -1:
            seq.append(last + 1)
            m, last = m ^ (1 << last), parent[m][last]
        routes.append(list(reversed(seq)))
        mask ^= sub
    route_tuples = canonical_routes(routes)
    cost = geom.routes_cost([list(r[1:-1]) for r in route_tuples])
    return Solution.for_cvrp(route_tuples, cost)
