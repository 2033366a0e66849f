"""Exact oracles cross-checked against independent brute-force enumeration."""

import itertools
import math

import pytest

from routepool import (
    Solution,
    check_feasible,
    evaluate,
    exact_cvrp,
    exact_tsp,
    subsample_instance,
)
from routepool.solve import TooLarge, WrongProblemClass

from conftest import cvrp_instance, tsp_instance


def brute_force_tsp(instance):
    """Enumerate all tours; the independent reference for Held-Karp."""
    n = len(instance.nodes)
    best_cost, best_tour = math.inf, None
    for perm in itertools.permutations(range(1, n)):
        tour = (0,) + perm
        cost = evaluate(instance, Solution.for_tsp(tour, 0.0))
        if cost < best_cost:
            best_cost, best_tour = cost, tour
    return Solution.for_tsp(best_tour, best_cost)


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def brute_force_cvrp(instance):
    """Enumerate all capacity-feasible partitions and all route orders."""
    n = instance.size
    cap = instance.capacity
    demand = [v.demand for v in instance.nodes]
    best_cost, best_routes = math.inf, None
    for part in set_partitions(list(range(1, n + 1))):
        if any(sum(demand[c] for c in block) > cap for block in part):
            continue
        routes = []
        total = 0.0
        for block in part:
            block_best, block_route = math.inf, None
            for perm in itertools.permutations(block):
                route = (0,) + perm + (0,)
                cost = sum(
                    math.dist(
                        (instance.nodes[a].x, instance.nodes[a].y),
                        (instance.nodes[b].x, instance.nodes[b].y),
                    )
                    for a, b in zip(route, route[1:])
                )
                if cost < block_best:
                    block_best, block_route = cost, route
            routes.append(block_route)
            total += block_best
        if total < best_cost:
            best_cost, best_routes = total, routes
    return Solution.for_cvrp(best_routes, best_cost)


class TestExactTsp:
    def test_three_nodes_perimeter(self):
        inst = tsp_instance([(0, 0), (1, 0), (0, 1)])
        sol = exact_tsp(inst)
        assert sol.cost == pytest.approx(2 + math.sqrt(2))

    def test_convex_position_gives_hull_tour(self):
        inst = tsp_instance([(0, 0), (1, 0), (1, 1), (0, 1)])
        sol = exact_tsp(inst)
        assert sol.tour in ((0, 1, 2, 3), (0, 3, 2, 1))
        assert sol.cost == pytest.approx(4.0)

    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    def test_matches_brute_force(self, n, tsp_pool):
        for seed in range(5):
            inst = subsample_instance(tsp_pool, n, seed, 0)
            dp = exact_tsp(inst)
            bf = brute_force_tsp(inst)
            assert dp.cost == pytest.approx(bf.cost, rel=1e-9)
            assert check_feasible(inst, dp).ok

    def test_lower_bounds_all_tours_at_n8(self, tsp_pool):
        inst = subsample_instance(tsp_pool, 8, 77, 0)
        opt = exact_tsp(inst).cost
        for perm in itertools.permutations(range(1, 8)):
            cost = evaluate(inst, Solution.for_tsp((0,) + perm, 0.0))
            assert cost >= opt - 1e-9

    def test_too_large(self, tsp_pool):
        inst = subsample_instance(tsp_pool, 16, 1, 0)
        with pytest.raises(TooLarge):
            exact_tsp(inst)

    def test_wrong_problem(self):
        inst = cvrp_instance((0, 0), [(0.5, 0.5, 1)], capacity=5)
        with pytest.raises(WrongProblemClass):
            exact_tsp(inst)


class TestExactCvrp:
    @pytest.mark.parametrize("n", [2, 4, 6, 7])
    def test_matches_brute_force(self, n, cvrp_pool):
        for seed in range(4):
            inst = subsample_instance(cvrp_pool, n, seed, 1)
            dp = exact_cvrp(inst)
            bf = brute_force_cvrp(inst)
            assert dp.cost == pytest.approx(bf.cost, rel=1e-9)
            assert check_feasible(inst, dp).ok

    def test_full_demand_forces_singletons(self):
        customers = [(0.2, 0.3, 10), (0.8, 0.4, 10), (0.5, 0.9, 10)]
        inst = cvrp_instance((0.5, 0.5), customers, capacity=10)
        sol = exact_cvrp(inst)
        assert len(sol.routes) == 3
        expected = 2 * sum(
            math.dist((0.5, 0.5), (x, y)) for x, y, _ in customers
        )
        assert sol.cost == pytest.approx(expected)

    def test_loose_capacity_gives_single_route(self, cvrp_pool):
        for seed in range(6):
            inst = subsample_instance(cvrp_pool, 7, seed, 2)
            total = sum(v.demand for v in inst.customers)
            relaxed = cvrp_instance(
                (inst.depot.x, inst.depot.y),
                [(v.x, v.y, v.demand) for v in inst.customers],
                capacity=total,
            )
            sol = exact_cvrp(relaxed)
            assert len(sol.routes) == 1

    def test_matches_evaluate_on_own_output(self, cvrp_pool):
        inst = subsample_instance(cvrp_pool, 6, 9, 0)
        sol = exact_cvrp(inst)
        assert sol.cost == pytest.approx(evaluate(inst, sol), rel=1e-12)

    def test_too_large(self, cvrp_pool):
        inst = subsample_instance(cvrp_pool, 9, 1, 0)
        with pytest.raises(TooLarge):
            exact_cvrp(inst)

    def test_wrong_problem(self):
        with pytest.raises(WrongProblemClass):
            exact_cvrp(tsp_instance([(0, 0), (1, 1)]))
