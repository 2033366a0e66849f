import math

import pytest

from routepool import (
    check_feasible,
    construct_nearest_neighbor,
    construct_savings,
    evaluate,
    exact_tsp,
    local_search,
    subsample_instance,
    Solution,
)
from routepool.solve import Algorithm, InfeasibleStart, SolverConfig, WrongProblemClass

from conftest import tsp_instance


def ls_config(algorithm=Algorithm.TWO_OPT, budget=5.0, seed=0, **params):
    return SolverConfig(algorithm, budget_seconds=budget, seed=seed, params=params)


class TestTspDescent:
    def test_local_optimum_is_fixed_point(self):
        # regular hexagon in hull order: no 2-opt move improves
        pts = [(0.5 + 0.4 * math.cos(2 * math.pi * k / 6), 0.5 + 0.4 * math.sin(2 * math.pi * k / 6)) for k in range(6)]
        inst = tsp_instance(pts)
        start = Solution.for_tsp(range(6), evaluate(inst, Solution.for_tsp(range(6), 0.0)))
        trace = local_search(inst, start, ls_config())
        assert trace.best.tour in ((0, 1, 2, 3, 4, 5), (0, 5, 4, 3, 2, 1))
        assert trace.best.cost == pytest.approx(start.cost)
        assert len(trace.cost_curve) == 1  # only the start entry, zero improving moves

    def test_crossing_removed_on_four_convex_nodes(self):
        inst = tsp_instance([(0, 0), (1, 0), (1, 1), (0, 1)])
        crossing = Solution.for_tsp([0, 2, 1, 3], evaluate(inst, Solution.for_tsp([0, 2, 1, 3], 0.0)))
        trace = local_search(inst, crossing, ls_config())
        assert trace.best.cost == pytest.approx(4.0)
        assert trace.best.cost < crossing.cost

    def test_mean_gap_after_two_opt_from_nn(self, tsp_pool):
        gaps = []
        for seed in range(30):
            inst = subsample_instance(tsp_pool, 10, seed, 0)
            nn = construct_nearest_neighbor(inst, seed)
            trace = local_search(inst, nn, ls_config(seed=seed, neighborhoods=["two_opt", "or_opt"]))
            opt = exact_tsp(inst)
            assert trace.best.cost >= opt.cost - 1e-9
            assert trace.best.cost <= nn.cost + 1e-12
            gaps.append(100 * (trace.best.cost - opt.cost) / opt.cost)
        assert sum(gaps) / len(gaps) <= 5.0

    def test_budget_respected(self, tsp_pool):
        inst = subsample_instance(tsp_pool, 60, 3, 0)
        nn = construct_nearest_neighbor(inst, 3)
        trace = local_search(inst, nn, ls_config(budget=0.1))
        assert trace.wall_time <= 0.1 * 1.05

    def test_infeasible_start_rejected(self, tsp_pool):
        inst = subsample_instance(tsp_pool, 6, 3, 0)
        bad = Solution.for_tsp([0, 1, 2, 3, 4, 4], 0.0)
        with pytest.raises(InfeasibleStart):
            local_search(inst, bad, ls_config())

    def test_wrong_problem_class(self, cvrp_pool):
        inst = subsample_instance(cvrp_pool, 5, 3, 0)
        start = construct_savings(inst)
        with pytest.raises(WrongProblemClass):
            local_search(inst, start, ls_config(algorithm=Algorithm.TWO_OPT))

    def test_determinism(self, tsp_pool):
        inst = subsample_instance(tsp_pool, 25, 5, 0)
        nn = construct_nearest_neighbor(inst, 5)
        t1 = local_search(inst, nn, ls_config(seed=5))
        t2 = local_search(inst, nn, ls_config(seed=5))
        assert t1.best == t2.best
        assert [(p.iteration, p.cost) for p in t1.cost_curve] == [
            (p.iteration, p.cost) for p in t2.cost_curve
        ]


class TestCvrpDescent:
    def test_improves_and_stays_feasible(self, cvrp_pool):
        for seed in range(25):
            inst = subsample_instance(cvrp_pool, 12, seed, 0)
            start = construct_savings(inst)
            trace = local_search(inst, start, ls_config(algorithm=Algorithm.CVRP_LOCAL_SEARCH, seed=seed))
            assert trace.best.cost <= start.cost + 1e-12
            assert check_feasible(inst, trace.best).ok

    def test_trace_monotone_and_consistent(self, cvrp_pool):
        inst = subsample_instance(cvrp_pool, 15, 2, 0)
        start = construct_savings(inst)
        trace = local_search(inst, start, ls_config(algorithm=Algorithm.CVRP_LOCAL_SEARCH))
        costs = [p.cost for p in trace.cost_curve]
        assert costs == sorted(costs, reverse=True)
        assert trace.best.cost == costs[-1]
        assert trace.best.cost == pytest.approx(evaluate(inst, trace.best), rel=1e-9)
