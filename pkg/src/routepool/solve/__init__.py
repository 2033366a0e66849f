"""Deterministic anytime heuristics and exact oracles for TSP/CVRP."""

from __future__ import annotations

from ..core import Instance, Problem, Solution
from .base import (
    Algorithm,
    Budget,
    CurvePoint,
    Geometry,
    Infeasible,
    InfeasibleStart,
    SolverConfig,
    SolveTrace,
    TooLarge,
    WrongProblemClass,
)
from .annealing import simulated_annealing
from .construct import construct_nearest_neighbor, construct_savings
from .exact import exact_cvrp, exact_tsp
from .localsearch import StepCounter, local_search, run_descent

__all__ = [
    "Algorithm",
    "Budget",
    "CurvePoint",
    "Geometry",
    "Infeasible",
    "InfeasibleStart",
    "SolverConfig",
    "SolveTrace",
    "TooLarge",
    "WrongProblemClass",
    "simulated_annealing",
    "construct_nearest_neighbor",
    "construct_savings",
    "exact_cvrp",
    "exact_tsp",
    "local_search",
    "solve",
    "config_for_name",
    "SOLVER_ALIASES",
]


def _trace_for(solution: Solution, budget: Budget, seed: int) -> SolveTrace:
    point = CurvePoint(0, budget.elapsed(), solution.cost)
    return SolveTrace(solution, (point,), 0, budget.elapsed(), seed)


def solve(instance: Instance, config: SolverConfig) -> SolveTrace:
    """Run one solver pipeline end to end (construction included in the budget)."""
    algo = config.algorithm
    if algo is Algorithm.SIMULATED_ANNEALING:
        return simulated_annealing(instance, config)
    if algo is Algorithm.NEAREST_NEIGHBOR:
        budget = Budget(config.budget_seconds)
        return _trace_for(construct_nearest_neighbor(instance, config.seed), budget, config.seed)
    if algo is Algorithm.SAVINGS:
        budget = Budget(config.budget_seconds)
        return _trace_for(construct_savings(instance), budget, config.seed)
    if algo is Algorithm.EXACT_ORACLE:
        budget = Budget(config.budget_seconds)
        sol = exact_tsp(instance) if instance.problem is Problem.TSP else exact_cvrp(instance)
        return _trace_for(sol, budget, config.seed)
    if algo in (Algorithm.TWO_OPT, Algorithm.OR_OPT, Algorithm.CVRP_LOCAL_SEARCH):
        if algo is Algorithm.CVRP_LOCAL_SEARCH and instance.problem is not Problem.CVRP:
            raise WrongProblemClass("cvrp_local_search applies to CVRP instances")
        if algo is not Algorithm.CVRP_LOCAL_SEARCH and instance.problem is not Problem.TSP:
            raise WrongProblemClass(f"{algo.value} applies to TSP instances")
        budget = Budget(config.budget_seconds)
        counter = StepCounter(config.params.get("max_steps"))
        geom = Geometry(instance, k=config.params.get("neighbors", 10))
        if instance.problem is Problem.TSP:
            start = construct_nearest_neighbor(instance, config.seed, geometry=geom)
        else:
            start = construct_savings(instance, geometry=geom)
        return run_descent(instance, start, config, geom, budget, counter)
    raise ValueError(f"unknown algorithm {algo}")


# Friendly CLI/bench names for full solver pipelines.
SOLVER_ALIASES = ("greedy", "ls", "two-opt", "or-opt", "sa", "exact")


def config_for_name(
    name: str, problem: Problem, budget: float = 1.0, seed: int = 0, params: dict | None = None
) -> SolverConfig:
    """Map a friendly solver name to a concrete SolverConfig for the problem."""
    p = dict(params or {})
    if name == "greedy":
        algo = Algorithm.NEAREST_NEIGHBOR if problem is Problem.TSP else Algorithm.SAVINGS
    elif name == "ls":
        if problem is Problem.TSP:
            algo = Algorithm.TWO_OPT
            p.setdefault("neighborhoods", list(("two_opt", "or_opt")))
        else:
            algo = Algorithm.CVRP_LOCAL_SEARCH
    elif name == "two-opt":
        algo = Algorithm.TWO_OPT
    elif name == "or-opt":
        algo = Algorithm.OR_OPT
    elif name == "sa":
        algo = Algorithm.SIMULATED_ANNEALING
    elif name == "exact":
        algo = Algorithm.EXACT_ORACLE
    else:
        raise ValueError(f"unknown solver name {name!r}; expected one of {SOLVER_ALIASES}")
    return SolverConfig(algorithm=algo, budget_seconds=budget, seed=seed, params=p)
