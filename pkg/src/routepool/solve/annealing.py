"""Anytime simulated annealing over the local-search neighborhoods.

Pipeline: seeded construction, first-improvement descent, then a Metropolis
walk with geometric cooling and restart-from-best on stagnation.  Restarts
re-descend the incumbent, so the final answer is never worse than plain
local search from the same start.  The budget is enforced per proposal
against a monotonic clock; the proposal sequence itself is a pure function
of (instance, config), so a run can be replayed exactly via the recorded
step count.
"""

from __future__ import annotations

import math

from ..core import Instance, Problem
from ..rng import TAG_SOLVER, make_rng
from .base import Budget, Geometry, SolveTrace, SolverConfig
from .construct import construct_nearest_neighbor, construct_savings
from .localsearch import (
    EPS,
    BestTracker,
    RouteState,
    StepCounter,
    TourState,
    descend_routes,
    descend_tour,
    neighborhoods_for,
)

ACCEPT_TARGET = 0.8  # calibration: median probe delta accepted with this probability


class BufferedU01:
    """Block-buffered uniform(0,1) draws; one PCG64 stream, cheap scalar access."""

    def __init__(self, rng, block: int = 4096):
        self.rng = rng
        self.block = block
        self.buf = rng.random(block).tolist()
        self.i = 0

    def u(self) -> float:
        if self.i >= self.block:
            self.buf = self.rng.random(self.block).tolist()
            self.i = 0
        v = self.buf[self.i]
        self.i += 1
        return v

    def randint(self, n: int) -> int:
        return int(self.u() * n)


def _propose_tour(state: TourState, br: BufferedU01):
    n = state.n
    a = br.randint(n)
    neigh = state.geom.knn[a]
    if not neigh:
        return None, None
    b = neigh[br.randint(len(neigh))]
    kind = br.randint(4)
    if kind == 0:
        return state.two_opt_delta(a, b), ("2opt", a, b, False)
    reverse = kind > 1 and br.u() < 0.5
    return state.or_opt_delta(a, kind, b, reverse), ("oropt", a, b, kind, reverse)


def _apply_tour(state: TourState, move, delta: float) -> None:
    if move[0] == "2opt":
        state.apply_two_opt(move[1], move[2], delta)
    else:
        state.apply_or_opt(move[1], move[3], move[2], move[4], delta)


def _propose_routes(state: RouteState, br: BufferedU01):
    customers = state.geom.customers
    i = customers[br.randint(len(customers))]
    kind = br.randint(6)
    if kind == 5:
        return state.head_reversal_delta(i), ("head", i)
    neigh = state.geom.knn[i]
    if not neigh:
        return None, None
    j = neigh[br.randint(len(neigh))]
    if kind == 0:
        return state.relocate_delta(i, j, False), ("rel", i, j, False)
    if kind == 1:
        return state.relocate_delta(i, j, True), ("rel", i, j, True)
    if kind == 2:
        return state.swap_delta(i, j), ("swap", i, j)
    if kind == 3:
        return state.two_opt_star_delta(i, j), ("star", i, j)
    return state.intra_two_opt_delta(i, j), ("intra", i, j)


def _apply_routes(state: RouteState, move, delta: float) -> None:
    kind = move[0]
    if kind == "rel":
        state.apply_relocate(move[1], move[2], move[3], delta)
    elif kind == "swap":
        state.apply_swap(move[1], move[2], delta)
    elif kind == "star":
        state.apply_two_opt_star(move[1], move[2], delta)
    elif kind == "intra":
        state.apply_intra_two_opt(move[1], move[2], delta)
    else:
        state.apply_head_reversal(move[1], delta)


def _calibrate_temperature(state, propose, br, budget, counter, probes: int = 100) -> float:
    """Start temperature accepting the median probe |delta| with p=0.8."""
    deltas = []
    attempts = 0
    while len(deltas) < probes and attempts < 5 * probes:
        counter.tick()
        if budget.exceeded() or counter.exhausted():
            break
        attempts += 1
        delta, _ = propose(state, br)
        if delta is not None:
            deltas.append(abs(delta))
    if not deltas:
        return 0.0
    deltas.sort()
    median = deltas[len(deltas) // 2]
    if median <= 0.0:
        return 0.0
    return median / math.log(1.0 / ACCEPT_TARGET)


def simulated_annealing(instance: Instance, config: SolverConfig) -> SolveTrace:
    if instance.size < 2:
        raise ValueError("simulated annealing needs at least 2 customers")
    budget = Budget(config.budget_seconds)
    params = config.params
    counter = StepCounter(params.get("max_steps"))
    geom = Geometry(instance, k=params.get("neighbors", 10))
    tracker = BestTracker(geom, instance.problem, budget, counter)
    hoods = neighborhoods_for(config, instance.problem)

    if instance.problem is Problem.TSP:
        start = construct_nearest_neighbor(instance, config.seed, geometry=geom)
        assert start.tour is not None
        state: TourState | RouteState = TourState(geom, start.tour)
        propose, apply_move, descend = _propose_tour, _apply_tour, descend_tour
    else:
        start = construct_savings(instance, geometry=geom)
        assert start.routes is not None
        state = RouteState(geom, [list(r[1:-1]) for r in start.routes])
        propose, apply_move, descend = _propose_routes, _apply_routes, descend_routes

    tracker.offer(state)
    descend(state, budget, counter, tracker, hoods)

    br = BufferedU01(make_rng(config.seed, TAG_SOLVER, 1))
    temperature = params.get("start_temp")
    if temperature is None:
        temperature = _calibrate_temperature(state, propose, br, budget, counter)
    cooling = params.get("cooling", 0.999)
    batch = params.get("accept_batch", 64)
    stagnation_limit = params.get("stagnation", 10_000)

    accepted = 0
    since_best = 0
    while not budget.exceeded() and not counter.exhausted():
        counter.tick()
        since_best += 1
        delta, move = propose(state, br)
        if delta is None:
            if since_best >= stagnation_limit:
                state.load(tracker.best_snapshot)
                descend(state, budget, counter, tracker, hoods)
                since_best = 0
            continue
        take = False
        if delta <= EPS:
            take = True
        elif temperature > 0.0:
            take = br.u() < math.exp(-delta / temperature)
        else:
            br.u()  # keep the stream aligned regardless of temperature
        if take:
            apply_move(state, move, delta)
            accepted += 1
            if tracker.offer(state):
                since_best = 0
            if accepted % batch == 0:
                temperature *= cooling
        if since_best >= stagnation_limit:
            state.load(tracker.best_snapshot)
            descend(state, budget, counter, tracker, hoods)
            since_best = 0

    return SolveTrace(
        best=tracker.best_solution(),
        cost_curve=tuple(tracker.curve),
        iterations=counter.steps,
        wall_time=budget.elapsed(),
        seed=config.seed,
    )
