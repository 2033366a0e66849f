"""First-improvement local search over neighbor-list candidate moves.

TSP: 2-opt and Or-opt (segment lengths 1-3, both orientations).
CVRP: relocate, swap, 2-opt* tail exchange, and intra-route 2-opt.

Both engines keep an incrementally updated working cost; best-so-far
snapshots are re-costed from scratch when recorded, so traces never carry
accumulated float drift.
"""

from __future__ import annotations

from typing import Optional, Sequence

from ..core import Instance, Problem, Solution, check_feasible
from .base import (
    Algorithm,
    Budget,
    CurvePoint,
    Geometry,
    InfeasibleStart,
    SolveTrace,
    SolverConfig,
    WrongProblemClass,
    canonical_routes,
    canonical_tour,
)

EPS = 1e-12

TSP_NEIGHBORHOODS = ("two_opt", "or_opt")
CVRP_NEIGHBORHOODS = ("relocate", "swap", "two_opt_star", "intra_two_opt")


class StepCounter:
    """Global anytime step count; one step per scanned node or SA proposal."""

    def __init__(self, cap: Optional[int] = None):
        self.steps = 0
        self.cap = cap

    def tick(self) -> None:
        self.steps += 1

    def exhausted(self) -> bool:
        return self.cap is not None and self.steps >= self.cap


class TourState:
    """Mutable tour with position index and O(1) move deltas."""

    def __init__(self, geom: Geometry, tour: Sequence[int]):
        self.geom = geom
        self.d = geom.dist
        self.tour = list(tour)
        self.n = len(self.tour)
        self.pos = [0] * self.n
        for k, v in enumerate(self.tour):
            self.pos[v] = k
        self.cost = geom.tour_cost(self.tour)

    def succ(self, a: int) -> int:
        return self.tour[(self.pos[a] + 1) % self.n]

    def pred(self, a: int) -> int:
        return self.tour[self.pos[a] - 1]

    def two_opt_delta(self, a: int, b: int) -> Optional[float]:
        """Replace edges (a, succ a), (b, succ b) with (a, b), (succ a, succ b)."""
        if a == b:
            return None
        na, nb = self.succ(a), self.succ(b)
        if na == b or nb == a:
            return None
        d = self.d
        return d[a][b] + d[na][nb] - d[a][na] - d[b][nb]

    def apply_two_opt(self, a: int, b: int, delta: float) -> None:
        pa, pb = self.pos[a], self.pos[b]
        if pa > pb:
            pa, pb = pb, pa
        t, pos = self.tour, self.pos
        i, j = pa + 1, pb
        while i < j:
            t[i], t[j] = t[j], t[i]
            pos[t[i]] = i
            pos[t[j]] = j
            i += 1
            j -= 1
        self.cost += delta

    def _segment(self, a: int, length: int) -> list[int]:
        seg = [a]
        cur = a
        for _ in range(length - 1):
            cur = self.succ(cur)
            seg.append(cur)
        return seg

    def or_opt_delta(self, a: int, length: int, b: int, reverse: bool) -> Optional[float]:
        """Move the segment of `length` nodes starting at a to sit after b."""
        if self.n <= length + 1 or a == b:
            return None
        seg = self._segment(a, length)
        if b in seg:
            return None
        last = seg[-1]
        p = self.pred(a)
        if b == p:
            return None
        q = self.succ(last)
        nb = self.succ(b)
        d = self.d
        gain = d[p][a] + d[last][q] - d[p][q]
        first, end = (last, a) if reverse else (a, last)
        return d[b][first] + d[end][nb] - d[b][nb] - gain

    def apply_or_opt(self, a: int, length: int, b: int, reverse: bool, delta: float) -> None:
        seg = self._segment(a, length)
        rest = []
        cur = self.succ(seg[-1])
        for _ in range(self.n - length):
            rest.append(cur)
            cur = self.succ(cur)
        if reverse:
            seg.reverse()
        out = []
        for v in rest:
            out.append(v)
            if v == b:
                out.extend(seg)
        self.tour = out
        for k, v in enumerate(out):
            self.pos[v] = k
        self.cost += delta

    def snapshot(self) -> tuple[int, ...]:
        return canonical_tour(self.tour)

    def load(self, tour: Sequence[int]) -> None:
        self.tour = list(tour)
        for k, v in enumerate(self.tour):
            self.pos[v] = k
        self.cost = self.geom.tour_cost(self.tour)


class RouteState:
    """Mutable CVRP routes (customer sequences; depot 0 implicit at both ends)."""

    def __init__(self, geom: Geometry, routes: Sequence[Sequence[int]]):
        self.geom = geom
        self.d = geom.dist
        self.demand = geom.demand
        self.cap = geom.capacity
        self.routes = [list(r) for r in routes if r]
        self.cost = geom.routes_cost(self.routes)
        n = len(geom.dist)
        self.loc_route = [-1] * n
        self.loc_pos = [-1] * n
        self.route_load: list[int] = []
        self._reindex()

    def _reindex(self) -> None:
        self.routes = [r for r in self.routes if r]
        self.route_load = []
        for ri, r in enumerate(self.routes):
            total = 0
            for p, c in enumerate(r):
                self.loc_route[c] = ri
                self.loc_pos[c] = p
                total += self.demand[c]
            self.route_load.append(total)

    def pred(self, c: int) -> int:
        p = self.loc_pos[c]
        return self.routes[self.loc_route[c]][p - 1] if p > 0 else 0

    def succ(self, c: int) -> int:
        r = self.routes[self.loc_route[c]]
        p = self.loc_pos[c]
        return r[p + 1] if p < len(r) - 1 else 0

    # -- relocate ----------------------------------------------------------
    def relocate_delta(self, i: int, j: int, before: bool) -> Optional[float]:
        if i == j:
            return None
        ri, rj = self.loc_route[i], self.loc_route[j]
        if ri != rj and self.route_load[rj] + self.demand[i] > self.cap:
            return None
        if before:
            tp, ts = self.pred(j), j
            if tp == i:
                return None
        else:
            tp, ts = j, self.succ(j)
            if ts == i:
                return None
        d = self.d
        pi, si = self.pred(i), self.succ(i)
        gain = d[pi][i] + d[i][si] - d[pi][si]
        return d[tp][i] + d[i][ts] - d[tp][ts] - gain

    def apply_relocate(self, i: int, j: int, before: bool, delta: float) -> None:
        ri = self.loc_route[i]
        self.routes[ri].pop(self.loc_pos[i])
        rj = self.loc_route[j]
        jpos = self.routes[rj].index(j)
        self.routes[rj].insert(jpos if before else jpos + 1, i)
        self._reindex()
        self.cost += delta

    # -- swap ---------------------------------------------------------------
    def swap_delta(self, i: int, j: int) -> Optional[float]:
        if i == j:
            return None
        ri, rj = self.loc_route[i], self.loc_route[j]
        qi, qj = self.demand[i], self.demand[j]
        if ri != rj:
            if self.route_load[ri] - qi + qj > self.cap:
                return None
            if self.route_load[rj] - qj + qi > self.cap:
                return None
        d = self.d
        pi, si = self.pred(i), self.succ(i)
        pj, sj = self.pred(j), self.succ(j)
        if si == j:  # i directly precedes j
            return d[pi][j] + d[j][i] + d[i][sj] - d[pi][i] - d[i][j] - d[j][sj]
        if sj == i:  # j directly precedes i
            return d[pj][i] + d[i][j] + d[j][si] - d[pj][j] - d[j][i] - d[i][si]
        return (
            d[pi][j] + d[j][si] - d[pi][i] - d[i][si]
            + d[pj][i] + d[i][sj] - d[pj][j] - d[j][sj]
        )

    def apply_swap(self, i: int, j: int, delta: float) -> None:
        ri, pi = self.loc_route[i], self.loc_pos[i]
        rj, pj = self.loc_route[j], self.loc_pos[j]
        self.routes[ri][pi] = j
        self.routes[rj][pj] = i
        self._reindex()
        self.cost += delta

    # -- 2-opt* tail exchange -------------------------------------------------
    def two_opt_star_delta(self, i: int, j: int) -> Optional[float]:
        ri, rj = self.loc_route[i], self.loc_route[j]
        if ri == rj:
            return None
        a, b = self.routes[ri], self.routes[rj]
        pi, pj = self.loc_pos[i], self.loc_pos[j]
        head_a = sum(self.demand[c] for c in a[: pi + 1])
        head_b = sum(self.demand[c] for c in b[: pj + 1])
        tail_a = self.route_load[ri] - head_a
        tail_b = self.route_load[rj] - head_b
        if head_a + tail_b > self.cap or head_b + tail_a > self.cap:
            return None
        d = self.d
        si, sj = self.succ(i), self.succ(j)
        return d[i][sj] + d[j][si] - d[i][si] - d[j][sj]

    def apply_two_opt_star(self, i: int, j: int, delta: float) -> None:
        ri, rj = self.loc_route[i], self.loc_route[j]
        pi, pj = self.loc_pos[i], self.loc_pos[j]
        a, b = self.routes[ri], self.routes[rj]
        self.routes[ri] = a[: pi + 1] + b[pj + 1 :]
        self.routes[rj] = b[: pj + 1] + a[pi + 1 :]
        self._reindex()
        self.cost += delta

    # -- intra-route 2-opt -----------------------------------------------------
    def intra_two_opt_delta(self, i: int, j: int) -> Optional[float]:
        if i == j or self.loc_route[i] != self.loc_route[j]:
            return None
        if self.loc_pos[i] > self.loc_pos[j]:
            i, j = j, i
        d = self.d
        si, sj = self.succ(i), self.succ(j)
        if si == j:
            return None
        return d[i][j] + d[si][sj] - d[i][si] - d[j][sj]

    def apply_intra_two_opt(self, i: int, j: int, delta: float) -> None:
        if self.loc_pos[i] > self.loc_pos[j]:
            i, j = j, i
        r = self.routes[self.loc_route[i]]
        pi, pj = self.loc_pos[i], self.loc_pos[j]
        r[pi + 1 : pj + 1] = reversed(r[pi + 1 : pj + 1])
        self._reindex()
        self.cost += delta

    def head_reversal_delta(self, c: int) -> Optional[float]:
        """Reverse the route prefix ending at c (2-opt move using the depot edge)."""
        pc = self.loc_pos[c]
        if pc == 0:
            return None
        r = self.routes[self.loc_route[c]]
        first, sc = r[0], self.succ(c)
        d = self.d
        return d[0][c] + d[first][sc] - d[0][first] - d[c][sc]

    def apply_head_reversal(self, c: int, delta: float) -> None:
        r = self.routes[self.loc_route[c]]
        pc = self.loc_pos[c]
        r[: pc + 1] = reversed(r[: pc + 1])
        self._reindex()
        self.cost += delta

    def snapshot(self) -> tuple[tuple[int, ...], ...]:
        return canonical_routes(self.routes)

    def load(self, routes: Sequence[Sequence[int]]) -> None:
        self.routes = [list(r[1:-1]) if r and r[0] == 0 else list(r) for r in routes]
        self.cost = self.geom.routes_cost(self.routes)
        self._reindex()


class BestTracker:
    """Exact-cost best-so-far snapshots and the anytime cost curve."""

    def __init__(self, geom: Geometry, problem: Problem, budget: Budget, counter: StepCounter):
        self.geom = geom
        self.problem = problem
        self.budget = budget
        self.counter = counter
        self.best_cost = float("inf")
        self.best_snapshot = None
        self.curve: list[CurvePoint] = []

    def offer(self, state) -> bool:
        if state.cost >= self.best_cost - 1e-9:
            return False
        snap = state.snapshot()
        if self.problem is Problem.TSP:
            exact = self.geom.tour_cost(list(snap))
        else:
            exact = self.geom.routes_cost([list(r[1:-1]) for r in snap])
        if exact >= self.best_cost:
            return False
        self.best_cost = exact
        self.best_snapshot = snap
        self.curve.append(CurvePoint(self.counter.steps, self.budget.elapsed(), exact))
        return True

    def best_solution(self) -> Solution:
        assert self.best_snapshot is not None
        if self.problem is Problem.TSP:
            return Solution.for_tsp(self.best_snapshot, self.best_cost)
        return Solution.for_cvrp(self.best_snapshot, self.best_cost)


def descend_tour(
    state: TourState,
    budget: Budget,
    counter: StepCounter,
    tracker: BestTracker,
    neighborhoods: Sequence[str],
) -> bool:
    """First-improvement descent; returns True iff a local optimum was reached."""
    knn = state.geom.knn
    use_two_opt = "two_opt" in neighborhoods
    use_or_opt = "or_opt" in neighborhoods
    improved = True
    while improved:
        improved = False
        for a in range(state.n):
            counter.tick()
            if budget.exceeded() or counter.exhausted():
                return False
            if use_two_opt:
                for b in knn[a]:
                    delta = state.two_opt_delta(a, b)
                    if delta is not None and delta < -EPS:
                        state.apply_two_opt(a, b, delta)
                        tracker.offer(state)
                        improved = True
            if use_or_opt:
                for length in (1, 2, 3):
                    for b in knn[a]:
                        for reverse in (False, True) if length > 1 else (False,):
                            delta = state.or_opt_delta(a, length, b, reverse)
                            if delta is not None and delta < -EPS:
                                state.apply_or_opt(a, length, b, reverse, delta)
                                tracker.offer(state)
                                improved = True
    return True


def descend_routes(
    state: RouteState,
    budget: Budget,
    counter: StepCounter,
    tracker: BestTracker,
    neighborhoods: Sequence[str],
) -> bool:
    knn = state.geom.knn
    customers = state.geom.customers
    use_rel = "relocate" in neighborhoods
    use_swap = "swap" in neighborhoods
    use_star = "two_opt_star" in neighborhoods
    use_intra = "intra_two_opt" in neighborhoods
    improved = True
    while improved:
        improved = False
        for i in customers:
            counter.tick()
            if budget.exceeded() or counter.exhausted():
                return False
            if use_rel:
                for j in knn[i]:
                    for before in (False, True):
                        delta = state.relocate_delta(i, j, before)
                        if delta is not None and delta < -EPS:
                            state.apply_relocate(i, j, before, delta)
                            tracker.offer(state)
                            improved = True
            if use_swap:
                for j in knn[i]:
                    if j > i:
                        delta = state.swap_delta(i, j)
                        if delta is not None and delta < -EPS:
                            state.apply_swap(i, j, delta)
                            tracker.offer(state)
                            improved = True
            if use_star:
                for j in knn[i]:
                    delta = state.two_opt_star_delta(i, j)
                    if delta is not None and delta < -EPS:
                        state.apply_two_opt_star(i, j, delta)
                        tracker.offer(state)
                        improved = True
            if use_intra:
                for j in knn[i]:
                    delta = state.intra_two_opt_delta(i, j)
                    if delta is not None and delta < -EPS:
                        state.apply_intra_two_opt(i, j, delta)
                        tracker.offer(state)
                        improved = True
                delta = state.head_reversal_delta(i)
                if delta is not None and delta < -EPS:
                    state.apply_head_reversal(i, delta)
                    tracker.offer(state)
                    improved = True
    return True


def neighborhoods_for(config: SolverConfig, problem: Problem) -> tuple[str, ...]:
    override = config.params.get("neighborhoods")
    if override:
        return tuple(override)
    if config.algorithm is Algorithm.TWO_OPT:
        return ("two_opt",)
    if config.algorithm is Algorithm.OR_OPT:
        return ("or_opt",)
    return TSP_NEIGHBORHOODS if problem is Problem.TSP else CVRP_NEIGHBORHOODS


def run_descent(
    instance: Instance,
    start: Solution,
    config: SolverConfig,
    geom: Geometry,
    budget: Budget,
    counter: StepCounter,
) -> SolveTrace:
    """Descent core shared by local_search and the composed/annealed solvers."""
    verdict = check_feasible(instance, start)
    if not verdict.ok:
        raise InfeasibleStart(f"start solution is infeasible: {verdict.violations[0].message}")
    tracker = BestTracker(geom, instance.problem, budget, counter)
    hoods = neighborhoods_for(config, instance.problem)

    if instance.problem is Problem.TSP:
        assert start.tour is not None
        state: TourState | RouteState = TourState(geom, start.tour)
        tracker.offer(state)
        descend_tour(state, budget, counter, tracker, hoods)
    else:
        assert start.routes is not None
        state = RouteState(geom, [list(r[1:-1]) for r in start.routes])
        tracker.offer(state)
        descend_routes(state, budget, counter, tracker, hoods)

    return SolveTrace(
        best=tracker.best_solution(),
        cost_curve=tuple(tracker.curve),
        iterations=counter.steps,
        wall_time=budget.elapsed(),
        seed=config.seed,
    )


def local_search(
    instance: Instance,
    start: Solution,
    config: SolverConfig,
    geometry: Optional[Geometry] = None,
) -> SolveTrace:
    """Budgeted first-improvement descent from a feasible start solution."""
    if config.algorithm in (Algorithm.TWO_OPT, Algorithm.OR_OPT) and instance.problem is not Problem.TSP:
        raise WrongProblemClass(f"{config.algorithm.value} applies to TSP instances")
    if config.algorithm is Algorithm.CVRP_LOCAL_SEARCH and instance.problem is not Problem.CVRP:
        raise WrongProblemClass("cvrp_local_search applies to CVRP instances")
    budget = Budget(config.budget_seconds)
    counter = StepCounter(config.params.get("max_steps"))
    geom = geometry if geometry is not None else Geometry(instance, k=config.params.get("neighbors", 10))
    return run_descent(instance, start, config, geom, budget, counter)
