"""Sequential construction MDP: states, masked actions, rollouts and repair.

A state holds a fixed number ``kappa`` of route slots that are extended in
parallel, one node per step.  Action (r, i) appends customer i to slot r;
action (r, 0) returns slot r to the depot and closes its route.  The
feasibility mask guarantees that every offered action keeps the partial
solution feasible, including the eventual return to the depot (the travel
matrix is not assumed metric, so the return leg is checked explicitly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from .errors import (ConfigError, InfeasibleActionError, InfeasibleInstanceError,
                     RepairLimitError, SolverError)
from .instance import DEPOT, Instance
from .solution import Route, Solution, Violation, evaluate_route

RETURN = DEPOT  # selecting the depot closes the slot's route

START_POOL_FRACTION = 0.25


class Action(NamedTuple):
    slot: int
    node: int  # customer id, or RETURN

    @property
    def is_return(self) -> bool:
        return self.node == RETURN


@dataclass
class VehicleFeatures:
    """Per-slot vehicle status: capacity left, position, clock, slot index."""

    remaining_capacity: float
    current_node: int
    current_time: float
    route_slot: int


class Scorer(Protocol):
    """Scores candidate actions; must be a pure function of (state, actions)."""

    def score(self, state: "ConstructionState", actions: Sequence[Action]) -> np.ndarray:
        ...


class ConstructionState:
    """Mutable decoding state; ``apply_action`` advances it in place."""

    __slots__ = ("inst", "kappa", "slots", "vehicles", "unvisited", "step", "finished_routes")

    def __init__(self, inst: Instance, kappa: int):
        if kappa < 1:
            raise ConfigError("kappa must be >= 1")
        self.inst = inst
        self.kappa = kappa
        self.slots: list[list[int]] = [[] for _ in range(kappa)]
        self.vehicles = [VehicleFeatures(inst.capacity, DEPOT, 0.0, r) for r in range(kappa)]
        self.unvisited: set[int] = set(inst.customers)
        self.step = 0
        self.finished_routes: list[list[int]] = []

    @classmethod
    def from_partial(cls, inst: Instance, kappa: int, partial: Solution) -> "ConstructionState":
        """Load a partial solution for repair; open routes fill the slots."""
        open_routes = [r for r in partial.routes if r.open and r.customers]
        if len(open_routes) > kappa:
            raise RepairLimitError(
                f"{len(open_routes)} open routes exceed the repair limit kappa={kappa}")
        state = cls(inst, kappa)
        state.unvisited = set(partial.unvisited)
        for r in partial.routes:
            if not r.customers or r.open:
                continue
            state.finished_routes.append(list(r.customers))
        for slot, r in enumerate(open_routes):
            sched = evaluate_route(inst, r)
            if isinstance(sched, Violation):
                raise SolverError(f"cannot repair infeasible fragment: {sched}")
            last = r.customers[-1]
            depart = sched.departure[-1]
            if depart + inst.travel[last, DEPOT] > inst.depot.tw_end:
                raise SolverError(f"open route ending at {last} cannot return to the depot")
            state.slots[slot] = list(r.customers)
            state.vehicles[slot] = VehicleFeatures(inst.capacity - sched.load, last,
                                                   depart, slot)
        return state

    @property
    def done(self) -> bool:
        return not self.unvisited and all(not s for s in self.slots)

    def open_slots(self) -> list[int]:
        return [r for r in range(self.kappa) if self.slots[r]]

    def action_slots(self) -> list[int]:
        """Slots that generate actions: open ones plus the first empty one."""
        slots = self.open_slots()
        if self.unvisited:
            for r in range(self.kappa):
                if not self.slots[r]:
                    slots.append(r)
                    break
        return sorted(slots)

    def to_solution(self) -> Solution:
        routes = [Route(list(r)) for r in self.finished_routes]
        for r in range(self.kappa):
            if self.slots[r]:
                routes.append(Route(list(self.slots[r]), open=True))
        return Solution(self.inst, routes, set(self.unvisited))


def single_customer_feasible(inst: Instance, i: int) -> bool:
    """Can customer i be served alone in a fresh route?"""
    node = inst.nodes[i]
    arr = inst.travel[DEPOT, i]
    if arr > node.tw_end or node.demand > inst.capacity:
        return False
    return max(arr, node.tw_start) + node.service + inst.travel[i, DEPOT] <= inst.depot.tw_end


def _earliest_tw_pool(inst: Instance, candidates: Sequence[int]) -> list[int]:
    """The ceil(25%) earliest-opening candidates, ties broken by lower id."""
    ordered = sorted(candidates, key=lambda i: (inst.nodes[i].tw_start, i))
    return ordered[:max(1, math.ceil(START_POOL_FRACTION * len(ordered)))]


def start_nodes_pomo(inst: Instance, kappa: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Sample kappa distinct start customers from the earliest-opening quarter
    of the depot neighborhood, extending the pool with the next-earliest
    customers when kappa exceeds the pool."""
    if kappa > inst.n_customers:
        raise ConfigError(f"kappa={kappa} exceeds the {inst.n_customers} customers")
    h0 = inst.neighborhoods[DEPOT]
    pool = _earliest_tw_pool(inst, h0)
    if kappa > len(pool):
        chosen = set(pool)
        rest = sorted((i for i in inst.customers if i not in chosen),
                      key=lambda i: (inst.nodes[i].tw_start, i))
        pool = pool + rest[:kappa - len(pool)]
    picks = rng.choice(len(pool), size=kappa, replace=False)
    return tuple(pool[int(p)] for p in picks)


def feasible_actions(state: ConstructionState) -> list[Action]:
    """All actions allowed by the mask, in canonical (slot, node) order.

    Open slots offer RETURN plus every unvisited neighbor of their last node
    that fits capacity, arrives before the window closes and can still make
    it back to the depot.  The first empty slot offers new-route starts from
    the earliest-opening quarter of the unvisited customers.
    """
    inst = state.inst
    travel = inst.travel
    depot_close = inst.depot.tw_end
    actions: list[Action] = []
    new_route_done = False
    for r in range(state.kappa):
        route = state.slots[r]
        if route:
            veh = state.vehicles[r]
            j = veh.current_node
            actions.append(Action(r, RETURN))
            hood = inst.neighborhoods[j]
            cands = sorted(i for i in hood if i in state.unvisited)
            for i in cands:
                node = inst.nodes[i]
                if node.demand > veh.remaining_capacity:
                    continue
                arr = veh.current_time + travel[j, i]
                if arr > node.tw_end:
                    continue
                if max(arr, node.tw_start) + node.service + travel[i, DEPOT] > depot_close:
                    continue
                actions.append(Action(r, i))
        elif not new_route_done and state.unvisited:
            new_route_done = True
            pool = [i for i in _earliest_tw_pool(inst, sorted(state.unvisited))
                    if single_customer_feasible(inst, i)]
            if not pool:
                pool = [i for i in sorted(state.unvisited) if single_customer_feasible(inst, i)]
            for i in sorted(pool):
                actions.append(Action(r, i))
    return actions


def apply_action(state: ConstructionState, a: Action) -> ConstructionState:
    """Apply one action in place; raises if it violates the feasibility mask."""
    inst = state.inst
    if not 0 <= a.slot < state.kappa:
        raise InfeasibleActionError(f"slot {a.slot} out of range")
    veh = state.vehicles[a.slot]
    if a.is_return:
        if state.slots[a.slot]:
            state.finished_routes.append(state.slots[a.slot])
        state.slots[a.slot] = []
        state.vehicles[a.slot] = VehicleFeatures(inst.capacity, DEPOT, 0.0, a.slot)
        state.step += 1
        return state
    i = a.node
    if i not in state.unvisited:
        raise InfeasibleActionError(f"customer {i} is not unvisited")
    node = inst.nodes[i]
    if node.demand > veh.remaining_capacity:
        raise InfeasibleActionError(f"customer {i} demand exceeds remaining capacity")
    arr = veh.current_time + inst.travel[veh.current_node, i]
    if arr > node.tw_end:
        raise InfeasibleActionError(f"arrival {arr:.6g} after window close at customer {i}")
    depart = max(arr, node.tw_start) + node.service
    if depart + inst.travel[i, DEPOT] > inst.depot.tw_end:
        raise InfeasibleActionError(f"customer {i} would miss the depot closing time")
    state.slots[a.slot].append(i)
    state.unvisited.discard(i)
    veh.remaining_capacity -= node.demand
    veh.current_node = i
    veh.current_time = depart
    state.step += 1
    return state


def _raise_infeasible(state: ConstructionState):
    for i in sorted(state.unvisited):
        if not single_customer_feasible(state.inst, i):
            raise InfeasibleInstanceError(
                f"customer {i} cannot be served alone in a fresh route")
    raise InfeasibleInstanceError(
        f"no feasible action for unvisited customers {sorted(state.unvisited)}")


def decode(state: ConstructionState, pick, max_steps: int | None = None) -> Solution:
    """Run ``pick(state, actions) -> index`` until the state is complete."""
    if max_steps is None:
        max_steps = max(8, 4 * state.inst.n_customers)
    start_step = state.step
    while not state.done:
        if state.step - start_step > max_steps:
            raise SolverError(f"decoding exceeded the {max_steps}-step bound")
        actions = feasible_actions(state)
        if not actions:
            _raise_infeasible(state)
        apply_action(state, actions[pick(state, actions)])
    return state.to_solution()


def _greedy_pick(scorer: Scorer):
    def pick(state, actions):
        return int(np.argmax(scorer.score(state, actions)))
    return pick


def _sample_pick(scorer: Scorer, rng: np.random.Generator):
    def pick(state, actions):
        logits = np.asarray(scorer.score(state, actions), dtype=float)
        logits = logits - logits.max()
        probs = np.exp(logits)
        probs /= probs.sum()
        return int(rng.choice(len(actions), p=probs))
    return pick


def _make_pick(scorer: Scorer, mode: str, rng: np.random.Generator | None):
    if mode == "greedy":
        return _greedy_pick(scorer)
    if mode == "sample":
        if rng is None:
            raise ConfigError("sample mode needs a random generator")
        return _sample_pick(scorer, rng)
    raise ConfigError(f"unknown decoding mode {mode!r}")


def rollout(inst: Instance, scorer: Scorer, mode: str = "greedy", kappa: int = 4,
            rng: np.random.Generator | None = None,
            start_nodes: Sequence[int] | None = None) -> Solution:
    """Construct one complete solution from scratch.

    Start nodes for the initial kappa routes are sampled from the
    earliest-opening quarter of the depot neighborhood unless given.
    """
    if inst.n_customers == 0:
        return Solution(inst)
    kappa = min(kappa, inst.n_customers)
    state = ConstructionState(inst, kappa)
    if start_nodes is None:
        if rng is None:
            raise ConfigError("rollout needs a random generator to sample start nodes")
        start_nodes = start_nodes_pomo(inst, kappa, rng)
    for slot, i in enumerate(start_nodes):
        apply_action(state, Action(slot, i))
    return decode(state, _make_pick(scorer, mode, rng))


def pomo_rollouts(inst: Instance, scorer: Scorer, n: int, kappa: int = 4,
                  rng: np.random.Generator | None = None) -> list[Solution]:
    """n greedy decodes from independently sampled start-node configurations."""
    if n < 1:
        raise ConfigError("need at least one rollout")
    if rng is None:
        raise ConfigError("pomo_rollouts needs a random generator")
    if inst.n_customers == 0:
        return [Solution(inst) for _ in range(n)]
    kappa = min(kappa, inst.n_customers)
    out = []
    for _ in range(n):
        starts = start_nodes_pomo(inst, kappa, rng)
        out.append(rollout(inst, scorer, "greedy", kappa, rng, start_nodes=starts))
    return out


def reconstruct(inst: Instance, scorer: Scorer, partial: Solution, mode: str = "greedy",
                rng: np.random.Generator | None = None, kappa: int = 4) -> Solution:
    """Complete a partial solution: open routes are extended in their slots,
    finished routes are preserved verbatim, and any number of new routes may
    be opened.  At most kappa open routes are accepted."""
    kappa = min(kappa, inst.n_customers) if inst.n_customers else kappa
    state = ConstructionState.from_partial(inst, kappa, partial)
    return decode(state, _make_pick(scorer, mode, rng))


class DistanceGreedyScorer:
    """Baseline scorer: prefer the nearest feasible node; return to the depot
    only when that beats every other option by the bias margin."""

    def __init__(self):
        self._bias_cache: dict[int, float] = {}

    def _bias(self, inst: Instance) -> float:
        key = id(inst)
        if key not in self._bias_cache:
            self._bias_cache[key] = float(inst.travel.max()) + 1.0
        return self._bias_cache[key]

    def score(self, state: ConstructionState, actions: Sequence[Action]) -> np.ndarray:
        inst = state.inst
        bias = self._bias(inst)
        out = np.empty(len(actions))
        for n, a in enumerate(actions):
            origin = state.vehicles[a.slot].current_node if state.slots[a.slot] else DEPOT
            if a.is_return:
                out[n] = -(inst.travel[origin, DEPOT] + bias)
            else:
                out[n] = -inst.travel[origin, a.node]
        return out
