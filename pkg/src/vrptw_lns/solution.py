"""Solutions, schedules, feasibility checking, cost and similarity.

Solutions are value-like: every operator works on copies, and evaluation
functions are pure.  ``check_solution`` recomputes everything from the raw
routes and is the independent validator used by all acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SolverError
from .instance import DEPOT, Instance


@dataclass
class Route:
    """Ordered customer visits; the depot is implicit at both ends.

    An open route is a partial route whose tail may still be extended by
    the repair operator.
    """

    customers: list[int]
    open: bool = False

    def copy(self) -> "Route":
        return Route(list(self.customers), self.open)


@dataclass
class Schedule:
    """Forward time propagation of one route, starting from the depot at time 0."""

    nodes: list[int]
    arrival: list[float]
    service_start: list[float]
    waiting: list[float]
    departure: list[float]
    load: float
    distance: float
    return_arrival: float | None = None  # set for closed routes

    @property
    def total_waiting(self) -> float:
        return sum(self.waiting)


@dataclass
class Violation:
    kind: str        # capacity | time_window | depot_closing | structure | vehicle_count | incomplete
    node: int | None
    message: str

    def __str__(self):
        return self.message


@dataclass
class Solution:
    """Routes plus the set of customers not yet visited.

    A solution is complete iff ``unvisited`` is empty and no route is open.
    Every customer appears in exactly one route or in ``unvisited``.
    """

    instance: Instance
    routes: list[Route] = field(default_factory=list)
    unvisited: set[int] = field(default_factory=set)

    @property
    def complete(self) -> bool:
        return not self.unvisited and all(not r.open for r in self.routes)

    @property
    def n_vehicles(self) -> int:
        return sum(1 for r in self.routes if r.customers)

    def open_routes(self) -> list[Route]:
        return [r for r in self.routes if r.open]

    def copy(self) -> "Solution":
        return Solution(self.instance, [r.copy() for r in self.routes], set(self.unvisited))

    def route_key(self) -> tuple[tuple[int, ...], ...]:
        """Canonical encoding: routes as tuples, sorted (route order is a set)."""
        return tuple(sorted(tuple(r.customers) for r in self.routes))


@dataclass
class CostReport:
    total_distance: float
    n_vehicles: int
    feasible: bool
    violations: list[Violation] = field(default_factory=list)


def route_distance(inst: Instance, customers: list[int], closed: bool = True) -> float:
    if not customers:
        return 0.0
    travel = inst.travel
    total = travel[DEPOT, customers[0]]
    for a, b in zip(customers, customers[1:]):
        total += travel[a, b]
    if closed:
        total += travel[customers[-1], DEPOT]
    return float(total)


def evaluate_route(inst: Instance, r: Route) -> Schedule | Violation:
    """Propagate times forward; return the first violation or the full schedule.

    Open routes skip the depot-return check (their tail may be extended),
    closed routes must make it back before the depot closes.
    """
    if not r.customers:
        raise SolverError("evaluate_route requires a nonempty route")
    travel = inst.travel
    n = len(inst.nodes)
    arrival, start, waiting, departure = [], [], [], []
    load = 0.0
    dist = 0.0
    prev = DEPOT
    t = 0.0
    for c in r.customers:
        if not 0 < c < n:
            return Violation("structure", c, f"unknown customer id {c}")
        node = inst.nodes[c]
        load += node.demand
        if load > inst.capacity:
            return Violation("capacity", c,
                             f"load {load} exceeds capacity {inst.capacity} at customer {c}")
        arr = t + travel[prev, c]
        if arr > node.tw_end:
            return Violation("time_window", c,
                             f"arrival {arr:.6g} after window close {node.tw_end:.6g} at customer {c}")
        st = max(arr, node.tw_start)
        arrival.append(float(arr))
        start.append(float(st))
        waiting.append(float(st - arr))
        departure.append(float(st + node.service))
        dist += travel[prev, c]
        t = st + node.service
        prev = c
    ret = None
    if not r.open:
        ret = t + travel[prev, DEPOT]
        dist += travel[prev, DEPOT]
        if ret > inst.depot.tw_end:
            return Violation("depot_closing", prev,
                             f"return at {ret:.6g} after depot closes {inst.depot.tw_end:.6g}")
    return Schedule(list(r.customers), arrival, start, waiting, departure,
                    load=load, distance=float(dist),
                    return_arrival=None if ret is None else float(ret))


def cost(inst: Instance, s: Solution) -> CostReport:
    """Total distance and feasibility of a complete solution."""
    if not s.complete:
        raise SolverError("cost() requires a complete solution; evaluate_route handles fragments")
    violations: list[Violation] = []
    total = 0.0
    for r in s.routes:
        if not r.customers:
            continue
        res = evaluate_route(inst, r)
        if isinstance(res, Violation):
            violations.append(res)
            total += route_distance(inst, r.customers)
        else:
            total += res.distance
    vehicles = s.n_vehicles
    if vehicles > inst.max_vehicles:
        violations.append(Violation("vehicle_count", None,
                                    f"{vehicles} routes exceed the limit of {inst.max_vehicles}"))
    return CostReport(total, vehicles, feasible=not violations, violations=violations)


def check_solution(inst: Instance, s: Solution) -> CostReport:
    """Independent validator: recomputes everything from raw routes.

    Unlike :func:`cost` it accepts partial solutions (reported as
    infeasible with an ``incomplete`` violation) and detects structural
    problems such as duplicated or lost customers.
    """
    violations: list[Violation] = []
    seen: dict[int, int] = {}
    n = len(inst.nodes)
    for ri, r in enumerate(s.routes):
        for c in r.customers:
            if not 0 < c < n:
                violations.append(Violation("structure", c, f"unknown customer id {c}"))
            elif c in seen:
                violations.append(Violation("structure", c,
                                            f"customer {c} appears in routes {seen[c]} and {ri}"))
            else:
                seen[c] = ri
    overlap = set(seen) & s.unvisited
    for c in sorted(overlap):
        violations.append(Violation("structure", c, f"customer {c} both visited and unvisited"))
    missing = set(inst.customers) - set(seen) - s.unvisited
    for c in sorted(missing):
        violations.append(Violation("structure", c, f"customer {c} lost from the partition"))

    total = 0.0
    vehicles = 0
    travel = inst.travel
    for r in s.routes:
        if not r.customers:
            continue
        vehicles += 1
        # independent forward pass, written against raw fields on purpose
        t = 0.0
        load = 0.0
        prev = DEPOT
        for c in r.customers:
            if not 0 < c < n:
                continue
            node = inst.nodes[c]
            total += travel[prev, c]
            load += node.demand
            if load > inst.capacity:
                violations.append(Violation("capacity", c,
                                            f"route load {load} exceeds {inst.capacity}"))
            arr = t + travel[prev, c]
            if arr > node.tw_end:
                violations.append(Violation("time_window", c,
                                            f"arrival {arr:.6g} after {node.tw_end:.6g}"))
            t = max(arr, node.tw_start) + node.service
            prev = c
        if not r.open:
            total += travel[prev, DEPOT]
            if t + travel[prev, DEPOT] > inst.depot.tw_end:
                violations.append(Violation("depot_closing", prev,
                                            f"return {t + travel[prev, DEPOT]:.6g} after close"))
    if vehicles > inst.max_vehicles:
        violations.append(Violation("vehicle_count", None,
                                    f"{vehicles} routes exceed the limit of {inst.max_vehicles}"))
    if s.unvisited or any(r.open for r in s.routes):
        violations.append(Violation("incomplete", None,
                                    f"{len(s.unvisited)} unvisited customers, "
                                    f"{sum(1 for r in s.routes if r.open)} open routes"))
    return CostReport(float(total), vehicles, feasible=not violations, violations=violations)


# ---------------------------------------------------------------------------
# Similarity
# ---------------------------------------------------------------------------

def _lcs_length(a: list[int], b: list[int]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def route_similarity(a: Route, b: Route) -> float:
    """Sequence-matching similarity 2*matches / (len(a)+len(b)), in [0, 1].

    Matches are counted with the longest common subsequence of the two
    customer sequences; the depot is not part of the sequences.
    """
    total = len(a.customers) + len(b.customers)
    if total == 0:
        return 0.0
    return 2.0 * _lcs_length(a.customers, b.customers) / total


def solution_similarity(s1: Solution, s2: Solution) -> float:
    """Symmetrized mean-of-best route similarity between two complete solutions."""

    def directed(x: Solution, y: Solution) -> float:
        xr = [r for r in x.routes if r.customers]
        yr = [r for r in y.routes if r.customers]
        if not xr:
            return 1.0 if not yr else 0.0
        if not yr:
            return 0.0
        return sum(max(route_similarity(r, q) for q in yr) for r in xr) / len(xr)

    return 0.5 * (directed(s1, s2) + directed(s2, s1))


# ---------------------------------------------------------------------------
# Text round trip
# ---------------------------------------------------------------------------

def solution_to_text(s: Solution) -> str:
    """One route per line, space-separated customer ids."""
    return "".join(" ".join(str(c) for c in r.customers) + "\n"
                   for r in s.routes if r.customers)


def solution_from_text(inst: Instance, text: str) -> Solution:
    routes = []
    visited: set[int] = set()
    for ln in text.splitlines():
        if not ln.strip():
            continue
        customers = [int(tok) for tok in ln.split()]
        visited.update(customers)
        routes.append(Route(customers))
    return Solution(inst, routes, set(inst.customers) - visited)
