"""VRPTW problem instances: Solomon parsing, random generation, precomputation.

An :class:`Instance` is immutable after construction and safe to share
between concurrent solver runs.  Travel times are plain data (a symmetric
matrix); Euclidean distances are only the default, any symmetric
nonnegative matrix may be injected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ParseError

DEPOT = 0
DEFAULT_K = 10


@dataclass(frozen=True)
class Node:
    """One location: the depot (id 0) or a customer."""

    id: int
    x: float
    y: float
    demand: float
    tw_start: float
    tw_end: float
    service: float


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable problem description with precomputed travel and neighborhoods.

    ``nodes[0]`` is the depot.  ``travel`` is an (N+1, N+1) symmetric matrix
    of travel times.  ``neighborhoods[i]`` lists the nearest customers to
    node ``i`` by travel time (ascending, ties by lower id), capped at
    min(k, number of other customers).
    """

    name: str
    nodes: tuple[Node, ...]
    capacity: float
    max_vehicles: int
    travel: np.ndarray
    neighborhoods: tuple[tuple[int, ...], ...] = ()
    k: int = DEFAULT_K

    def __post_init__(self):
        travel = np.asarray(self.travel, dtype=float)
        travel.setflags(write=False)
        object.__setattr__(self, "travel", travel)
        _validate_nodes(self.nodes, self.capacity)
        n = len(self.nodes)
        if travel.shape != (n, n):
            raise ConfigError(f"travel matrix shape {travel.shape} does not match {n} nodes")
        if np.any(travel < 0):
            raise ConfigError("travel times must be nonnegative")
        if np.any(np.diag(travel) != 0):
            raise ConfigError("travel[i][i] must be 0")
        if not np.array_equal(travel, travel.T):
            raise ConfigError("travel matrix must be symmetric")
        if self.max_vehicles < 1:
            raise ConfigError("max_vehicles must be positive")
        if self.capacity <= 0:
            raise ConfigError("capacity must be positive")
        if not self.neighborhoods:
            object.__setattr__(self, "neighborhoods", _nearest_customers(travel, self.k))

    @property
    def n_customers(self) -> int:
        return len(self.nodes) - 1

    @property
    def customers(self) -> range:
        return range(1, len(self.nodes))

    @property
    def depot(self) -> Node:
        return self.nodes[DEPOT]

    def node(self, i: int) -> Node:
        return self.nodes[i]


def _validate_nodes(nodes: tuple[Node, ...], capacity: float) -> None:
    if not nodes:
        raise ConfigError("instance needs at least a depot node")
    for pos, nd in enumerate(nodes):
        if nd.id != pos:
            raise ConfigError(f"node ids must be consecutive from 0, got {nd.id} at position {pos}")
        if nd.tw_start > nd.tw_end:
            raise ConfigError(f"node {nd.id}: tw_start {nd.tw_start} > tw_end {nd.tw_end}")
        if nd.demand < 0 or nd.service < 0:
            raise ConfigError(f"node {nd.id}: demand and service must be nonnegative")
    depot = nodes[0]
    if depot.demand != 0 or depot.service != 0:
        raise ConfigError("depot must have zero demand and zero service time")
    for nd in nodes[1:]:
        if nd.demand > capacity:
            raise ConfigError(f"customer {nd.id} demand {nd.demand} exceeds capacity {capacity}")


def _nearest_customers(travel: np.ndarray, k: int) -> tuple[tuple[int, ...], ...]:
    if k < 1:
        raise ConfigError("neighborhood size k must be >= 1")
    n = travel.shape[0]
    hoods = []
    for i in range(n):
        others = [j for j in range(1, n) if j != i]
        others.sort(key=lambda j: (travel[i, j], j))
        hoods.append(tuple(others[:k]))
    return tuple(hoods)


def build_neighborhoods(inst: Instance, k: int) -> Instance:
    """Return a copy of ``inst`` whose neighborhoods use ``k`` nearest customers."""
    if k < 1:
        raise ConfigError("neighborhood size k must be >= 1")
    if k == inst.k and inst.neighborhoods:
        return inst
    return replace(inst, k=k, neighborhoods=_nearest_customers(inst.travel, k))


def euclidean_travel(nodes: tuple[Node, ...], one_decimal: bool = False) -> np.ndarray:
    """Euclidean travel matrix; optional truncation to one decimal (a common
    benchmark convention, off by default)."""
    xy = np.array([(nd.x, nd.y) for nd in nodes], dtype=float)
    diff = xy[:, None, :] - xy[None, :, :]
    travel = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(travel, 0.0)
    if one_decimal:
        travel = np.floor(travel * 10.0) / 10.0
    return travel


# ---------------------------------------------------------------------------
# Solomon / Homberger plain-text format
# ---------------------------------------------------------------------------

def parse_solomon(text: str, k: int = DEFAULT_K, one_decimal: bool = False) -> Instance:
    """Parse an instance in the Solomon layout.

    Expected sections: a name line, VEHICLE with ``number capacity``, and a
    CUSTOMER table with columns id, x, y, demand, ready, due, service.
    """
    lines = text.splitlines()
    name = ""
    for ln in lines:
        if ln.strip():
            name = ln.strip()
            break
    if not name:
        raise ParseError("line 1: empty file, expected instance name")

    def fail(lineno: int, msg: str):
        raise ParseError(f"line {lineno}: {msg}")

    vehicle_count = None
    capacity = None
    rows: dict[int, tuple[Node, int]] = {}
    section = None
    for lineno, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if not tokens:
            continue
        head = tokens[0].upper()
        if head == "VEHICLE":
            section = "vehicle"
            continue
        if head == "CUSTOMER":
            section = "customer"
            continue
        if section == "vehicle" and vehicle_count is None:
            if tokens[0].upper() == "NUMBER":
                continue
            if len(tokens) < 2:
                fail(lineno, "expected vehicle count and capacity")
            try:
                vehicle_count = int(tokens[0])
                capacity = float(tokens[1])
            except ValueError:
                fail(lineno, f"non-numeric vehicle field in {tokens[:2]}")
            continue
        if section == "customer":
            try:
                values = [float(t) for t in tokens]
            except ValueError:
                if any(t.replace(".", "").lstrip("-").isdigit() for t in tokens):
                    fail(lineno, f"non-numeric field in customer row {tokens}")
                continue  # header line such as "CUST NO. XCOORD. ..."
            if len(values) != 7:
                fail(lineno, f"expected 7 customer columns, got {len(values)}")
            cid = int(values[0])
            if cid != values[0]:
                fail(lineno, f"customer id must be an integer, got {values[0]}")
            if cid in rows:
                fail(lineno, f"duplicate customer id {cid} (first seen on line {rows[cid][1]})")
            x, y, demand, ready, due, service = values[1:]
            if due < ready:
                fail(lineno, f"customer {cid}: due {due} earlier than ready {ready}")
            rows[cid] = (Node(cid, x, y, demand, ready, due, service), lineno)

    if vehicle_count is None or capacity is None:
        raise ParseError("missing or malformed VEHICLE section")
    if not rows:
        raise ParseError("missing CUSTOMER table")
    if DEPOT not in rows:
        raise ParseError("missing depot row (id 0) in CUSTOMER table")
    expected = set(range(len(rows)))
    if set(rows) != expected:
        missing = sorted(expected - set(rows))
        raise ParseError(f"customer ids must be consecutive, missing {missing}")

    nodes = tuple(rows[i][0] for i in range(len(rows)))
    travel = euclidean_travel(nodes, one_decimal=one_decimal)
    try:
        return Instance(name=name, nodes=nodes, capacity=capacity,
                        max_vehicles=vehicle_count, travel=travel, k=k)
    except ConfigError as exc:
        raise ParseError(str(exc)) from exc


def load_solomon(path, k: int = DEFAULT_K, one_decimal: bool = False) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_solomon(fh.read(), k=k, one_decimal=one_decimal)


def format_solomon(inst: Instance) -> str:
    """Render an instance in the Solomon layout (used for generated fixtures)."""
    out = [inst.name, "", "VEHICLE", "NUMBER     CAPACITY",
           f"  {inst.max_vehicles}         {_fmt(inst.capacity)}", "", "CUSTOMER",
           "CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE TIME", ""]
    for nd in inst.nodes:
        out.append("  ".join([str(nd.id), _fmt(nd.x), _fmt(nd.y), _fmt(nd.demand),
                              _fmt(nd.tw_start), _fmt(nd.tw_end), _fmt(nd.service)]))
    return "\n".join(out) + "\n"


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


# ---------------------------------------------------------------------------
# Native line-oriented dump (round-trips any travel matrix)
# ---------------------------------------------------------------------------

def instance_to_text(inst: Instance) -> str:
    """Line-oriented dump for fixtures; round-trips via :func:`instance_from_text`."""
    lines = [f"NAME {inst.name}", f"CAPACITY {inst.capacity!r}",
             f"MAX_VEHICLES {inst.max_vehicles}", f"K {inst.k}",
             f"NODES {len(inst.nodes)}"]
    for nd in inst.nodes:
        lines.append(" ".join(repr(float(v)) for v in
                              (nd.x, nd.y, nd.demand, nd.tw_start, nd.tw_end, nd.service)))
    euclid = euclidean_travel(inst.nodes)
    if np.array_equal(euclid, inst.travel):
        lines.append("TRAVEL EUCLIDEAN")
    else:
        lines.append("TRAVEL EXPLICIT")
        for row in inst.travel:
            lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def instance_from_text(text: str) -> Instance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    try:
        header = {key: val for key, val in
                  (ln.split(None, 1) for ln in lines[:5])}
        n = int(header["NODES"])
        nodes = []
        for i in range(n):
            x, y, demand, e, l, s = (float(v) for v in lines[5 + i].split())
            nodes.append(Node(i, x, y, demand, e, l, s))
        nodes = tuple(nodes)
        mode_line = lines[5 + n].split()
        if mode_line[0] != "TRAVEL":
            raise ParseError(f"line {6 + n}: expected TRAVEL section")
        if mode_line[1] == "EUCLIDEAN":
            travel = euclidean_travel(nodes)
        else:
            travel = np.array([[float(v) for v in lines[6 + n + i].split()]
                               for i in range(n)])
        return Instance(name=header["NAME"], nodes=nodes, capacity=float(header["CAPACITY"]),
                        max_vehicles=int(header["MAX_VEHICLES"]), travel=travel,
                        k=int(header["K"]))
    except (KeyError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed instance dump: {exc}") from exc


# ---------------------------------------------------------------------------
# Random instance sampler (Solomon-like families and horizons)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplerConfig:
    """Configuration of the random instance generator.

    ``family``: R (uniform coordinates), C (clustered), RC (half/half).
    ``horizon_type``: type1 = short horizon / tight capacity, type2 = long
    horizon / large capacity, mirroring the Solomon benchmark conventions.
    ``tw_fraction``: share of customers that receive a finite time window.
    """

    n_customers: int
    family: str = "R"
    horizon_type: str = "type1"
    tw_fraction: float = 1.0
    seed: int = 0
    k: int = DEFAULT_K

    def __post_init__(self):
        if self.n_customers < 1:
            raise ConfigError("n_customers must be >= 1")
        if self.family not in ("R", "C", "RC"):
            raise ConfigError(f"unknown family {self.family!r}, expected R, C or RC")
        if self.horizon_type not in ("type1", "type2"):
            raise ConfigError(f"unknown horizon_type {self.horizon_type!r}")
        if not 0.0 <= self.tw_fraction <= 1.0:
            raise ConfigError("tw_fraction must lie in [0, 1]")


# (horizon, capacity, service) per (family, horizon_type), Solomon-flavored.
_PROFILES = {
    ("R", "type1"): (230.0, 200.0, 10.0),
    ("C", "type1"): (1236.0, 200.0, 90.0),
    ("RC", "type1"): (240.0, 200.0, 10.0),
    ("R", "type2"): (1000.0, 1000.0, 10.0),
    ("C", "type2"): (3390.0, 700.0, 90.0),
    ("RC", "type2"): (960.0, 1000.0, 10.0),
}
_COORD_RANGE = (0.0, 100.0)


def sample_instance(cfg: SamplerConfig) -> Instance:
    """Draw a deterministic random instance for ``cfg`` (fixed seed, fixed output)."""
    rng = np.random.default_rng(cfg.seed)
    horizon, capacity, service = _PROFILES[(cfg.family, cfg.horizon_type)]
    n = cfg.n_customers
    lo, hi = _COORD_RANGE
    center = (lo + hi) / 2.0

    if cfg.family == "R":
        xs = rng.uniform(lo, hi, size=n)
        ys = rng.uniform(lo, hi, size=n)
    else:
        n_clustered = n if cfg.family == "C" else n - n // 2
        n_clusters = max(1, round(math.sqrt(n_clustered) / 2))
        cx = rng.uniform(lo + 10, hi - 10, size=n_clusters)
        cy = rng.uniform(lo + 10, hi - 10, size=n_clusters)
        which = rng.integers(0, n_clusters, size=n_clustered)
        xs = np.clip(cx[which] + rng.normal(0, 5.0, size=n_clustered), lo, hi)
        ys = np.clip(cy[which] + rng.normal(0, 5.0, size=n_clustered), lo, hi)
        if cfg.family == "RC":
            xs = np.concatenate([xs, rng.uniform(lo, hi, size=n // 2)])
            ys = np.concatenate([ys, rng.uniform(lo, hi, size=n // 2)])

    demands = rng.integers(1, 36, size=n).astype(float)
    windowed = np.zeros(n, dtype=bool)
    n_windowed = round(cfg.tw_fraction * n)
    windowed[rng.permutation(n)[:n_windowed]] = True

    nodes = [Node(0, center, center, 0.0, 0.0, horizon, 0.0)]
    for i in range(n):
        x, y = float(xs[i]), float(ys[i])
        dist0 = math.hypot(x - center, y - center)
        latest_start = horizon - service - dist0  # leave room for the return leg
        if latest_start < dist0:
            raise ConfigError(f"sampled customer {i + 1} cannot be served within the horizon")
        if windowed[i]:
            c = rng.uniform(dist0, latest_start)
            half = rng.uniform(0.02, 0.08) * horizon
            e = max(0.0, c - half)
            l = min(c + half, latest_start)
        else:
            e, l = 0.0, horizon
        nodes.append(Node(i + 1, x, y, float(demands[i]), e, l, service))
    nodes = tuple(nodes)
    name = f"{cfg.family}{1 if cfg.horizon_type == 'type1' else 2}_n{n}_s{cfg.seed}"
    return Instance(name=name, nodes=nodes, capacity=capacity, max_vehicles=n,
                    travel=euclidean_travel(nodes), k=cfg.k)
