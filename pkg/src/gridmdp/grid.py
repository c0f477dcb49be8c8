"""Static grid description, validation, file format, and topology bookkeeping.

A grid is a set of substations joined by lines, with generators, loads and
storage units attached to substations.  Every substation has two busbars;
reassigning elements between them ("node splitting") changes the electrical
graph without changing the physical one.  Grids and topology states are
treated as immutable values: mutation happens by building new values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

GEN_TYPES = ("hydro", "nuclear", "solar", "thermal", "wind")
RENEWABLE_TYPES = ("solar", "wind")


class GridFormatError(ValueError):
    """Raised when a grid document violates the schema or an invariant."""


@dataclass(frozen=True)
class Substation:
    id: str


@dataclass(frozen=True)
class Line:
    id: str
    from_substation: str
    to_substation: str
    reactance: float        # per-unit, > 0
    resistance: float       # per-unit, >= 0
    thermal_limit: float    # MW, > 0


@dataclass(frozen=True)
class Generator:
    id: str
    substation: str
    gen_type: str
    p_max: float
    p_min: float
    ramp_rate: float        # MW per 5-minute step
    marginal_cost: float    # currency / MWh

    @property
    def renewable(self) -> bool:
        return self.gen_type in RENEWABLE_TYPES


@dataclass(frozen=True)
class Load:
    id: str
    substation: str


@dataclass(frozen=True)
class Storage:
    id: str
    substation: str
    e_max: float            # MWh
    p_max: float            # MW
    efficiency_charge: float
    efficiency_discharge: float
    cost_per_mwh: float


def _element_key(kind: str, element_id: str) -> str:
    return f"{kind}:{element_id}"


@dataclass
class Grid:
    """Validated static network.  Elements are kept sorted by id, which is
    the canonical ordering used everywhere (chronics columns, observation
    layout, injection vectors)."""

    substations: tuple[Substation, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]
    storages: tuple[Storage, ...]
    base_mva: float = 100.0

    # id -> position maps and rating arrays, built once in __post_init__
    sub_index: dict = field(init=False, repr=False, compare=False)
    line_index: dict = field(init=False, repr=False, compare=False)
    gen_index: dict = field(init=False, repr=False, compare=False)
    load_index: dict = field(init=False, repr=False, compare=False)
    storage_index: dict = field(init=False, repr=False, compare=False)
    line_x: np.ndarray = field(init=False, repr=False, compare=False)
    line_r: np.ndarray = field(init=False, repr=False, compare=False)
    line_limit: np.ndarray = field(init=False, repr=False, compare=False)
    gen_p_max: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.substations = tuple(sorted(self.substations, key=lambda s: s.id))
        self.lines = tuple(sorted(self.lines, key=lambda l: l.id))
        self.generators = tuple(sorted(self.generators, key=lambda g: g.id))
        self.loads = tuple(sorted(self.loads, key=lambda l: l.id))
        self.storages = tuple(sorted(self.storages, key=lambda s: s.id))
        self.sub_index = {s.id: i for i, s in enumerate(self.substations)}
        self.line_index = {l.id: i for i, l in enumerate(self.lines)}
        self.gen_index = {g.id: i for i, g in enumerate(self.generators)}
        self.load_index = {l.id: i for i, l in enumerate(self.loads)}
        self.storage_index = {s.id: i for i, s in enumerate(self.storages)}
        self.line_x = np.array([l.reactance for l in self.lines])
        self.line_r = np.array([l.resistance for l in self.lines])
        self.line_limit = np.array([l.thermal_limit for l in self.lines])
        self.gen_p_max = np.array([g.p_max for g in self.generators])
        self._validate()

    def _validate(self):
        if self.base_mva <= 0:
            raise GridFormatError("base_mva must be positive")
        for name, elems, index in (
            ("substation", self.substations, self.sub_index),
            ("line", self.lines, self.line_index),
            ("generator", self.generators, self.gen_index),
            ("load", self.loads, self.load_index),
            ("storage", self.storages, self.storage_index),
        ):
            if len(index) != len(elems):
                seen = set()
                dup = next(e.id for e in elems if e.id in seen or seen.add(e.id))
                raise GridFormatError(f"duplicate {name} id {dup!r}")
        for ln in self.lines:
            for end in (ln.from_substation, ln.to_substation):
                if end not in self.sub_index:
                    raise GridFormatError(
                        f"line {ln.id!r} references unknown substation {end!r}")
            if ln.reactance <= 0:
                raise GridFormatError(f"line {ln.id!r} has non-positive reactance")
            if ln.resistance < 0:
                raise GridFormatError(f"line {ln.id!r} has negative resistance")
            if ln.thermal_limit <= 0:
                raise GridFormatError(f"line {ln.id!r} has non-positive thermal limit")
        for g in self.generators:
            if g.substation not in self.sub_index:
                raise GridFormatError(
                    f"generator {g.id!r} references unknown substation {g.substation!r}")
            if g.gen_type not in GEN_TYPES:
                raise GridFormatError(f"generator {g.id!r} has unknown type {g.gen_type!r}")
            if not (0 <= g.p_min <= g.p_max):
                raise GridFormatError(f"generator {g.id!r} violates 0 <= p_min <= p_max")
            if g.ramp_rate < 0:
                raise GridFormatError(f"generator {g.id!r} has negative ramp rate")
        for l in self.loads:
            if l.substation not in self.sub_index:
                raise GridFormatError(
                    f"load {l.id!r} references unknown substation {l.substation!r}")
        for s in self.storages:
            if s.substation not in self.sub_index:
                raise GridFormatError(
                    f"storage {s.id!r} references unknown substation {s.substation!r}")
            if s.e_max <= 0 or s.p_max <= 0:
                raise GridFormatError(f"storage {s.id!r} needs e_max > 0 and p_max > 0")
            for eff in (s.efficiency_charge, s.efficiency_discharge):
                if not (0 < eff <= 1):
                    raise GridFormatError(f"storage {s.id!r} efficiency outside (0, 1]")
        self._check_connected()

    def _check_connected(self):
        """Substation graph must be connected with every line in service."""
        n = len(self.substations)
        if n == 0:
            raise GridFormatError("grid has no substations")
        adj = [[] for _ in range(n)]
        for ln in self.lines:
            a = self.sub_index[ln.from_substation]
            b = self.sub_index[ln.to_substation]
            adj[a].append(b)
            adj[b].append(a)
        seen = {0}
        stack = [0]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        if len(seen) != n:
            missing = next(s.id for i, s in enumerate(self.substations) if i not in seen)
            raise GridFormatError(
                f"substation graph is disconnected (e.g. {missing!r} unreachable)")

    # -- derived views ------------------------------------------------

    @property
    def renewable_ids(self) -> list[str]:
        return [g.id for g in self.generators if g.renewable]

    @property
    def dispatchable_ids(self) -> list[str]:
        return [g.id for g in self.generators if not g.renewable]

    def element_keys_at(self, sub_id: str, line_status=None) -> list[str]:
        """All element keys attached to a substation.  Line ends count only
        when the line is in service (pass per-line status to filter)."""
        keys = []
        for ln in self.lines:
            if line_status is not None and not line_status[self.line_index[ln.id]]:
                continue
            if ln.from_substation == sub_id:
                keys.append(_element_key("line_from", ln.id))
            if ln.to_substation == sub_id:
                keys.append(_element_key("line_to", ln.id))
        for g in self.generators:
            if g.substation == sub_id:
                keys.append(_element_key("gen", g.id))
        for l in self.loads:
            if l.substation == sub_id:
                keys.append(_element_key("load", l.id))
        for s in self.storages:
            if s.substation == sub_id:
                keys.append(_element_key("storage", s.id))
        return keys

    def substation_of_element(self, key: str) -> str:
        kind, _, eid = key.partition(":")
        if kind == "line_from":
            return self.lines[self.line_index[eid]].from_substation
        if kind == "line_to":
            return self.lines[self.line_index[eid]].to_substation
        if kind == "gen":
            return self.generators[self.gen_index[eid]].substation
        if kind == "load":
            return self.loads[self.load_index[eid]].substation
        if kind == "storage":
            return self.storages[self.storage_index[eid]].substation
        raise KeyError(f"unknown element key {key!r}")


# -- file format -------------------------------------------------------

def grid_from_dict(doc: dict) -> Grid:
    try:
        subs = tuple(Substation(id=str(s["id"])) for s in doc["substations"])
        lines = tuple(
            Line(
                id=str(l["id"]),
                from_substation=str(l["from"]),
                to_substation=str(l["to"]),
                reactance=float(l["x_pu"]),
                resistance=float(l["r_pu"]),
                thermal_limit=float(l["thermal_limit_mw"]),
            )
            for l in doc["lines"]
        )
        gens = tuple(
            Generator(
                id=str(g["id"]),
                substation=str(g["sub"]),
                gen_type=str(g["type"]),
                p_max=float(g["p_max"]),
                p_min=float(g["p_min"]),
                ramp_rate=float(g["ramp_mw_per_step"]),
                marginal_cost=float(g["marginal_cost"]),
            )
            for g in doc["generators"]
        )
        loads = tuple(
            Load(id=str(l["id"]), substation=str(l["sub"])) for l in doc["loads"]
        )
        storages = tuple(
            Storage(
                id=str(s["id"]),
                substation=str(s["sub"]),
                e_max=float(s["e_max_mwh"]),
                p_max=float(s["p_max_mw"]),
                efficiency_charge=float(s["eff_c"]),
                efficiency_discharge=float(s["eff_d"]),
                cost_per_mwh=float(s["cost_per_mwh"]),
            )
            for s in doc.get("storages", [])
        )
        base = float(doc.get("base_mva", 100.0))
    except KeyError as exc:
        raise GridFormatError(f"missing required field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise GridFormatError(f"malformed grid document: {exc}") from exc
    return Grid(subs, lines, gens, loads, storages, base)


def grid_to_dict(grid: Grid) -> dict:
    return {
        "base_mva": grid.base_mva,
        "substations": [{"id": s.id} for s in grid.substations],
        "lines": [
            {
                "id": l.id,
                "from": l.from_substation,
                "to": l.to_substation,
                "x_pu": l.reactance,
                "r_pu": l.resistance,
                "thermal_limit_mw": l.thermal_limit,
            }
            for l in grid.lines
        ],
        "generators": [
            {
                "id": g.id,
                "sub": g.substation,
                "type": g.gen_type,
                "p_max": g.p_max,
                "p_min": g.p_min,
                "ramp_mw_per_step": g.ramp_rate,
                "marginal_cost": g.marginal_cost,
            }
            for g in grid.generators
        ],
        "loads": [{"id": l.id, "sub": l.substation} for l in grid.loads],
        "storages": [
            {
                "id": s.id,
                "sub": s.substation,
                "e_max_mwh": s.e_max,
                "p_max_mw": s.p_max,
                "eff_c": s.efficiency_charge,
                "eff_d": s.efficiency_discharge,
                "cost_per_mwh": s.cost_per_mwh,
            }
            for s in grid.storages
        ],
    }


def parse_grid(document: str) -> Grid:
    """Parse and validate a grid file (JSON text)."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise GridFormatError(f"grid document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GridFormatError("grid document must be a JSON object")
    return grid_from_dict(doc)


def serialize_grid(grid: Grid) -> str:
    return json.dumps(grid_to_dict(grid), indent=2)


def load_grid(path) -> Grid:
    with open(path) as fh:
        return parse_grid(fh.read())


def save_grid(grid: Grid, path):
    with open(path, "w") as fh:
        fh.write(serialize_grid(grid))
        fh.write("\n")


# -- topology ----------------------------------------------------------

@dataclass
class TopologyState:
    """Line statuses, busbar assignment of every element, and cooldowns.

    ``busbar`` maps element keys (``gen:ID``, ``load:ID``, ``storage:ID``,
    ``line_from:ID``, ``line_to:ID``) to busbar 1 or 2 of the element's own
    substation.  Treated as immutable; use :meth:`copy` before editing.
    """

    line_status: np.ndarray        # bool, per line (grid order)
    busbar: dict                   # element key -> 1 | 2
    line_cooldown: np.ndarray      # int steps, per line
    sub_cooldown: np.ndarray       # int steps, per substation

    @classmethod
    def initial(cls, grid: Grid) -> "TopologyState":
        busbar = {}
        for ln in grid.lines:
            busbar[_element_key("line_from", ln.id)] = 1
            busbar[_element_key("line_to", ln.id)] = 1
        for g in grid.generators:
            busbar[_element_key("gen", g.id)] = 1
        for l in grid.loads:
            busbar[_element_key("load", l.id)] = 1
        for s in grid.storages:
            busbar[_element_key("storage", s.id)] = 1
        return cls(
            line_status=np.ones(len(grid.lines), dtype=bool),
            busbar=busbar,
            line_cooldown=np.zeros(len(grid.lines), dtype=np.int64),
            sub_cooldown=np.zeros(len(grid.substations), dtype=np.int64),
        )

    def copy(self) -> "TopologyState":
        return TopologyState(
            line_status=self.line_status.copy(),
            busbar=dict(self.busbar),
            line_cooldown=self.line_cooldown.copy(),
            sub_cooldown=self.sub_cooldown.copy(),
        )

    def validate_for(self, grid: Grid):
        if len(self.line_status) != len(grid.lines):
            raise ValueError("line_status length does not match grid")
        if (self.line_cooldown < 0).any() or (self.sub_cooldown < 0).any():
            raise ValueError("cooldown counters must be >= 0")
        for key, bb in self.busbar.items():
            if bb not in (1, 2):
                raise ValueError(f"element {key!r} assigned to invalid busbar {bb!r}")
            grid.substation_of_element(key)  # raises KeyError on dangling key


@dataclass
class BusGraph:
    """Electrical buses implied by a topology: one bus per (substation,
    busbar) pair that has at least one attached element.  Line ends attach
    only while the line is in service."""

    buses: list                 # (sub_id, busbar) in deterministic order
    bus_index: dict             # (sub_id, busbar) -> position
    element_bus: dict           # element key -> bus position
    line_buses: list            # per line: (bus_i, bus_j) or None if out
    components: list            # list of lists of bus positions
    component_of_bus: np.ndarray
    # vectorized views (grid element order); line entries are -1 when out
    gen_bus: np.ndarray = None
    load_bus: np.ndarray = None
    storage_bus: np.ndarray = None
    line_from_bus: np.ndarray = None
    line_to_bus: np.ndarray = None
    # per component: generators attached, load ids attached
    component_gens: list = None
    component_load_ids: list = None

    @property
    def n_buses(self) -> int:
        return len(self.buses)


def effective_buses(grid: Grid, topology: TopologyState) -> BusGraph:
    """Derive the bus graph for a topology.

    Returns the occupied (substation, busbar) buses, the element-to-bus map,
    per-line bus endpoints, and the connected components over in-service
    lines.  Components may be empty of generation or load; callers decide
    what that means.
    """
    occupied: dict = {}

    def bus_of(key: str, sub_id: str) -> int:
        bb = topology.busbar.get(key, 1)
        node = (sub_id, bb)
        if node not in occupied:
            occupied[node] = len(occupied)
        return occupied[node]

    element_bus: dict = {}
    for g in grid.generators:
        element_bus[_element_key("gen", g.id)] = bus_of(_element_key("gen", g.id), g.substation)
    for l in grid.loads:
        element_bus[_element_key("load", l.id)] = bus_of(_element_key("load", l.id), l.substation)
    for s in grid.storages:
        element_bus[_element_key("storage", s.id)] = bus_of(_element_key("storage", s.id), s.substation)

    line_buses: list = []
    for i, ln in enumerate(grid.lines):
        if not topology.line_status[i]:
            line_buses.append(None)
            continue
        kf = _element_key("line_from", ln.id)
        kt = _element_key("line_to", ln.id)
        bf = bus_of(kf, ln.from_substation)
        bt = bus_of(kt, ln.to_substation)
        element_bus[kf] = bf
        element_bus[kt] = bt
        line_buses.append((bf, bt))

    buses = [None] * len(occupied)
    for node, idx in occupied.items():
        buses[idx] = node

    # connected components over in-service lines
    n = len(buses)
    adj = [[] for _ in range(n)]
    for lb in line_buses:
        if lb is not None:
            a, b = lb
            adj[a].append(b)
            adj[b].append(a)
    comp_of = np.full(n, -1, dtype=np.int64)
    components = []
    for start in range(n):
        if comp_of[start] >= 0:
            continue
        comp = [start]
        comp_of[start] = len(components)
        stack = [start]
        while stack:
            for nb in adj[stack.pop()]:
                if comp_of[nb] < 0:
                    comp_of[nb] = len(components)
                    comp.append(nb)
                    stack.append(nb)
        components.append(comp)

    gen_bus = np.array([element_bus[f"gen:{g.id}"] for g in grid.generators], dtype=np.int64)
    load_bus = np.array([element_bus[f"load:{l.id}"] for l in grid.loads], dtype=np.int64)
    component_gens = [[] for _ in components]
    component_load_ids = [[] for _ in components]
    for j, g in enumerate(grid.generators):
        component_gens[comp_of[gen_bus[j]]].append(g)
    for j, l in enumerate(grid.loads):
        component_load_ids[comp_of[load_bus[j]]].append(l.id)

    return BusGraph(
        buses=buses,
        bus_index=dict(occupied),
        element_bus=element_bus,
        line_buses=line_buses,
        components=components,
        component_of_bus=comp_of,
        gen_bus=gen_bus,
        load_bus=load_bus,
        storage_bus=np.array([element_bus[f"storage:{s.id}"] for s in grid.storages], dtype=np.int64),
        line_from_bus=np.array([lb[0] if lb else -1 for lb in line_buses], dtype=np.int64),
        line_to_bus=np.array([lb[1] if lb else -1 for lb in line_buses], dtype=np.int64),
        component_gens=component_gens,
        component_load_ids=component_load_ids,
    )
