"""DC power flow per electrical island.

Conventions:

* Injections are MW at element level: generators inject, loads withdraw,
  storage is signed (positive = charging = withdrawal).
* Angles are solved in per-unit (``B th = P / base_mva``); line flow in MW is
  ``base_mva * (th_i - th_j) / x``.  Flow sign is positive from -> to.
* Each island containing at least one generator gets a slack bus: the bus of
  the island's highest-p_max generator (ties broken by lowest id).  The
  slack absorbs the island's net mismatch.
* Islands with load but no generation cannot be energized; they are reported
  in ``blackout_islands`` and their internal flows are zero.
* The model is lossless; Joule losses are reconstructed afterwards from
  ``r * i^2`` per line (see :func:`compute_losses`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import BusGraph, Grid, TopologyState, effective_buses

# dense factorization below this size; sparse LU above
_DENSE_MAX_BUSES = 64


class PowerFlowError(RuntimeError):
    """Numerical failure while solving the linear system."""


@dataclass
class InjectionVector:
    """Element-level injections in MW, arrays in canonical grid order."""

    gen_p: np.ndarray       # >= 0, per generator
    load_p: np.ndarray      # >= 0 withdrawal, per load
    storage_p: np.ndarray   # signed, + charging (withdrawal), per storage

    def validate(self, grid: Grid):
        for name, arr in (("gen_p", self.gen_p), ("load_p", self.load_p),
                          ("storage_p", self.storage_p)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        if len(self.gen_p) != len(grid.generators):
            raise ValueError("gen_p length does not match grid")
        if len(self.load_p) != len(grid.loads):
            raise ValueError("load_p length does not match grid")
        if len(self.storage_p) != len(grid.storages):
            raise ValueError("storage_p length does not match grid")
        bad = (self.gen_p < -1e-9) | (self.gen_p > grid.gen_p_max + 1e-9)
        if bad.any():
            j = int(np.argmax(bad))
            raise ValueError(
                f"generator {grid.generators[j].id!r} injection outside [0, p_max]")


@dataclass
class Island:
    buses: list                 # bus positions
    gen_ids: list
    load_ids: list
    slack_gen: str | None
    mismatch_mw: float          # net injection the slack had to absorb (signed)


@dataclass
class FlowResult:
    p_flow: np.ndarray          # MW per line, signed from -> to, 0 when out
    rho: np.ndarray             # |flow| / thermal limit, 0 when out
    theta: np.ndarray           # radians per bus (bus_graph order)
    losses_mw: float
    islands: list               # Island descriptors
    blackout_islands: list      # indices into islands: load but no generation
    bus_graph: BusGraph
    kcl_residual: float         # max abs bus imbalance, MW


class _IslandSolver:
    """Direct factorization of one island's reduced susceptance matrix.

    The matrix depends only on the topology, so instances are cached on the
    bus graph and reused across injections.
    """

    def __init__(self, b_matrix, others: np.ndarray, slack_bus: int):
        self.others = others
        self.slack_bus = slack_bus
        try:
            if sp.issparse(b_matrix):
                self._lu = spla.splu(b_matrix.tocsc())
                self._dense = None
            else:
                self._dense = sla.lu_factor(b_matrix)
                self._lu = None
        except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            raise PowerFlowError(
                f"reduced susceptance matrix is singular: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        theta = (self._lu.solve(rhs) if self._lu is not None
                 else sla.lu_solve(self._dense, rhs))
        if not np.all(np.isfinite(theta)):
            raise PowerFlowError(
                "reduced susceptance matrix is singular (non-finite solution)")
        return np.atleast_1d(theta)


def solve_dc(grid: Grid, topology: TopologyState, injections: InjectionVector,
             bus_graph: BusGraph | None = None) -> FlowResult:
    """Solve the DC approximation and derive flows, loadings and losses."""
    injections.validate(grid)
    bg = bus_graph if bus_graph is not None else effective_buses(grid, topology)
    n_bus = bg.n_buses
    base = grid.base_mva

    p_bus = np.zeros(n_bus)
    np.add.at(p_bus, bg.gen_bus, injections.gen_p)
    np.subtract.at(p_bus, bg.load_bus, injections.load_p)
    np.subtract.at(p_bus, bg.storage_bus, injections.storage_p)

    active = bg.line_from_bus >= 0
    fbus = bg.line_from_bus[active]
    tbus = bg.line_to_bus[active]
    x = grid.line_x[active]
    y = 1.0 / x

    theta = np.zeros(n_bus)
    p_balanced = p_bus.copy()
    islands: list[Island] = []
    blackout: list[int] = []
    dead_buses: list[int] = []

    solver_cache = getattr(bg, "_solver_cache", None)
    if solver_cache is None:
        solver_cache = {}
        bg._solver_cache = solver_cache

    for ci, comp in enumerate(bg.components):
        comp_gens = bg.component_gens[ci]
        comp_load_ids = bg.component_load_ids[ci]
        island = Island(
            buses=list(comp),
            gen_ids=[g.id for g in comp_gens],
            load_ids=comp_load_ids,
            slack_gen=None,
            mismatch_mw=0.0,
        )
        idx = len(islands)
        islands.append(island)
        if not comp_gens:
            if comp_load_ids:
                blackout.append(idx)
            dead_buses.extend(comp)
            continue  # de-energized: theta stays 0, flows stay 0
        slack = min(comp_gens, key=lambda g: (-g.p_max, g.id))
        island.slack_gen = slack.id
        slack_bus = int(bg.element_bus[f"gen:{slack.id}"])
        mismatch = float(sum(p_bus[b] for b in comp))
        island.mismatch_mw = mismatch
        p_balanced[slack_bus] -= mismatch

        solver = solver_cache.get(ci)
        if solver is None:
            others = np.array([b for b in comp if b != slack_bus], dtype=np.int64)
            if others.size == 0:
                solver_cache[ci] = solver = _IslandSolver(np.ones((0, 0)), others, slack_bus)
            else:
                comp_id = int(bg.component_of_bus[comp[0]])
                on_comp = bg.component_of_bus[fbus] == comp_id
                fe, te, ye = fbus[on_comp], tbus[on_comp], y[on_comp]
                m = others.size
                pos = np.full(n_bus, -1, dtype=np.int64)
                pos[others] = np.arange(m)
                rows, cols, vals = [], [], []
                for a, b, adm in ((fe, te, ye), (te, fe, ye)):
                    keep = pos[a] >= 0
                    rows.append(pos[a][keep]); cols.append(pos[a][keep]); vals.append(adm[keep])
                    both = keep & (pos[b] >= 0)
                    rows.append(pos[a][both]); cols.append(pos[b][both]); vals.append(-adm[both])
                rows = np.concatenate(rows); cols = np.concatenate(cols)
                vals = np.concatenate(vals)
                if m <= _DENSE_MAX_BUSES:
                    b_mat = np.zeros((m, m))
                    np.add.at(b_mat, (rows, cols), vals)
                else:
                    b_mat = sp.coo_matrix((vals, (rows, cols)), shape=(m, m))
                solver_cache[ci] = solver = _IslandSolver(b_mat, others, slack_bus)
        if solver.others.size == 0:
            continue
        theta[solver.others] = solver.solve(p_balanced[solver.others] / base)
        theta[slack_bus] = 0.0

    n_line = len(grid.lines)
    p_flow = np.zeros(n_line)
    p_flow[active] = base * (theta[fbus] - theta[tbus]) / x
    rho = np.abs(p_flow) / grid.line_limit
    rho[~active] = 0.0

    # KCL audit: energized buses must balance exactly
    residual = -p_balanced.copy()
    np.add.at(residual, fbus, p_flow[active])
    np.subtract.at(residual, tbus, p_flow[active])
    if dead_buses:
        residual[dead_buses] = 0.0  # de-energized buses serve nothing by construction
    kcl = float(np.max(np.abs(residual))) if n_bus else 0.0
    scale = max(1.0, float(np.max(np.abs(p_bus))) if n_bus else 0.0)
    if kcl > 1e-6 * scale:
        raise PowerFlowError(f"KCL residual {kcl:.3e} MW exceeds sanity bound")

    result = FlowResult(
        p_flow=p_flow,
        rho=rho,
        theta=theta,
        losses_mw=0.0,
        islands=islands,
        blackout_islands=blackout,
        bus_graph=bg,
        kcl_residual=kcl,
    )
    result.losses_mw = compute_losses(result, grid)
    return result


def compute_losses(flow_result: FlowResult, grid: Grid) -> float:
    """Joule losses reconstructed from the lossless flows.

    losses = sum over lines of r_pu * (p_flow / base)^2 * base, in MW.
    """
    base = grid.base_mva
    return float(np.sum(grid.line_r * (flow_result.p_flow / base) ** 2 * base))
