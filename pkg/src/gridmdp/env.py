"""The operation MDP: reset/step/simulate over a scenario.

Step pipeline: validate the action (illegal actions degrade to do-nothing
with a flag), apply topology changes and start cooldowns, load the next
injections from the chronics, apply curtailment caps and storage setpoints,
compensate the resulting imbalance by redispatching the controllable units
proportionally to their remaining ramp headroom, solve the DC power flow,
run the overload/cascade loop to a fixed point, then check the game-over
conditions.

Reward is sparse: 0 at every non-terminal step; at the terminal step (game
over or end of the scenario) it is the fraction of the scenario survived,
so finishing the whole scenario yields exactly 1.

``simulate`` runs the identical computation against the next chronics row
without mutating the environment, so ``simulate(a)`` followed by ``step(a)``
returns bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actions import (
    Action,
    Composite,
    Curtail,
    DoNothing,
    SetBusbar,
    SetLineStatus,
    SetStorage,
)
from .chronics import Chronics, check_chronics_against_grid
from .grid import Grid, TopologyState, effective_buses
from .powerflow import FlowResult, InjectionVector, solve_dc

HOURS_PER_STEP = 1.0 / 12.0  # 5-minute steps


@dataclass
class EnvConfig:
    overflow_budget: int = 3          # steps a line may sit above rho = 1
    hard_overflow_rho: float = 2.0    # instant trip threshold
    cooldown_steps: int = 3
    step_hours: float = HOURS_PER_STEP
    slack_tolerance_mw: float = 30.0  # max island imbalance the slack absorbs
    price_mwh: float = 70.0           # used for the per-step operation cost info
    night_window: tuple = (20.0, 6.0)  # informational, mirrors the chronics
    oracle_action_clipping: bool = False  # training aid: scale instead of game over

    def __post_init__(self):
        if self.overflow_budget < 1:
            raise ValueError("overflow_budget must be >= 1")
        if self.hard_overflow_rho <= 1:
            raise ValueError("hard_overflow_rho must exceed 1")


@dataclass
class Observation:
    """Named view of the environment state plus its canonical flat encoding.

    Vector layout (all blocks in canonical id-sorted order):
    [sin/cos minute-of-day, sin/cos day-of-year, step fraction] ++ gen_p ++
    renewable_potential ++ load_p ++ line_p_flow ++ rho ++ line_status ++
    line_cooldown ++ storage_energy ++ storage_power ++ curtail_caps ++
    [redispatch margin up, margin down].
    Length = 5 + n_gen + n_load + 4*n_line + 2*n_storage + 2*n_renewable + 2.
    """

    time_features: np.ndarray      # sin/cos minute, sin/cos day-of-year, t/T
    gen_p: np.ndarray
    renewable_potential: np.ndarray
    load_p: np.ndarray
    line_p_flow: np.ndarray
    rho: np.ndarray
    line_status: np.ndarray        # 0/1
    line_cooldown: np.ndarray      # steps (includes maintenance lockout)
    storage_energy: np.ndarray
    storage_power: np.ndarray
    curtail_caps: np.ndarray
    redispatch_margin: np.ndarray  # [up MW, down MW]
    step: int = 0
    _vector: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def vector(self) -> np.ndarray:
        if self._vector is None:
            self._vector = np.concatenate([
                self.time_features,
                self.gen_p,
                self.renewable_potential,
                self.load_p,
                self.line_p_flow,
                self.rho,
                self.line_status,
                self.line_cooldown,
                self.storage_energy,
                self.storage_power,
                self.curtail_caps,
                self.redispatch_margin,
            ]).astype(np.float64)
        return self._vector

    @property
    def max_rho(self) -> float:
        return float(self.rho.max()) if self.rho.size else 0.0


def observation_length(grid: Grid) -> int:
    n_ren = len(grid.renewable_ids)
    return (5 + len(grid.generators) + len(grid.loads) + 4 * len(grid.lines)
            + 2 * len(grid.storages) + 2 * n_ren + 2)


def observation_layout(grid: Grid) -> list:
    """(block name, length) pairs in vector order."""
    n_ren = len(grid.renewable_ids)
    return [
        ("time_features", 5),
        ("gen_p", len(grid.generators)),
        ("renewable_potential", n_ren),
        ("load_p", len(grid.loads)),
        ("line_p_flow", len(grid.lines)),
        ("rho", len(grid.lines)),
        ("line_status", len(grid.lines)),
        ("line_cooldown", len(grid.lines)),
        ("storage_energy", len(grid.storages)),
        ("storage_power", len(grid.storages)),
        ("curtail_caps", n_ren),
        ("redispatch_margin", 2),
    ]


@dataclass
class StepResult:
    observation: Observation
    reward: float
    done: bool
    info: dict


@dataclass
class _State:
    t: int
    line_status: np.ndarray
    busbar: dict
    line_cooldown: np.ndarray
    sub_cooldown: np.ndarray
    maintenance_left: np.ndarray
    overflow_steps: np.ndarray
    storage_energy: np.ndarray
    storage_power: np.ndarray      # last applied, signed
    curtail_caps: np.ndarray       # per renewable
    gen_p: np.ndarray              # realized output at t
    done: bool = False

    def copy(self) -> "_State":
        return _State(
            t=self.t,
            line_status=self.line_status.copy(),
            busbar=dict(self.busbar),
            line_cooldown=self.line_cooldown.copy(),
            sub_cooldown=self.sub_cooldown.copy(),
            maintenance_left=self.maintenance_left.copy(),
            overflow_steps=self.overflow_steps.copy(),
            storage_energy=self.storage_energy.copy(),
            storage_power=self.storage_power.copy(),
            curtail_caps=self.curtail_caps.copy(),
            gen_p=self.gen_p.copy(),
            done=self.done,
        )


class Environment:
    """One scenario instance.  A single instance is not thread-safe for
    concurrent ``step`` calls; ``simulate`` never mutates."""

    def __init__(self, grid: Grid, chronics: Chronics, config: EnvConfig | None = None):
        check_chronics_against_grid(chronics, grid)
        self.grid = grid
        self.chronics = chronics
        self.config = config or EnvConfig()
        self.n_steps = chronics.n_steps
        if self.n_steps < 2:
            raise ValueError("scenario needs at least two steps")
        self.horizon = self.n_steps - 1   # acting steps; row 0 is the initial state

        gens = grid.generators
        self._ren_pos = np.array([j for j, g in enumerate(gens) if g.renewable], dtype=np.int64)
        self._disp_pos = np.array([j for j, g in enumerate(gens) if not g.renewable], dtype=np.int64)
        self._ren_p_max = np.array([gens[j].p_max for j in self._ren_pos])
        self._disp_p_max = np.array([gens[j].p_max for j in self._disp_pos])
        self._disp_p_min = np.array([gens[j].p_min for j in self._disp_pos])
        self._disp_ramp = np.array([gens[j].ramp_rate for j in self._disp_pos])
        self._disp_cost = np.array([gens[j].marginal_cost for j in self._disp_pos])
        self._sto_p_max = np.array([s.p_max for s in grid.storages])
        self._sto_e_max = np.array([s.e_max for s in grid.storages])
        self._sto_eff_c = np.array([s.efficiency_charge for s in grid.storages])
        self._sto_eff_d = np.array([s.efficiency_discharge for s in grid.storages])
        self._sto_cost = np.array([s.cost_per_mwh for s in grid.storages])
        self._ren_ids = [gens[j].id for j in self._ren_pos]
        self._disp_ids = [gens[j].id for j in self._disp_pos]
        self._sto_ids = [s.id for s in grid.storages]
        self._load_energy_per_step = chronics.load_p.sum(axis=1) * self.config.step_hours

        # maintenance windows by start step
        self._maint_start: dict[int, list] = {}
        for line_id, windows in chronics.maintenance.items():
            li = grid.line_index[line_id]
            for start, dur in windows:
                self._maint_start.setdefault(start, []).append((li, dur))

        self._bus_graph_cache: dict = {}
        self._state: _State | None = None
        self._last_flow: FlowResult | None = None

    # -- lifecycle ------------------------------------------------------

    def reset(self) -> Observation:
        n_line = len(self.grid.lines)
        state = _State(
            t=0,
            line_status=np.ones(n_line, dtype=bool),
            busbar=dict(TopologyState.initial(self.grid).busbar),
            line_cooldown=np.zeros(n_line, dtype=np.int64),
            sub_cooldown=np.zeros(len(self.grid.substations), dtype=np.int64),
            maintenance_left=np.zeros(n_line, dtype=np.int64),
            overflow_steps=np.zeros(n_line, dtype=np.int64),
            storage_energy=self._sto_e_max / 2.0,
            storage_power=np.zeros(len(self.grid.storages)),
            curtail_caps=np.ones(len(self._ren_pos)),
            gen_p=self.chronics.dispatch_p[0].copy(),
        )
        for li, dur in self._maint_start.get(0, ()):
            state.line_status[li] = False
            state.maintenance_left[li] = dur
        flow = self._solve(state)
        self._state = state
        self._last_flow = flow
        return self._encode(state, flow)

    def step(self, action: Action) -> StepResult:
        if self._state is None:
            raise RuntimeError("call reset() first")
        if self._state.done:
            raise RuntimeError("episode is done; call reset()")
        new_state, flow, result = self._transition(self._state, action)
        self._state = new_state
        self._last_flow = flow
        return result

    def simulate(self, action: Action) -> StepResult:
        """Predict step(action) using the next chronics row, without mutating."""
        if self._state is None:
            raise RuntimeError("call reset() first")
        if self._state.done:
            raise RuntimeError("episode is done; call reset()")
        _, _, result = self._transition(self._state, action)
        return result

    @property
    def t(self) -> int:
        return self._state.t if self._state is not None else -1

    @property
    def done(self) -> bool:
        return bool(self._state.done) if self._state is not None else False

    @property
    def last_flow(self) -> FlowResult | None:
        return self._last_flow

    def current_observation(self) -> Observation:
        return self._encode(self._state, self._last_flow)

    # -- action legality --------------------------------------------------

    def _check_action(self, state: _State, action: Action) -> str | None:
        """Return a rejection reason, or None when the action is legal."""
        grid = self.grid
        if isinstance(action, DoNothing):
            return None
        if isinstance(action, SetLineStatus):
            li = grid.line_index.get(action.line)
            if li is None:
                return f"unknown line {action.line!r}"
            if state.maintenance_left[li] > 0:
                return f"line {action.line!r} is in maintenance"
            if state.line_cooldown[li] > 0:
                return f"line {action.line!r} is on cooldown"
            return None
        if isinstance(action, SetBusbar):
            si = grid.sub_index.get(action.substation)
            if si is None:
                return f"unknown substation {action.substation!r}"
            if state.sub_cooldown[si] > 0:
                return f"substation {action.substation!r} is on cooldown"
            if not action.assignments:
                return "busbar action with no assignments"
            for key, bb in action.assignments:
                if bb not in (1, 2):
                    return f"invalid busbar {bb!r}"
                try:
                    sub = grid.substation_of_element(key)
                except KeyError:
                    return f"unknown element {key!r}"
                if sub != action.substation:
                    return f"element {key!r} is not at substation {action.substation!r}"
            return None
        if isinstance(action, Curtail):
            for gid, ratio in action.caps:
                if gid not in self._ren_ids:
                    return f"{gid!r} is not a renewable generator"
                if not (0.0 <= ratio <= 1.0) or not math.isfinite(ratio):
                    return f"curtail ratio {ratio!r} outside [0, 1]"
            return None
        if isinstance(action, SetStorage):
            for sid, p in action.power_mw:
                if sid not in self._sto_ids:
                    return f"unknown storage {sid!r}"
                if not math.isfinite(p):
                    return f"non-finite storage power for {sid!r}"
                if abs(p) > self._sto_p_max[self._sto_ids.index(sid)] + 1e-9:
                    return f"storage power for {sid!r} exceeds p_max"
            return None
        if isinstance(action, Composite):
            for part in (action.curtail, action.storage):
                if part is not None:
                    reason = self._check_action(state, part)
                    if reason:
                        return reason
            return None
        return f"unsupported action {type(action).__name__}"

    # -- transition --------------------------------------------------------

    def _transition(self, state: _State, action: Action):
        cfg = self.config
        grid = self.grid
        ch = self.chronics
        s = state.copy()
        t_next = s.t + 1

        reject = self._check_action(state, action)
        illegal = reject is not None
        if illegal:
            action = DoNothing()

        # counters tick once per step
        np.maximum(s.line_cooldown - 1, 0, out=s.line_cooldown)
        np.maximum(s.sub_cooldown - 1, 0, out=s.sub_cooldown)
        np.maximum(s.maintenance_left - 1, 0, out=s.maintenance_left)

        # maintenance windows opening now force the line out
        for li, dur in self._maint_start.get(t_next, ()):
            s.line_status[li] = False
            s.maintenance_left[li] = max(s.maintenance_left[li], dur)

        storage_request = np.zeros(len(grid.storages))
        self._apply_action(s, action, storage_request)

        # chronics for the new step
        load_p = ch.load_p[t_next]
        potential = ch.renewable_potential[t_next]
        schedule = ch.dispatch_p[t_next]
        sched_ren = schedule[self._ren_pos]
        sched_disp = schedule[self._disp_pos]

        # curtailment caps bound the realized renewable output
        realized_ren = np.minimum(sched_ren, s.curtail_caps * self._ren_p_max)
        curtailed = sched_ren - realized_ren  # >= 0

        # storage dynamics, energy clipped to [0, e_max]
        sto_p, delta_e = self._storage_update(s.storage_energy, storage_request)

        # automatic redispatch of the controllable units
        prev_disp = state.gen_p[self._disp_pos]
        head_up = np.maximum(
            np.minimum(self._disp_p_max, prev_disp + self._disp_ramp) - sched_disp, 0.0)
        head_dn = np.maximum(
            sched_disp - np.maximum(self._disp_p_min, prev_disp - self._disp_ramp), 0.0)
        delta = float(curtailed.sum() + sto_p.sum())
        game_over_reason = None
        head = head_up if delta > 0 else head_dn
        total_head = float(head.sum())
        shortfall = abs(delta) - total_head
        if abs(delta) > 1e-12 and shortfall > cfg.slack_tolerance_mw + 1e-9:
            # beyond what ramps plus the slack's flexible band can absorb
            if cfg.oracle_action_clipping:
                factor = total_head / abs(delta)
                realized_ren = sched_ren - factor * curtailed
                curtailed = factor * curtailed
                sto_p = factor * sto_p
                delta_e = factor * delta_e
                delta = float(curtailed.sum() + sto_p.sum())
            else:
                direction = "upward" if delta > 0 else "downward"
                game_over_reason = f"demand unmet: {direction} redispatch headroom exhausted"

        # proportional allocation of the feasible part; any remainder lands on
        # the slack and is judged by the island tolerance check after the solve
        redisp = np.zeros(len(self._disp_pos))
        if game_over_reason is None and abs(delta) > 1e-12 and total_head > 0:
            feasible = min(abs(delta), total_head)
            redisp = np.copysign(feasible, delta) * head / total_head
        realized_disp = sched_disp + redisp

        s.storage_energy = s.storage_energy + delta_e
        s.storage_power = sto_p
        gen_p = np.zeros(len(grid.generators))
        gen_p[self._ren_pos] = realized_ren
        gen_p[self._disp_pos] = realized_disp
        s.gen_p = gen_p

        # solve + cascade loop
        cascade_events: list = []
        flow = None
        if game_over_reason is None:
            inj = InjectionVector(gen_p=gen_p, load_p=load_p, storage_p=sto_p)
            flow = self._solve(s, inj)
            bumped: set = set()
            for _ in range(len(grid.lines) + 1):
                in_service = s.line_status
                trip = set(np.flatnonzero(in_service & (flow.rho >= cfg.hard_overflow_rho)))
                overloaded = np.flatnonzero(in_service & (flow.rho > 1.0))
                for li in overloaded:
                    if li not in bumped:
                        s.overflow_steps[li] += 1
                        bumped.add(int(li))
                trip |= set(np.flatnonzero(in_service & (s.overflow_steps > cfg.overflow_budget)))
                if not trip:
                    break
                for li in sorted(trip):
                    reason = "hard overflow" if flow.rho[li] >= cfg.hard_overflow_rho \
                        else "sustained overflow"
                    cascade_events.append(
                        {"line": grid.lines[li].id, "reason": reason, "rho": float(flow.rho[li])})
                    s.line_status[li] = False
                    s.line_cooldown[li] = cfg.cooldown_steps
                    s.overflow_steps[li] = 0
                flow = self._solve(s, inj)
            s.overflow_steps[s.line_status & (flow.rho <= 1.0)] = 0
            s.overflow_steps[~s.line_status] = 0

            if flow.blackout_islands:
                dead = flow.islands[flow.blackout_islands[0]]
                game_over_reason = (
                    f"demand unmet: load {dead.load_ids[0]!r} in an island without generation")
            else:
                worst = max((abs(i.mismatch_mw) for i in flow.islands), default=0.0)
                if worst > cfg.slack_tolerance_mw:
                    game_over_reason = (
                        f"demand unmet: slack balancing {worst:.1f} MW exceeds "
                        f"{cfg.slack_tolerance_mw:.1f} MW tolerance")

        game_over = game_over_reason is not None
        done = game_over or t_next == self.n_steps - 1
        reward = (t_next / self.horizon) if done else 0.0

        losses = flow.losses_mw if flow is not None else 0.0
        redispatch_mwh = {gid: abs(float(d)) * cfg.step_hours
                          for gid, d in zip(self._disp_ids, redisp)}
        storage_mwh = {sid: abs(float(p)) * cfg.step_hours
                       for sid, p in zip(self._sto_ids, sto_p)}
        curtailed_mwh = float(curtailed.sum()) * cfg.step_hours
        operation_cost = (
            float(sum(redispatch_mwh[gid] * grid.generators[grid.gen_index[gid]].marginal_cost
                      for gid in self._disp_ids))
            + float(np.dot(np.abs(sto_p) * cfg.step_hours, self._sto_cost))
            + curtailed_mwh * cfg.price_mwh)
        blackout_energy = float(self._load_energy_per_step[t_next:].sum()) if game_over else 0.0

        info = {
            "step": t_next,
            "losses_mw": float(losses),
            "operation_cost": operation_cost,
            "redispatch_mwh": redispatch_mwh,
            "storage_mwh": storage_mwh,
            "curtailed_mwh": curtailed_mwh,
            "blackout_energy_mwh": blackout_energy,
            "cascade_events": cascade_events,
            "illegal_action": illegal,
            "illegal_reason": reject,
            "game_over": game_over,
            "game_over_reason": game_over_reason,
            "max_rho": float(flow.rho.max()) if flow is not None and flow.rho.size else 0.0,
            "n_islands": len(flow.islands) if flow is not None else 0,
        }

        s.t = t_next
        s.done = done
        if flow is None:
            # physics never solved (redispatch infeasible): expose a zero-flow view
            flow = self._solve(s, InjectionVector(
                gen_p=np.zeros(len(grid.generators)),
                load_p=np.zeros(len(grid.loads)),
                storage_p=np.zeros(len(grid.storages))))
        obs = self._encode(s, flow)
        return s, flow, StepResult(observation=obs, reward=reward, done=done, info=info)

    def _apply_action(self, s: _State, action: Action, storage_request: np.ndarray):
        grid = self.grid
        cfg = self.config
        if isinstance(action, SetLineStatus):
            li = grid.line_index[action.line]
            if bool(s.line_status[li]) != action.status:
                s.line_status[li] = action.status
                s.line_cooldown[li] = cfg.cooldown_steps
        elif isinstance(action, SetBusbar):
            si = grid.sub_index[action.substation]
            for key, bb in action.assignments:
                s.busbar[key] = bb
            s.sub_cooldown[si] = cfg.cooldown_steps
        elif isinstance(action, Curtail):
            for gid, ratio in action.caps:
                s.curtail_caps[self._ren_ids.index(gid)] = ratio
        elif isinstance(action, SetStorage):
            for sid, p in action.power_mw:
                storage_request[self._sto_ids.index(sid)] = p
        elif isinstance(action, Composite):
            if action.curtail is not None:
                self._apply_action(s, action.curtail, storage_request)
            if action.storage is not None:
                self._apply_action(s, action.storage, storage_request)

    def _storage_update(self, energy: np.ndarray, request: np.ndarray):
        """Clip setpoints to the energy window; returns (actual power, dE)."""
        dt = self.config.step_hours
        p = np.clip(request, -self._sto_p_max, self._sto_p_max)
        delta_e = np.where(p >= 0, self._sto_eff_c * p * dt, p * dt / self._sto_eff_d)
        new_e = energy + delta_e
        over = new_e > self._sto_e_max
        if over.any():
            delta_e = np.where(over, self._sto_e_max - energy, delta_e)
            p = np.where(over, delta_e / (self._sto_eff_c * dt), p)
        under = new_e < 0.0
        if under.any():
            delta_e = np.where(under, -energy, delta_e)
            p = np.where(under, delta_e * self._sto_eff_d / dt, p)
        return p, delta_e

    # -- physics ----------------------------------------------------------

    def _topology(self, s: _State) -> TopologyState:
        return TopologyState(
            line_status=s.line_status,
            busbar=s.busbar,
            line_cooldown=s.line_cooldown,
            sub_cooldown=s.sub_cooldown,
        )

    def _bus_graph(self, s: _State):
        key = (s.line_status.tobytes(), tuple(sorted(s.busbar.items())))
        bg = self._bus_graph_cache.get(key)
        if bg is None:
            bg = effective_buses(self.grid, self._topology(s))
            if len(self._bus_graph_cache) > 32:
                self._bus_graph_cache.clear()
            self._bus_graph_cache[key] = bg
        return bg

    def _solve(self, s: _State, injections: InjectionVector | None = None) -> FlowResult:
        if injections is None:
            t = s.t
            injections = InjectionVector(
                gen_p=s.gen_p,
                load_p=self.chronics.load_p[t],
                storage_p=s.storage_power,
            )
        return solve_dc(self.grid, self._topology(s), injections, bus_graph=self._bus_graph(s))

    # -- observation --------------------------------------------------------

    def _margins(self, s: _State):
        """Total up/down redispatch headroom for the next transition."""
        if s.t + 1 >= self.n_steps:
            return 0.0, 0.0
        sched = self.chronics.dispatch_p[s.t + 1][self._disp_pos]
        prev = s.gen_p[self._disp_pos]
        up = np.maximum(np.minimum(self._disp_p_max, prev + self._disp_ramp) - sched, 0.0)
        dn = np.maximum(sched - np.maximum(self._disp_p_min, prev - self._disp_ramp), 0.0)
        return float(up.sum()), float(dn.sum())

    def _encode(self, s: _State, flow: FlowResult) -> Observation:
        ch = self.chronics
        stamp = ch.start_datetime
        minute = (stamp.hour * 60 + stamp.minute + 5 * s.t) % 1440
        doy = (stamp.timetuple().tm_yday + (stamp.hour * 60 + stamp.minute + 5 * s.t) // 1440)
        up, dn = self._margins(s)
        return Observation(
            time_features=np.array([
                np.sin(2 * np.pi * minute / 1440.0),
                np.cos(2 * np.pi * minute / 1440.0),
                np.sin(2 * np.pi * doy / 365.25),
                np.cos(2 * np.pi * doy / 365.25),
                s.t / self.horizon,
            ]),
            gen_p=s.gen_p.copy(),
            renewable_potential=ch.renewable_potential[s.t].copy(),
            load_p=ch.load_p[s.t].copy(),
            line_p_flow=flow.p_flow.copy(),
            rho=flow.rho.copy(),
            line_status=s.line_status.astype(np.float64),
            line_cooldown=np.maximum(s.line_cooldown, s.maintenance_left).astype(np.float64),
            storage_energy=s.storage_energy.copy(),
            storage_power=s.storage_power.copy(),
            curtail_caps=s.curtail_caps.copy(),
            redispatch_margin=np.array([up, dn]),
            step=s.t,
        )
