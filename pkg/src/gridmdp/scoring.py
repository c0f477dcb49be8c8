"""The challenge metric.

Three per-episode costs, all in currency units:

* losses: energy dissipated by the Joule effect, priced at the MWh price;
* operations: automatic redispatch energy at each unit's marginal cost,
  storage throughput at its fixed per-MWh cost, and curtailed renewable
  energy compensated at the MWh price;
* blackout: when the episode ends early, the demand left unserved priced at
  the MWh price and multiplied by a penalty factor > 1, which keeps any
  surviving agent ahead of any non-surviving one.

Per scenario, totals are normalized to [-100, 100]: the do-nothing agent's
total maps to 0, a tuned best-case anchor maps to +100, an immediate
blackout maps to -100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actions import DoNothing
from .chronics import Chronics
from .env import EnvConfig, Environment
from .grid import Grid

DEFAULT_PRICE_MWH = 70.0
DEFAULT_BLACKOUT_BETA = 2.0
DEFAULT_BEST_FRACTION = 0.8


@dataclass
class EpisodeCosts:
    losses_cost: float
    operation_cost: float
    blackout_cost: float

    @property
    def total(self) -> float:
        return self.losses_cost + self.operation_cost + self.blackout_cost


@dataclass
class ScenarioRefs:
    c_dn: float      # do-nothing total cost
    c_best: float    # cost mapped to +100
    c_worst: float   # cost mapped to -100 (blackout at step 0)


def episode_costs(step_infos: list, grid: Grid, price_mwh: float = DEFAULT_PRICE_MWH,
                  step_hours: float = 1.0 / 12.0,
                  blackout_beta: float = DEFAULT_BLACKOUT_BETA) -> EpisodeCosts:
    """Aggregate an episode's per-step info records into the three costs."""
    if not step_infos:
        raise ValueError("episode has no step records")
    marginal = {g.id: g.marginal_cost for g in grid.generators}
    storage_cost = {s.id: s.cost_per_mwh for s in grid.storages}
    losses_mwh = 0.0
    operation = 0.0
    blackout_mwh = 0.0
    for info in step_infos:
        losses_mwh += info["losses_mw"] * step_hours
        for gid, mwh in info["redispatch_mwh"].items():
            operation += mwh * marginal[gid]
        for sid, mwh in info["storage_mwh"].items():
            operation += mwh * storage_cost[sid]
        operation += info["curtailed_mwh"] * price_mwh
        blackout_mwh += info.get("blackout_energy_mwh", 0.0)
    return EpisodeCosts(
        losses_cost=losses_mwh * price_mwh,
        operation_cost=operation,
        blackout_cost=blackout_mwh * price_mwh * blackout_beta,
    )


def run_do_nothing(grid: Grid, chronics: Chronics, env_config: EnvConfig | None = None):
    """Roll the do-nothing policy through a scenario; returns its step infos."""
    env = Environment(grid, chronics, env_config)
    env.reset()
    infos = []
    done = False
    while not done:
        result = env.step(DoNothing())
        infos.append(result.info)
        done = result.done
    return infos


def scenario_refs(grid: Grid, chronics: Chronics, env_config: EnvConfig | None = None,
                  price_mwh: float = DEFAULT_PRICE_MWH,
                  blackout_beta: float = DEFAULT_BLACKOUT_BETA,
                  best_fraction: float = DEFAULT_BEST_FRACTION) -> ScenarioRefs:
    """Normalization anchors for one scenario.

    c_dn is measured by actually running the do-nothing agent; c_worst is
    the cost of blacking out immediately (all demand after the initial row
    unserved); c_best scales the do-nothing losses-only cost by a fixed
    optimistic fraction.
    """
    cfg = env_config or EnvConfig(price_mwh=price_mwh)
    step_hours = cfg.step_hours
    infos = run_do_nothing(grid, chronics, cfg)
    dn = episode_costs(infos, grid, price_mwh, step_hours, blackout_beta)
    losses_only = dn.losses_cost
    unserved = float(chronics.load_p[1:].sum()) * step_hours
    c_worst = unserved * price_mwh * blackout_beta
    return ScenarioRefs(
        c_dn=dn.total,
        c_best=best_fraction * losses_only,
        c_worst=c_worst,
    )


def normalize_score(total_cost: float, refs: ScenarioRefs) -> float:
    """Map a total cost onto [-100, 100]; lower cost is better.

    The ratio is taken before the 100x scaling so the anchor points land
    exactly on 0 / 100 / -100.
    """
    c = total_cost
    if refs.c_dn <= refs.c_best:  # degenerate scenario
        if c < refs.c_dn:
            return 100.0
        if c == refs.c_dn:
            return 0.0
        score = -100.0 * ((c - refs.c_dn) / max(refs.c_worst - refs.c_dn, 1e-12))
        return float(np.clip(score, -100.0, 100.0))
    if c <= refs.c_dn:
        score = 100.0 * ((refs.c_dn - c) / (refs.c_dn - refs.c_best))
    else:
        score = -100.0 * ((c - refs.c_dn) / max(refs.c_worst - refs.c_dn, 1e-12))
    return float(np.clip(score, -100.0, 100.0))


def leaderboard(scores_by_agent: dict) -> list:
    """Mean score per agent, sorted best first; ties broken by agent name.

    ``scores_by_agent`` maps agent name -> list of per-scenario scores.
    Returns rows of (agent name, mean score, n scenarios).
    """
    rows = []
    for name, scores in scores_by_agent.items():
        if not scores:
            raise ValueError(f"agent {name!r} has no scenario scores")
        rows.append((name, float(np.mean(scores)), len(scores)))
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


def check_blackout_dominance(grid: Grid, chronics: Chronics,
                             env_config: EnvConfig | None = None,
                             price_mwh: float = DEFAULT_PRICE_MWH,
                             blackout_beta: float = DEFAULT_BLACKOUT_BETA) -> bool:
    """Startup sanity check: an immediate blackout must cost more than the
    do-nothing run, with the configured penalty factor."""
    refs = scenario_refs(grid, chronics, env_config, price_mwh, blackout_beta)
    return refs.c_worst > refs.c_dn
