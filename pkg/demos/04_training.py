"""Short end-to-end training run of the baseline agent stack.

Uses a small step budget so the demo finishes in under a minute; the
acceptance suite runs the full 50k-step protocol.  Prints the before/after
comparison on held-out stressed scenarios.
"""

import numpy as np

from gridmdp.defaults import default_grid
from gridmdp.agents import (
    ExpertAgent,
    ExpertRulesConfig,
    PolicyAgent,
    PolicyHead,
    PpoConfig,
    train_ppo,
)
from gridmdp.env import EnvConfig
from gridmdp.harness import evaluation_pool, pool_env_factory, run_episode, training_pool
from gridmdp import scoring

grid = default_grid()
train_scenarios = training_pool(grid, n_scenarios=2, days=2)
factory = pool_env_factory(grid, train_scenarios,
                           EnvConfig(oracle_action_clipping=True))

ppo = PpoConfig(total_steps=4_000)
expert_train = ExpertRulesConfig(safe_max_rho=0.2, limit_cs_margin="oracle")

untrained, _ = train_ppo(factory, PpoConfig(total_steps=0), expert_train, seed=0)
print("training 4k steps (the real protocol uses 50k+) ...")
trained, log = train_ppo(factory, ppo, expert_train, seed=0)
print(f"episodes seen: {log.episodes}, wall clock {log.wall_clock_s:.1f}s")
if log.updates:
    print(f"last update: {log.updates[-1]}")

held_out = evaluation_pool(grid, n_scenarios=5, days=1)
refs = [scoring.scenario_refs(grid, ch) for ch in held_out]


def summarize(label, agent):
    scores, survived = [], []
    for ch, r in zip(held_out, refs):
        rep = run_episode(agent, grid, ch, refs=r)
        scores.append(rep.score)
        survived.append(rep.survived_steps / rep.total_steps)
    print(f"{label:<28} survival {np.mean(survived):6.1%}   "
          f"mean score {np.mean(scores):7.2f}")


summarize("expert rules only", ExpertAgent(grid, ExpertRulesConfig(0.99, 60.0)))
for tag, params in (("untrained", untrained), ("trained", trained)):
    head = PolicyHead(params, grid, limit_cs_margin=60.0)
    summarize(f"policy only ({tag})", PolicyAgent(head))
    summarize(f"expert + policy ({tag})",
              ExpertAgent(grid, ExpertRulesConfig(0.99, 60.0), head))
