"""Operate one episode by hand: watch loadings, test actions with simulate,
and see the three-cost score assemble.

The scenario is a stressed winter day with a wind-corridor line in
maintenance; doing nothing eventually trips lines and blacks out, while a
little curtailment keeps the grid alive.
"""

import numpy as np

from gridmdp import default_grid
from gridmdp.actions import DoNothing, curtail
from gridmdp.env import Environment
from gridmdp.harness import evaluation_pool, run_episode
from gridmdp.agents import DoNothingAgent
from gridmdp import scoring

grid = default_grid()
scenario = evaluation_pool(grid, n_scenarios=1, days=1)[0]

env = Environment(grid, scenario)
obs = env.reset()
print(f"reset: max rho {obs.max_rho:.3f}, horizon {env.horizon} steps")

done = False
steps = 0
while not done:
    obs = env.current_observation()
    if obs.max_rho >= 0.95:
        # what would doing nothing do next step?
        idle = env.simulate(DoNothing())
        trimmed = env.simulate(curtail({"GEN_WND1": 0.45}))
        print(f"step {env.t}: rho {obs.max_rho:.3f} -> simulate idle: "
              f"rho {idle.observation.max_rho:.3f} done={idle.done}; "
              f"simulate curtail: rho {trimmed.observation.max_rho:.3f}")
        action = (curtail({"GEN_WND1": 0.45})
                  if trimmed.observation.max_rho < idle.observation.max_rho
                  else DoNothing())
    else:
        action = DoNothing()
    result = env.step(action)
    done = result.done
    steps += 1

print(f"\nsurvived {steps}/{env.horizon} steps, terminal reward {result.reward:.3f}")
if result.info["game_over"]:
    print("game over:", result.info["game_over_reason"])

# the same scenario, scored end to end for the do-nothing baseline
report = run_episode(DoNothingAgent(), grid, scenario, scenario_id="demo")
print(f"\ndo-nothing on the same scenario: survived "
      f"{report.survived_steps}/{report.total_steps}, score {report.score:.2f}")
print(f"costs: losses {report.costs['losses_cost']:.0f}, operations "
      f"{report.costs['operation_cost']:.0f}, blackout {report.costs['blackout_cost']:.0f}")
refs = scoring.ScenarioRefs(**report.refs)
print(f"anchors: best {refs.c_best:.0f} <= do-nothing {refs.c_dn:.0f} "
      f"<= worst {refs.c_worst:.0f}")
