"""Walk through the DC power-flow solver on the bundled 14-substation grid.

Solves a snapshot, prints per-line loadings, then splits a substation across
its two busbars and shows how the flows rearrange.
"""

import numpy as np

from gridmdp import default_grid, default_scenario
from gridmdp.grid import TopologyState, effective_buses
from gridmdp.powerflow import InjectionVector, solve_dc

grid = default_grid()
chronics = default_scenario(days=1, seed=42)

# noon of the first day
t = 144
inj = InjectionVector(
    gen_p=chronics.dispatch_p[t],
    load_p=chronics.load_p[t],
    storage_p=np.zeros(len(grid.storages)),
)

topo = TopologyState.initial(grid)
flow = solve_dc(grid, topo, inj)

print(f"snapshot at step {t} (noon), total load "
      f"{chronics.load_p[t].sum():.1f} MW, losses {flow.losses_mw:.2f} MW")
print(f"KCL residual: {flow.kcl_residual:.2e} MW")
print(f"{'line':<5} {'flow MW':>9} {'limit':>7} {'rho':>6}")
for i, line in enumerate(grid.lines):
    print(f"{line.id:<5} {flow.p_flow[i]:>9.2f} {line.thermal_limit:>7.1f} "
          f"{flow.rho[i]:>6.3f}")

# node splitting: move the wind unit and one line end onto busbar 2 of S06
split = TopologyState.initial(grid)
split.busbar["gen:GEN_WND1"] = 2
split.busbar["line_to:L10"] = 2
bg = effective_buses(grid, split)
print(f"\nafter splitting S06: {bg.n_buses} electrical buses "
      f"(was {len(grid.substations)})")
flow2 = solve_dc(grid, split, inj)
moved = np.argsort(np.abs(flow2.p_flow - flow.p_flow))[::-1][:5]
print("largest flow changes:")
for i in moved:
    print(f"  {grid.lines[i].id}: {flow.p_flow[i]:+.2f} -> {flow2.p_flow[i]:+.2f} MW")
