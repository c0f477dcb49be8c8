"""Generate a month of injections and inspect the energy mix.

Shows the load/weather processes, the merit-order dispatch, generation-time
curtailment of renewable oversupply, and the per-type energy shares.
"""

import numpy as np

from gridmdp import default_grid
from gridmdp.chronics import energy_mix, generate_chronics
from gridmdp.defaults import default_chronics_config

grid = default_grid()
config = default_chronics_config(days=28)
chronics = generate_chronics(grid, config, seed=42)

print(f"{chronics.n_steps} steps ({config.days} days at 5-minute resolution)")
total_load = chronics.load_p.sum(axis=1)
print(f"demand: min {total_load.min():.1f}, mean {total_load.mean():.1f}, "
      f"max {total_load.max():.1f} MW")

balance = np.abs(chronics.dispatch_p.sum(axis=1) - total_load)
print(f"worst per-step balance residual: {balance.max():.2e} MW")

ren_cols = [chronics.gen_ids.index(g) for g in chronics.renewable_ids]
curtailed = chronics.renewable_potential - chronics.dispatch_p[:, ren_cols]
frac = (curtailed.sum(axis=1) > 1e-9).mean()
print(f"steps with generation-time curtailment: {100 * frac:.1f}% "
      f"(total {curtailed.sum() / 12:.0f} MWh)")

mix = energy_mix(chronics)
print("\nenergy mix:")
for gen_type in sorted(mix, key=mix.get, reverse=True):
    bar = "#" * int(round(60 * mix[gen_type]))
    print(f"  {gen_type:<8} {100 * mix[gen_type]:6.2f}%  {bar}")
print(f"\nfossil (thermal) share: {100 * mix['thermal']:.3f}%")

# a typical day of solar potential, hour by hour
sol = chronics.renewable_ids.index("GEN_SOL1")
day = chronics.renewable_potential[:288, sol]
print("\nsolar potential, day 1 (one row per hour):")
for h in range(0, 24, 2):
    avg = day[h * 12:(h + 2) * 12].mean()
    print(f"  {h:02d}:00  {avg:6.1f} MW  {'*' * int(avg / 3)}")
