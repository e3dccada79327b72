"""Cycling populations still average to the interior rest point.

A rock-paper-scissors game with a small growth bonus keeps the population
circling the centre of the simplex.  Its time average over a long clock window
sits near (1/3, 1/3, 1/3) even though the state itself never settles.
"""
import numpy as np

from genurn import Stop, integrate, simulate, time_average_flow, time_average_process
from genurn.config import resolve_text
from genurn.verify import preset_text

cfg = resolve_text(preset_text("rps-time-average"))
law = cfg.build_law()
field = cfg.field(law)

path = integrate(field, [0.4, 0.3, 0.3], 500.0, 1e-2)
print("flow average over T=500:", np.round(time_average_flow(path), 4))

# shorter window than the acceptance run to keep the demo quick
T = 150.0
for seed in range(3):
    traj = simulate(law, [40, 30, 30], Stop(max_clock=T, max_steps=2_000_000), seed=seed)
    ta = time_average_process(traj, T)
    print(f"seed {seed}: {traj.n_steps} updates, final size {traj.sizes[-1]}, "
          f"average {np.round(ta.point, 3)}, min share at end {traj.x[-1].min():.3f}")
