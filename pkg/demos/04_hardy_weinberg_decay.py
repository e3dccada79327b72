"""Random mating pulls genotype shares onto the Hardy-Weinberg surface.

The population starts with heterozygotes only, far from Hardy-Weinberg
proportions.  The defect shrinks both in the deterministic flow and in the
stochastic process.
"""
import numpy as np

from genurn import (
    FertilitySpec,
    Stop,
    additive_fertility_field,
    fertility_law,
    hardy_weinberg_defect,
    hw_decay_check,
    integrate,
    simulate,
)

# constant gamma makes the mean fertility equal to that constant everywhere
gamma = np.full((2, 2), 1.25)
field = additive_fertility_field(gamma)
path = integrate(field, [0.0, 0.5, 0.5, 0.0], 4.0, 1e-3, record_every=250)
for t, x in zip(path.t, path.x):
    print(f"t = {t:4.2f}  defect {np.linalg.norm(hardy_weinberg_defect(x)):.3e}")
norms = [np.linalg.norm(hardy_weinberg_defect(x)) for x in path.x]
print(f"log-defect slope {np.polyfit(path.t, np.log(norms), 1)[0]:.4f} (predicted {-2 * 1.25})")

law = fertility_law(FertilitySpec.additive(gamma))
z0 = law.state_from_counts({(0, 1): 50})
traj = simulate(law, z0, Stop(max_steps=10_000), seed=8, record_stride=10)
hw = hw_decay_check(traj)
print(f"process: initial defect {hw.initial:.3f}, head median {hw.head_median:.3f}, "
      f"tail median {hw.tail_median:.4f}, population {traj.sizes[-1] // 2}")
