"""Bigger founding populations survive more often.

A one-type walk gains a member with probability 0.6 and loses one with 0.4.
Starting from M members it escapes extinction with probability 1 - (2/3)^M.
"""
from genurn import Stop, birth_death_law, mass_monotonicity_study

study = mass_monotonicity_study(birth_death_law(0.6, 0.4), [1], [1, 2, 5, 10, 20],
                                replicates=1000, seed=7, stop=Stop(max_steps=2000),
                                growth_threshold=0.1, record_stride=2000)
for M, f, se in zip(study.masses, study.fractions, study.ses):
    print(f"M = {M:3d}: observed {f:.3f} +/- {se:.3f}, gambler's ruin {1 - (2 / 3) ** M:.3f}")
print("nondecreasing within noise:", study.nondecreasing)
