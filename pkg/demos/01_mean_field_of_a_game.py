"""From random payoffs to a replicator equation.

A two-strategy coordination game is written as random offspring counts.  The
urn's mean-limit field is enumerated from the mechanism and compared with the
replicator equation for the mean payoff matrix.  Equilibria are then located
and classified, with the expected growth rate at each one.
"""
import numpy as np

from genurn import (
    ReplicatorSpec,
    find_equilibria,
    growth_rate,
    mean_vector_field,
    nondegeneracy,
    replicator_field,
    replicator_law,
)

same = "table -1:0.1,0:0.2,1:0.4,2:0.3"   # meeting your own kind pays
other = "table -1:0.4,0:0.5,1:0.1"        # meeting the other kind costs
spec = ReplicatorSpec.build([[same, other], [other, same]])
law = replicator_law(spec)

A = spec.mean_matrix()
print("mean payoff matrix\n", A)
print("jump bound m =", law.m)

# the field built from the sampler's increments against the closed form
mech = mean_vector_field(law)
closed = replicator_field(A)
xs = np.random.default_rng(0).dirichlet(np.ones(2), size=200)
err = max(np.abs(mech(x) - closed(x)).max() for x in xs)
print(f"largest disagreement over 200 points: {err:.1e}")

for q in find_equilibria(mech):
    lam = growth_rate(law, q.x)
    print(f"x = {np.round(q.x, 4)}  {q.stability:18s} eig = {q.eigenvalues.real.round(4)}"
          f"  growth rate {lam:.3f}")

nd = nondegeneracy(law, [0.5, 0.5])
print(f"increments at the mixed point span rank {nd.rank} of {nd.dim}")
