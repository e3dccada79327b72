"""Where do growing coordination populations end up?

Every growing replicate should settle at one of the two pure states and never
at the unstable mixture.  Its long-run growth rate should match the expected
offspring count at that vertex.
"""
import numpy as np

from genurn import EnsembleConfig, Stop, mean_vector_field, run_ensemble
from genurn.config import resolve_text
from genurn.verify import preset_text

cfg = resolve_text(preset_text("coordination-growth-rate"))
law = cfg.build_law()
# equilibria carry their growth rate; the growth threshold defaults to half the smallest
eqs = cfg.equilibria(law, mean_vector_field(law))

ens = EnsembleConfig(law, [10, 10], replicates=30, stop=Stop(max_steps=30_000), seed=1,
                     equilibria=eqs, record_stride=50)
rep = run_ensemble(ens)
print(f"growth fraction {rep.growth_fraction:.2f} over {rep.n} replicates")
for key, count in rep.histogram.items():
    where = "unclassified" if key == "unclassified" else np.round(eqs[int(key)].x, 3)
    print(f"  limit {where}: {count}")

for i, q in enumerate(eqs):
    rates = [s.rate for s in rep.growth if s.limit_id == i]
    if rates:
        print(f"vertex {np.round(q.x, 3)}: predicted rate {q.growth:.3f}, "
              f"observed median {np.median(rates):.3f} over {len(rates)} runs")
