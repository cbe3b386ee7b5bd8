"""
Reparameterized geodesic records
================================

Sample geodesic records on the modular cusp graph, then check the cocycle
law of the log-scale contraction and the intertwining with the flow.
"""

# %%
# Sample records
# --------------
# Half the start points sit deep in a parabolic run, so many records cross
# a horoball.  The default record graph takes about half a minute to build.

import numpy as np

from cuspflow.experiments import sample_graph_records
from cuspflow.flow import kappa, reparam_cocycle, reparam_map, translate_flow

records = sample_graph_records(20, seed=0)
crossing = sum(bool(r.crossings) for r in records)
print(f"{len(records)} records, {crossing} with a horoball crossing")

# %%
# Cocycle law
# -----------

sigma = next(r for r in records if r.crossings)
t, s = 2.0, 5.0
lhs = kappa(sigma, t + s)
rhs = kappa(sigma.shifted(t), s) * kappa(sigma, t)
print(f"kappa(t+s) = {lhs:.12g}, product = {rhs:.12g}")

# %%
# Intertwining
# ------------
# Shifting the record matches translating its flow point by the cocycle.

for shift in (1.0, 4.5):
    a = reparam_map(sigma.shifted(shift))
    b = translate_flow(reparam_cocycle(sigma, shift), reparam_map(sigma))
    print(shift, a.pair == b.pair, abs(a.s - b.s))

# %%
# The log-scale profile along the record

print(np.round(sigma.ell[:12], 3))
