"""
Cusp graph of the modular group
===============================

Build the truncated cusp graph for PSL(2, Z), measure its four-point
hyperbolicity and compare graph distance against the Cartan projection.
"""

# %%
# Build the graph
# ---------------
# Cayley vertices up to word length 10, horoballs down to depth 6.

from cuspflow.coarse import estimate_delta
from cuspflow.cusp import CuspGraph, CuspVertex, gm_geodesic
from cuspflow.experiments import distance_fit
from cuspflow.groups import get_preset

G = CuspGraph(get_preset("psl2z"), 10, 6)
print(f"{G.n_vertices} vertices, {G.n_cayley} of them Cayley")

# %%
# A geodesic through a horoball
# -----------------------------
# A long run of the parabolic letter is cheaper to cross through its horoball.

e = G.vertex_id(CuspVertex.cayley(()))
far = G.vertex_id(CuspVertex.cayley((2,) * 8))
path = gm_geodesic(G, e, far)
print("length", len(path.vertices) - 1, "versus word length 8")

# %%
# Hyperbolicity
# -------------

est = estimate_delta(G, 5000, seed=0)
print(f"delta estimate {est.delta}, mean defect {est.mean_defect:.3f}")

# %%
# Graph distance against the Cartan projection
# --------------------------------------------
# The fit gives a 2 psi(mu) - C <= d <= 2 psi(mu) + C style envelope.

fit = distance_fit("psl2z", 10, 6)
print(f"c={fit.c:.3f} c'={fit.c_prime:.3f} C={fit.C:.3f}")
