"""
Critical exponents and Patterson measures
=========================================

Estimate critical exponents from orbit counts, build a finite Patterson
measure for SL(2, Z), and check the entropy drop of the cusp subgroup.
"""

# %%
# Orbit tables
# ------------

import numpy as np

from cuspflow.lie import LinearForm
from cuspflow.measures import (
    OrbitTable,
    critical_exponent,
    entropy_drop_check,
    patterson_measure,
    poincare_partial,
)
from cuspflow.groups import get_preset

alpha = LinearForm((1.0,))
modular = OrbitTable.sl2z_by_norm(12.0)
cusp = OrbitTable.peripheral_powers(get_preset("psl2z"), t_max=20.0)

# %%
# Exponents
# ---------
# The lattice grows at rate 1 and the parabolic subgroup at rate 1/2.

for name, table in (("modular", modular), ("parabolic", cusp)):
    est = critical_exponent(table, alpha)
    print(f"{name}: delta={est.delta:.4f} +- {est.stderr:.1e}")
print("entropy drop:", entropy_drop_check(cusp, alpha).passed)

# %%
# Poincare partial sums diverge slowly just above the exponent

for T in (6.0, 9.0, 12.0):
    print(T, poincare_partial(modular, alpha, 1.02, T))

# %%
# Patterson measure
# -----------------

nu = patterson_measure(modular, alpha, 1.02, 12.0)
angles = np.arctan2(nu.vectors[:, 0, 1], nu.vectors[:, 0, 0]) % np.pi
hist, _ = np.histogram(angles, bins=8, weights=nu.weights)
print(len(nu), "atoms; mass per eighth of the circle:", np.round(hist, 3))
