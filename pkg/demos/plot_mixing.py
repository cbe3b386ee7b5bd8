"""
Correlation decay under the flow
================================

Draw a weighted sample from the product measure on flow space and watch
the correlation of two bump functions shrink as the lag grows.
"""

# %%
# Sample
# ------

from cuspflow.experiments import BUMP_PAIRS, mixing_sample, transported_bumps
from cuspflow.measures import correlation

sample = mixing_sample(20_000, seed=7)
print(len(sample), "weighted flow points")

# %%
# Correlations at short and long lag
# ----------------------------------

pair = BUMP_PAIRS[0]
f, g = transported_bumps(**pair)
for t in (2.0, 5.0, 10.0, 20.0):
    c = correlation(sample, f, g, t)
    print(f"t={t:5.1f}  correlation={c.value:+.5f}  stderr={c.stderr:.5f}")
