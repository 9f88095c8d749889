"""End-of-cycle stock for two substitutable products with a fixed cycle.

Run: python3 demos/transient_walkthrough.py
"""

import numpy as np

from subinv.core import DemandModel
from subinv.transient import transient_distribution, uniformization_oracle

np.set_printoptions(precision=4, suppress=True, linewidth=120)

# %% Twenty customers per period for each product; 40% accept the other one.
d = DemandModel(lambda1=20, lambda2=20, p12=0.4, p21=0.4)
dist = transient_distribution(Q1=25, Q2=25, t=1.0, d=d)

# %% Rows are units of product 1 left, columns units of product 2 left.
print("P(both shelves empty) =", round(dist[0, 0], 4))
print("marginal leftover of product 1:\n", dist.marginal(1))
print("expected leftovers:", tuple(round(x, 3) for x in dist.expected_leftover()))

# %% The same table by brute-force matrix powers.
ref = uniformization_oracle(25, 25, 1.0, d)
print("max difference vs matrix powers:", np.abs(dist.mass - ref.mass).max())

# %% Without substitution the two products decouple.
solo = transient_distribution(25, 25, 1.0, d.with_substitution(0, 0))
print("P(empty) without substitution =", round(solo[0, 0], 4))
