"""How the optimal order pair moves as shelf capacity grows.

Run: python3 demos/capacity_sweep.py [both_high|both_low|mixed]
"""

import sys

from subinv.scenarios import load_config, run_sweep

name = sys.argv[1] if len(sys.argv) > 1 else "mixed"
cfg = load_config(name)
rows = run_sweep(cfg)

# %% One line per capacity: optimal (Q1, Q2) and profit, per regime and substitution.
columns = [(r.tag, pair) for r in cfg.regimes for pair in cfg.substitutions]
print(f"scenario {name}")
print("   C  " + "  ".join(f"{tag:>7} p={pair[0]:<3g}        " for tag, pair in columns))
for C in cfg.capacities():
    cells = []
    for tag, pair in columns:
        r = next(x for x in rows if x.C == C and x.regime == tag and x.substitution == pair)
        cells.append(f"({r.Q1:2d},{r.Q2:2d}) {r.profit:8.2f}")
    print(f"{C:4g}  " + "  ".join(cells))

# %% In the mixed case the low-ratio product is dropped once capacity is ample.
