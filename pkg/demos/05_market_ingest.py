"""From call quotes to marginals: Breeden-Litzenberger masses, clipping and chain repair."""
import warnings

import numpy as np

from motbounds import DiscreteMeasure, OptionChain, bl_density, call_prices, convex_order_leq
from motbounds.market import bl_density_report, repair_chain

strikes = np.arange(80.0, 121.0, 5.0)
true = [DiscreteMeasure([95.0, 100.0, 105.0], [0.25, 0.5, 0.25]),
        DiscreteMeasure([85.0, 95.0, 100.0, 105.0, 115.0], [0.1, 0.2, 0.4, 0.2, 0.1]),
        DiscreteMeasure([80.0, 90.0, 100.0, 110.0, 120.0], [0.15, 0.2, 0.3, 0.2, 0.15])]

chains = [OptionChain(strikes, call_prices(m, strikes), f"T{t + 1}") for t, m in enumerate(true)]
recovered = [bl_density(c) for c in chains]
for m, r in zip(true, recovered):
    print(f"{r!r}  TV error {r.total_variation(m):.1e}")

# a stale quote at K=110 breaks convexity of the call curve
bad = chains[1].calls.copy()
bad[6] += 0.3
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    m, diag = bl_density_report(OptionChain(strikes, bad, "T2-stale"))
print("\nclipped strikes:", diag.clipped, "mass", round(diag.clipped_mass, 4))
for w in caught:
    print("warning:", w.message)

chain = [recovered[0], m, recovered[2]]
print("convex order before repair:",
      [convex_order_leq(a, b) for a, b in zip(chain, chain[1:])], "means", [c.mean() for c in chain])
fixed = repair_chain(chain, 100.0, budget=0.2)
print("convex order after repair: ",
      [convex_order_leq(a, b) for a, b in zip(fixed, fixed[1:])], "means", [c.mean() for c in fixed])
