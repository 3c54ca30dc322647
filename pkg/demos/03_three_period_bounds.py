"""Exact and first-order price bounds for a three-period claim, plus tree-model prices."""
import numpy as np

from motbounds import DiscreteMeasure, first_order_bounds, straddle_basket


def spread(m, grid, rng):
    # mean-preserving spread of m onto grid
    w = np.zeros(grid.size)
    for a, p in zip(m.atoms, m.weights):
        lo, hi = rng.choice(grid[grid < a]), rng.choice(grid[grid > a])
        w[grid == lo] += p * (hi - a) / (hi - lo)
        w[grid == hi] += p * (a - lo) / (hi - lo)
    return DiscreteMeasure.from_unnormalized(grid, w)


rng = np.random.default_rng(3)
mx = DiscreteMeasure(np.linspace(95, 105, 6), rng.dirichlet(np.ones(6)))
my = spread(mx, np.linspace(85, 115, 8), rng)
mz = spread(my, np.linspace(75, 125, 10), rng)

spec = straddle_basket()
for eps in (0.0, 0.5, 1.0):
    r = first_order_bounds(mx, my, mz, spec, eps, exact=True, tree_p=(1, 2, 3))
    print(r.table())
    print()
