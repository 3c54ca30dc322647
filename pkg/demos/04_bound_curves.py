"""P(eps) curves with their tangent lines; writes a CSV ready for plotting."""
import numpy as np

from motbounds import DiscreteMeasure, bound_curve, third_moment_cross, tree_price
from motbounds.perturb import write_curve_csv


def spread(m, grid, rng):
    # mean-preserving spread of m onto grid
    w = np.zeros(grid.size)
    for a, p in zip(m.atoms, m.weights):
        lo, hi = rng.choice(grid[grid < a]), rng.choice(grid[grid > a])
        w[grid == lo] += p * (hi - a) / (hi - lo)
        w[grid == hi] += p * (a - lo) / (hi - lo)
    return DiscreteMeasure.from_unnormalized(grid, w)


# skewed marginals, so the cross term actually moves the prices
rng = np.random.default_rng(8)
mx = DiscreteMeasure([0.6, 1.0, 1.6], [0.3, 0.5, 0.2])
my = spread(mx, np.array([0.0, 0.4, 0.9, 1.3, 2.0, 2.8]), rng)
mz = spread(my, np.array([-0.5, 0.2, 0.7, 1.1, 1.6, 2.4, 3.5]), rng)

spec = third_moment_cross()
grid = np.linspace(0, 1, 6)
lo = bound_curve(mx, my, mz, spec, grid, "minimize")
hi = bound_curve(mx, my, mz, spec, grid, "maximize")
models = {p: [tree_price(mx, my, mz, p, spec, e) for e in grid] for p in (1, 3)}

print(" eps     P_l      Q_l    tree1    tree3      Q_u      P_u")
for k, e in enumerate(grid):
    print(f"{e:4.1f} {lo.values[k]:8.4f} {lo.q_values[k]:8.4f} {models[1][k]:8.4f} "
          f"{models[3][k]:8.4f} {hi.q_values[k]:8.4f} {hi.values[k]:8.4f}")

print("tangent gaps (lower):", np.round(lo.tangent_gaps, 6))
print("tangent gaps (upper):", np.round(hi.tangent_gaps, 6))
write_curve_csv("bound_curve.csv", lo, hi, models)
print("wrote bound_curve.csv")
