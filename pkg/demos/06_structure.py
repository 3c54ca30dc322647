"""Gluing two-period plans, two-point conditionals and the uniqueness probe."""
import numpy as np

from motbounds import (DiscreteMeasure, markov_glue, singleton_coupling, solve_fixed_barycenter,
                       solve_mot2, strassen_glue, two_point_decompose, uniqueness_probe)

mx = DiscreteMeasure([0.5, 1.5], [0.5, 0.5])
my = DiscreteMeasure([0.0, 2.0], [0.5, 0.5])
mz = DiscreteMeasure([-1.0, 1.0, 3.0], [0.25, 0.5, 0.25])

pxy = singleton_coupling(mx, 0.0, 2.0)  # two-atom target: the plan is forced
pyz = solve_mot2(my, mz, lambda y, z: np.abs(z - y)).coupling
glued = markov_glue(pxy, pyz)
print("Markov glue is a martingale:", glued.is_martingale())
print("x-z projection:\n", glued.project((0, 2)).mass)

again = strassen_glue(glued.project((0, 1)), glued.project((0, 2)))
print("Strassen glue keeps both projections:",
      np.allclose(again.project((0, 1)).mass, pxy.mass),
      np.allclose(again.project((0, 2)).mass, glued.project((0, 2)).mass))

# fixed-barycenter problem: every x-conditional of z must average to ybar.
# z is built from a two-point map with t_minus falling and t_plus rising in x
sx = DiscreteMeasure([0.5, 1.0, 1.5], [0.3, 0.4, 0.3])
ybar = 0.0
tminus, tplus = np.array([-0.5, -1.0, -1.5]), np.array([1.0, 1.5, 2.0])
lam = (tplus - ybar) / (tplus - tminus)
sz = DiscreteMeasure.from_unnormalized(np.r_[tminus, tplus],
                                       np.r_[sx.weights * lam, sx.weights * (1 - lam)])
res = solve_fixed_barycenter(sx, sz, ybar, lambda x, z: -x * z**2)
for x, row in zip(sx.atoms, res.coupling.mass):
    idx = np.flatnonzero(row > 1e-9)
    line = f"x={x:.1f}: z in {sz.atoms[idx]}"
    if idx.size == 2:
        tp = two_point_decompose(ybar, *sz.atoms[idx])
        line += f"  weights {row[idx] / row.sum()} vs formula {[tp.lambda_minus, tp.lambda_plus]}"
    print(line)

print(uniqueness_probe(res.lp, trials=10, primary=res.solution))
