"""Discrete marginals, potential functions and the convex order."""
import numpy as np

from motbounds import DiscreteMeasure, convex_order_leq, potential

mx = DiscreteMeasure([-1.0, 1.0], [0.5, 0.5])
my = DiscreteMeasure([-3.0, 0.0, 3.0], [0.1, 0.8, 0.1])
mz = DiscreteMeasure([-3.0, -1.0, 1.0, 3.0], [0.25, 0.25, 0.25, 0.25])

print("means:", mx.mean(), my.mean(), mz.mean())
print("variances:", mx.variance(), my.variance(), mz.variance())

t = np.linspace(-4, 4, 9)
print("\n   t    U_x    U_y    U_z")
for ti, a, b, c in zip(t, potential(mx, t), potential(my, t), potential(mz, t)):
    print(f"{ti:4.0f} {a:6.2f} {b:6.2f} {c:6.2f}")

# same mean and more variance is not enough: the potentials cross
print("\nx <= y:", convex_order_leq(mx, my))
print("x <= z:", convex_order_leq(mx, mz))
print("y <= z:", convex_order_leq(my, mz))
