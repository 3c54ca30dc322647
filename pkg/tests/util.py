"""Instance generators and independent oracles shared by the tests."""
import itertools

import numpy as np
from scipy.optimize import linprog

from motbounds.measure import DiscreteMeasure


def spread(rng, m, grid):
    """Mean-preserving spread of ``m`` onto ``grid``: each atom splits to a random bracket."""
    w = np.zeros(grid.size)
    for a, p in zip(m.atoms, m.weights):
        lo = grid[grid < a]
        hi = grid[grid > a]
        l, h = rng.choice(lo), rng.choice(hi)
        w[np.searchsorted(grid, l)] += p * (h - a) / (h - l)
        w[np.searchsorted(grid, h)] += p * (a - l) / (h - l)
    return DiscreteMeasure.from_unnormalized(grid, w)


def random_chain(rng, nx, ny=None, nz=None):
    """Random ``mx <= my <= mz`` in convex order with the requested grid sizes."""
    ny = nx if ny is None else ny
    nz = ny if nz is None else nz
    x = np.sort(rng.uniform(-1, 1, nx))
    mx = DiscreteMeasure(x, rng.dirichlet(np.ones(nx)))
    gy = np.sort(np.concatenate([[-2.0, 2.0], rng.uniform(-2, 2, ny - 2)]))
    my = spread(rng, mx, gy)
    gz = np.sort(np.concatenate([[-3.0, 3.0], rng.uniform(-3, 3, nz - 2)]))
    mz = spread(rng, my, gz)
    return mx, my, mz


def random_pair(rng, nx, ny):
    mx, my, _ = random_chain(rng, nx, ny, 2)
    return mx, my


def highs_value(lp):
    """Optimal value from scipy's HiGHS, as an oracle independent of our simplex."""
    sign = 1.0 if lp.sense == "minimize" else -1.0
    res = linprog(sign * lp.objective, A_eq=lp.constraint_matrix, b_eq=lp.rhs,
                  bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return sign * res.fun


def basic_feasible_solutions(A, b, tol=1e-9):
    """Enumerate vertices of ``{x >= 0 : A x = b}`` by brute force over column subsets."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    # drop dependent rows first
    rank = np.linalg.matrix_rank(A)
    rows = []
    for i in range(A.shape[0]):
        if np.linalg.matrix_rank(A[rows + [i]]) > len(rows):
            rows.append(i)
        if len(rows) == rank:
            break
    A, b = A[rows], b[rows]
    n = A.shape[1]
    found = []
    for cols in itertools.combinations(range(n), rank):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.any(xb < -tol):
            continue
        x = np.zeros(n)
        x[list(cols)] = np.maximum(xb, 0.0)
        if not any(np.allclose(x, f, atol=1e-10) for f in found):
            found.append(x)
    return found


def vertex_optimum(lp):
    """Brute-force optimal value and optimal vertices of a small LP."""
    verts = basic_feasible_solutions(lp.constraint_matrix, lp.rhs)
    vals = np.array([lp.objective @ v for v in verts])
    best = vals.min() if lp.sense == "minimize" else vals.max()
    opt = [v for v, f in zip(verts, vals) if abs(f - best) <= 1e-9 * (1 + abs(best))]
    return best, opt


def two_point_instance(rng, n, ybar=0.0, width=1.0):
    """Fixed-barycenter data generated by a decreasing/increasing two-point map.

    x-atoms are increasing; ``T_minus`` decreases and ``T_plus`` increases in
    x, all z-atoms are distinct, and every conditional has mean ``ybar``.
    """
    xs = np.sort(rng.uniform(-1, 1, n))
    wx = rng.dirichlet(np.ones(n))
    gaps = np.sort(rng.uniform(0.1, 1.0, (2, n)), axis=1)
    tminus = ybar - width * gaps[0]  # decreasing in x
    tplus = ybar + width * gaps[1]  # increasing in x
    lam = (ybar - tplus) / (tminus - tplus)
    z = np.concatenate([tminus, tplus])
    wz = np.concatenate([wx * lam, wx * (1 - lam)])
    sx = DiscreteMeasure(xs, wx)
    sz = DiscreteMeasure.from_unnormalized(z, wz)
    return sx, sz, dict(zip(xs, zip(tminus, tplus, lam)))
