"""Gluing constructions and structural checks for martingale couplings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import lp_core
from .config import Tolerances, ordered_map, resolve
from .couplings import Coupling2, Coupling3, evaluate
from .errors import (ConditionalConvexOrderViolation, DegenerateBracket, InternalSolverError,
                     SupportViolation)
from .lp_core import LinearProgram
from .measure import DiscreteMeasure, convex_order_leq
from .mot import check_shared_marginal, mot2_lp


# --- gluing ---------------------------------------------------------------

def markov_glue(pxy: Coupling2, pyz: Coupling2, tol: Tolerances | None = None) -> Coupling3:
    """Product glueing: x and z conditionally independent given y."""
    tol = resolve(tol)
    check_shared_marginal(pxy, pyz, 1, 0, tol.general, "markov_glue")
    mu_y = pxy.marginal_weights(1)
    safe = np.where(mu_y > 0, mu_y, 1.0)
    # pi(i, j, k) = pxy(i, j) * pyz(j, k) / mu_y(j)
    mass = pxy.mass[:, :, None] * (pyz.mass / safe[:, None])[None, :, :]
    mass[:, mu_y <= 0, :] = 0.0
    return Coupling3(pxy.x_atoms, pxy.y_atoms, pyz.y_atoms, mass)


def strassen_glue(pxy: Coupling2, pxz: Coupling2, tol: Tolerances | None = None) -> Coupling3:
    """Glue two couplings sharing the first marginal.

    For each x-atom the y- and z-conditionals must be in convex order; a
    martingale coupling between them is found with a zero-objective LP.
    """
    tol = resolve(tol)
    check_shared_marginal(pxy, pxz, 0, 0, tol.general, "strassen_glue")
    x, y = pxy.grids
    z = pxz.y_atoms
    mu_x = pxy.marginal_weights(0)

    def sub(i):
        w = mu_x[i]
        if w <= 0:
            return None
        jy = np.flatnonzero(pxy.mass[i] > 0)
        kz = np.flatnonzero(pxz.mass[i] > 0)
        ky = DiscreteMeasure.from_unnormalized(y[jy], pxy.mass[i, jy])
        kzm = DiscreteMeasure.from_unnormalized(z[kz], pxz.mass[i, kz])
        if not convex_order_leq(ky, kzm, tol.general):
            raise ConditionalConvexOrderViolation(float(x[i]))
        lp = mot2_lp(ky, kzm, np.zeros((len(ky), len(kzm))))
        sol = lp_core.solve(lp, tol)
        if not sol.optimal:
            raise ConditionalConvexOrderViolation(
                float(x[i]), f"no martingale coupling of the conditionals at x={x[i]!r}")
        return jy, kz, w * sol.primal.reshape(len(ky), len(kzm))

    mass = np.zeros((x.size, y.size, z.size))
    for i, block in enumerate(ordered_map(sub, range(x.size))):
        if block is not None:
            jy, kz, m = block
            mass[np.ix_([i], jy, kz)] = m[None]
    return Coupling3(x, y, z, mass)


# --- monotonicity ---------------------------------------------------------

def coupling_support(c: Coupling2, floor: float | None = None):
    """``(x, z)`` pairs carrying mass above ``floor`` (default: the support floor)."""
    floor = resolve(None).support_floor if floor is None else floor
    return [(float(a), float(b)) for a, b, _ in c.support(floor)]


def left_monotone_check(support, tol: float | None = None):
    """Check the no-crossing condition on a finite set of ``(x, z)`` pairs.

    Returns ``(True, None)`` or ``(False, witness)`` with the witness
    ``((x, z_minus), (x, z_plus), (x_prime, z_prime))``.  A pair crossing
    requires ``x < x_prime`` and ``z_minus + tol < z_prime < z_plus - tol``.
    For a fixed ``x`` the union of open intervals spanned by its pairs is
    the interval between its extreme z values, so checking against those
    extremes is equivalent to scanning every triple.
    """
    tol = resolve(None).general if tol is None else tol
    pts = sorted(set((float(a), float(b)) for a, b in support))
    by_x = {}
    for a, b in pts:
        by_x.setdefault(a, []).append(b)
    xs = sorted(by_x)
    for n, a in enumerate(xs):
        zs = by_x[a]
        lo, hi = min(zs), max(zs)
        if hi - lo <= 2 * tol:
            continue
        for a2 in xs[n + 1:]:
            for b2 in by_x[a2]:
                if lo + tol < b2 < hi - tol:
                    return False, ((a, lo), (a, hi), (a2, b2))
    return True, None


def witness_json(witness) -> str:
    if witness is None:
        return json.dumps(None)
    labels = ("x_z_minus", "x_z_plus", "x_prime_z_prime")
    return json.dumps({k: list(v) for k, v in zip(labels, witness)})


def cw_monotone_check(points, beta, cost, limit: int = 8, tol: float | None = None,
                      samples: int = 20, seed: int = 0):
    """Test ``beta`` (weights on ``points``) against all competitors on the spanned grid.

    A competitor shares both marginals with ``beta`` and the first z-moment
    of every x-slice.  Returns ``(True, None)`` or ``(False, alpha)`` where
    ``alpha`` is an improving competitor as a :class:`Coupling2`.  Point sets
    larger than ``limit`` are checked on random subsets of size ``limit``.
    """
    tol = resolve(None).general if tol is None else tol
    points = [(float(a), float(b)) for a, b in points]
    beta = np.asarray(beta, dtype=float)
    if len(points) > limit:
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            idx = np.sort(rng.choice(len(points), size=limit, replace=False))
            ok, alpha = cw_monotone_check([points[i] for i in idx], beta[idx], cost, limit, tol)
            if not ok:
                return ok, alpha
        return True, None
    xs = np.unique([p[0] for p in points])
    zs = np.unique([p[1] for p in points])
    B = np.zeros((xs.size, zs.size))
    for (a, b), w in zip(points, beta):
        B[np.searchsorted(xs, a), np.searchsorted(zs, b)] += w
    C = evaluate(cost, *np.meshgrid(xs, zs, indexing="ij"))
    nx, nz = B.shape
    A = np.vstack([np.kron(np.eye(nx), np.ones(nz)),
                   np.kron(np.ones(nx), np.eye(nz)),
                   np.kron(np.eye(nx), zs)])
    b = np.concatenate([B.sum(axis=1), B.sum(axis=0), B @ zs])
    sol = lp_core.solve(LinearProgram(C.ravel(), A, b), None)
    if not sol.optimal:
        raise InternalSolverError("competitor LP must contain beta itself")
    base = float((C * B).sum())
    scale = max(1.0, abs(base))
    if sol.value < base - tol * scale:
        return False, Coupling2(xs, zs, sol.primal.reshape(nx, nz))
    return True, None


# --- two-point structure --------------------------------------------------

@dataclass(frozen=True)
class TwoPoint:
    t_minus: float
    t_plus: float
    lambda_minus: float

    @property
    def lambda_plus(self) -> float:
        return 1.0 - self.lambda_minus

    def barycenter(self) -> float:
        return self.lambda_minus * self.t_minus + self.lambda_plus * self.t_plus


def two_point_decompose(ybar: float, tminus: float, tplus: float) -> TwoPoint:
    """Weights of the two-point law on ``{tminus, tplus}`` with mean ``ybar``."""
    if not tminus < ybar < tplus:
        raise DegenerateBracket(f"need tminus < ybar < tplus, got {tminus}, {ybar}, {tplus}")
    lam = (ybar - tplus) / (tminus - tplus)
    return TwoPoint(float(tminus), float(tplus), float(lam))


@dataclass
class TwoPointMap:
    ybar: float
    entries: dict = field(default_factory=dict)  # x -> TwoPoint from the bracket formula
    observed: dict = field(default_factory=dict)  # x -> weight actually on T_minus
    irregular: dict = field(default_factory=dict)  # x -> list of (z, weight) when not two-point


def two_point_map(c: Coupling2, ybar: float, floor: float = 1e-9) -> TwoPointMap:
    """Read the ``x -> (T_minus, T_plus, lambda_minus)`` structure off a coupling."""
    out = TwoPointMap(float(ybar))
    for i, x in enumerate(c.x_atoms):
        row = c.mass[i]
        total = row.sum()
        if total <= 0:
            continue
        cond = row / total
        on = np.flatnonzero(cond > floor)
        if on.size == 2 and c.y_atoms[on[0]] < ybar < c.y_atoms[on[1]]:
            tp = two_point_decompose(ybar, c.y_atoms[on[0]], c.y_atoms[on[1]])
            out.entries[float(x)] = tp
            out.observed[float(x)] = float(cond[on[0]])
        else:
            out.irregular[float(x)] = [(float(c.y_atoms[k]), float(cond[k])) for k in on]
    return out


def singleton_coupling(mx: DiscreteMeasure, y1: float, y2: float) -> Coupling2:
    """The only martingale coupling of ``mx`` with a law on ``{y1, y2}``."""
    if not y1 < y2:
        raise ValueError("need y1 < y2")
    x = mx.atoms
    if x.min() < y1 or x.max() > y2:
        raise SupportViolation(f"atoms of mx must lie in [{y1}, {y2}]")
    g1 = (y2 - x) / (y2 - y1)
    g2 = (x - y1) / (y2 - y1)
    mass = np.column_stack([mx.weights * g1, mx.weights * g2])
    return Coupling2(x, np.array([y1, y2]), mass)


# --- uniqueness probe -----------------------------------------------------

@dataclass
class ProbeResult:
    unique: bool
    trials: int
    max_deviation: float
    optimizers: tuple = ()

    def __str__(self):
        label = "unique (probabilistic)" if self.unique else "non-unique"
        return f"{label}: {self.trials} trials, max deviation {self.max_deviation:.3g}"


def uniqueness_probe(lp: LinearProgram, trials: int = 20, seed: int = 0,
                     primary: lp_core.LPSolution | None = None, threshold: float = 1e-6,
                     tol: Tolerances | None = None, view=None) -> ProbeResult:
    """Look for two distinct optimizers by optimizing random objectives over the optimal face.

    ``view`` maps a primal vector to the quantity whose uniqueness is tested
    (e.g. a projection of a coupling); by default the whole vector is compared.
    """
    if primary is None:
        primary = lp_core.solve(lp, tol)
    view = (lambda v: v) if view is None else view
    rng = np.random.default_rng(seed)
    found = [np.asarray(view(primary.primal), dtype=float).ravel()]
    max_dev = 0.0
    for t in range(1, trials + 1):
        secondary = rng.standard_normal(lp.n_vars)
        sol = lp_core.solve_lexicographic(lp, secondary, "minimize", primary, tol)
        if not sol.optimal:
            continue
        cur = np.asarray(view(sol.primal), dtype=float).ravel()
        for prev in found:
            dev = float(np.abs(cur - prev).max())
            max_dev = max(max_dev, dev)
            if dev > threshold:
                return ProbeResult(False, t, max_dev, (prev, cur))
        found.append(cur)
    return ProbeResult(True, trials, max_dev)
