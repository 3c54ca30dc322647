"""Discrete martingale optimal transport problems as linear programs.

Every builder produces an equality-form :class:`~motbounds.lp_core.LinearProgram`
over the full product of the atom grids.  Martingale constraints use the
mass-weighted form ``sum_j pi(i, j) (y_j - x_i) = 0`` so empty cells need no
special handling.  The LP duals are returned as a :class:`DualCertificate`,
i.e. a static option portfolio plus dynamic hedge ratios.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lp_core
from .config import Tolerances, ordered_map, resolve
from .costs import CostSpec
from .couplings import Coupling2, Coupling3, evaluate
from .errors import ConvexOrderViolation, InfeasibleProblem, MarginalMismatch
from .lp_core import LinearProgram, LPSolution
from .measure import DiscreteMeasure, convex_order_leq


@dataclass
class DualCertificate:
    """Semi-static hedge ``u(x) + v(y) + w(z) + g(x)(y - x) + h(x, y)(z - y)``.

    For a minimization it sub-replicates the cost on the grid; for a
    maximization it super-replicates.  Two-period certificates leave ``w``
    and ``h`` as ``None``.  A fixed-barycenter certificate sets ``barycenter``
    and trades ``g(x)(z - barycenter)`` instead.
    """

    grids: tuple
    u: np.ndarray
    v: np.ndarray
    g: np.ndarray
    w: np.ndarray | None = None
    h: np.ndarray | None = None
    sense: str = "minimize"
    barycenter: float | None = None

    def portfolio(self) -> np.ndarray:
        if self.w is None:
            x, y = self.grids
            ref = x[:, None] if self.barycenter is None else self.barycenter
            return self.u[:, None] + self.v[None, :] + self.g[:, None] * (y[None, :] - ref)
        x, y, z = self.grids
        return (self.u[:, None, None] + self.v[None, :, None] + self.w[None, None, :]
                + (self.g[:, None] * (y[None, :] - x[:, None]))[:, :, None]
                + self.h[:, :, None] * (z[None, None, :] - y[None, :, None]))

    def violation(self, cost_tensor: np.ndarray) -> float:
        """Largest amount by which the hedge fails to sub- (super-) replicate."""
        diff = self.portfolio() - cost_tensor
        if self.sense == "maximize":
            diff = -diff
        return float(max(0.0, diff.max()))

    def price(self, measures) -> float:
        parts = [self.u, self.v] + ([] if self.w is None else [self.w])
        return float(sum(p @ m.weights for p, m in zip(parts, measures)))

    def to_dict(self) -> dict:
        d = {"sense": self.sense, "grids": [list(map(float, g)) for g in self.grids],
             "u": self.u.tolist(), "v": self.v.tolist(), "g": self.g.tolist()}
        if self.w is not None:
            d["w"] = self.w.tolist()
            d["h"] = self.h.tolist()
        if self.barycenter is not None:
            d["barycenter"] = self.barycenter
        return d

    @classmethod
    def from_dict(cls, d) -> "DualCertificate":
        grids = tuple(np.asarray(g, dtype=float) for g in d["grids"])
        w = np.asarray(d["w"]) if "w" in d else None
        h = np.asarray(d["h"]) if "h" in d else None
        return cls(grids, np.asarray(d["u"]), np.asarray(d["v"]), np.asarray(d["g"]), w, h,
                   d.get("sense", "minimize"), d.get("barycenter"))


@dataclass
class MOTResult:
    value: float
    coupling: Coupling2 | Coupling3
    certificate: DualCertificate | None
    lp: LinearProgram = field(repr=False, default=None)
    solution: LPSolution = field(repr=False, default=None)
    cost_tensor: np.ndarray = field(repr=False, default=None)

    def __iter__(self):
        # allows ``value, coupling, certificate = solve_mot2(...)``
        return iter((self.value, self.coupling, self.certificate))


def _require_order(a, b, label, tol):
    if not convex_order_leq(a, b, tol.general):
        raise ConvexOrderViolation(f"{label}: marginals are not in convex order "
                                   f"(means {a.mean():.12g} vs {b.mean():.12g})")


def _solve_or_raise(lp, tol, what):
    sol = lp_core.solve(lp, tol)
    if sol.status == lp_core.INFEASIBLE:
        raise InfeasibleProblem(f"{what}: linear program is infeasible")
    if sol.status == lp_core.UNBOUNDED:
        raise InfeasibleProblem(f"{what}: linear program is unbounded")
    return sol


# --- two periods ----------------------------------------------------------

def cost_matrix(f, xs, ys) -> np.ndarray:
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return evaluate(f, X, Y)


def mot2_lp(mx: DiscreteMeasure, my: DiscreteMeasure, cost, sense="minimize") -> LinearProgram:
    """Rows: x-marginal, y-marginal, one martingale row per x-atom."""
    x, y = mx.atoms, my.atoms
    nx, ny = x.size, y.size
    C = cost if isinstance(cost, np.ndarray) else cost_matrix(cost, x, y)
    A = np.vstack([
        np.kron(np.eye(nx), np.ones(ny)),
        np.kron(np.ones(nx), np.eye(ny)),
        np.kron(np.eye(nx), np.ones(ny)) * (y[None, :] - x[:, None]).ravel(),
    ])
    b = np.concatenate([mx.weights, my.weights, np.zeros(nx)])
    return LinearProgram(C.ravel(), A, b, sense)


def solve_mot2(mx: DiscreteMeasure, my: DiscreteMeasure, cost, sense="minimize",
               tol: Tolerances | None = None) -> MOTResult:
    """Optimal martingale coupling between ``mx`` and ``my`` for a two-argument cost."""
    tol = resolve(tol)
    _require_order(mx, my, "solve_mot2", tol)
    C = cost_matrix(cost, mx.atoms, my.atoms)
    lp = mot2_lp(mx, my, C, sense)
    sol = _solve_or_raise(lp, tol, "two-period MOT")
    nx, ny = len(mx), len(my)
    coupling = Coupling2(mx.atoms, my.atoms, sol.primal.reshape(nx, ny))
    y = sol.duals
    cert = DualCertificate((mx.atoms, my.atoms), y[:nx], y[nx:nx + ny], y[nx + ny:],
                           sense=lp.sense)
    return MOTResult(float((C * coupling.mass).sum()), coupling, cert, lp, sol, C)


# --- three periods --------------------------------------------------------

def mot3_lp(mx, my, mz, cost_tensor: np.ndarray, sense="minimize",
            pxy: Coupling2 | None = None, pyz: Coupling2 | None = None) -> LinearProgram:
    """Three-period MOT program; ``pxy`` / ``pyz`` add projection-equality rows."""
    x, y, z = mx.atoms, my.atoms, mz.atoms
    nx, ny, nz = x.size, y.size, z.size
    I = np.arange(nx)[:, None, None]
    J = np.arange(ny)[None, :, None]
    K = np.arange(nz)[None, None, :]
    n = nx * ny * nz
    full = np.broadcast_to
    cols = np.arange(n)

    blocks = []
    rhs = []

    def add(row_index, values, nrows):
        M = np.zeros((nrows, n))
        M[full(row_index, (nx, ny, nz)).ravel(), cols] = full(values, (nx, ny, nz)).ravel()
        blocks.append(M)

    add(I, 1.0, nx); rhs.append(mx.weights)
    add(J, 1.0, ny); rhs.append(my.weights)
    add(K, 1.0, nz); rhs.append(mz.weights)
    add(I, y[None, :, None] - x[:, None, None], nx); rhs.append(np.zeros(nx))
    add(I * ny + J, z[None, None, :] - y[None, :, None], nx * ny); rhs.append(np.zeros(nx * ny))
    if pxy is not None:
        add(I * ny + J, 1.0, nx * ny); rhs.append(pxy.mass.ravel())
    if pyz is not None:
        add(J * nz + K, 1.0, ny * nz); rhs.append(pyz.mass.ravel())
    return LinearProgram(np.asarray(cost_tensor, dtype=float).ravel(), np.vstack(blocks),
                         np.concatenate(rhs), sense)


def _certificate3(mx, my, mz, duals, sense):
    nx, ny, nz = len(mx), len(my), len(mz)
    s = np.cumsum([0, nx, ny, nz, nx, nx * ny])
    return DualCertificate((mx.atoms, my.atoms, mz.atoms), duals[s[0]:s[1]], duals[s[1]:s[2]],
                           duals[s[3]:s[4]], duals[s[2]:s[3]],
                           duals[s[4]:s[5]].reshape(nx, ny), sense)


def solve_mot3(mx, my, mz, cost: CostSpec | np.ndarray, sense="minimize",
               pxy: Coupling2 | None = None, pyz: Coupling2 | None = None,
               tol: Tolerances | None = None) -> MOTResult:
    """Three-period MOT.  With ``pxy``/``pyz`` the twofold projections are pinned.

    The certificate is only returned for the unconstrained problem; pinned
    projections add dual variables that are not part of the semi-static hedge.
    """
    tol = resolve(tol)
    _require_order(mx, my, "solve_mot3 (x, y)", tol)
    _require_order(my, mz, "solve_mot3 (y, z)", tol)
    T = cost.tensor(mx.atoms, my.atoms, mz.atoms) if isinstance(cost, CostSpec) \
        else np.asarray(cost, dtype=float)
    lp = mot3_lp(mx, my, mz, T, sense, pxy, pyz)
    sol = _solve_or_raise(lp, tol, "three-period MOT")
    coupling = Coupling3(mx.atoms, my.atoms, mz.atoms, sol.primal.reshape(T.shape))
    cert = None
    if pxy is None and pyz is None:
        cert = _certificate3(mx, my, mz, sol.duals, lp.sense)
    return MOTResult(float((T * coupling.mass).sum()), coupling, cert, lp, sol, T)


# --- fixed barycenter -----------------------------------------------------

def fixed_barycenter_lp(sx, sz, ybar, C, sense="minimize") -> LinearProgram:
    x, z = sx.atoms, sz.atoms
    nx, nz = x.size, z.size
    A = np.vstack([
        np.kron(np.eye(nx), np.ones(nz)),
        np.kron(np.ones(nx), np.eye(nz)),
        np.kron(np.eye(nx), z - ybar),
    ])
    b = np.concatenate([sx.weights, sz.weights, np.zeros(nx)])
    return LinearProgram(np.asarray(C, dtype=float).ravel(), A, b, sense)


def solve_fixed_barycenter(sx: DiscreteMeasure, sz: DiscreteMeasure, ybar: float, cost3,
                           sense="minimize", tol: Tolerances | None = None) -> MOTResult:
    """Couple ``sx`` and ``sz`` so that every x-conditional of z has mean ``ybar``."""
    tol = resolve(tol)
    z = sz.support()
    if not (z.min() - tol.general <= ybar <= z.max() + tol.general):
        raise InfeasibleProblem(f"barycenter {ybar!r} outside the z-support [{z.min()}, {z.max()}]")
    if abs(sz.mean() - ybar) > tol.general:
        raise InfeasibleProblem(f"z-measure has mean {sz.mean()!r}, barycenter is {ybar!r}")
    C = cost_matrix(cost3, sx.atoms, sz.atoms)
    lp = fixed_barycenter_lp(sx, sz, ybar, C, sense)
    sol = _solve_or_raise(lp, tol, "fixed-barycenter problem")
    nx, nz = len(sx), len(sz)
    coupling = Coupling2(sx.atoms, sz.atoms, sol.primal.reshape(nx, nz))
    d = sol.duals
    # u(x) + w(z) + g(x) (z - ybar) <= c3(x, z)
    cert = DualCertificate((sx.atoms, sz.atoms), d[:nx], d[nx:nx + nz], d[nx + nz:],
                           sense=lp.sense, barycenter=float(ybar))
    return MOTResult(float((C * coupling.mass).sum()), coupling, cert, lp, sol, C)


# --- overlapping marginals -----------------------------------------------

@dataclass
class OverlapResult:
    value: float
    coupling: Coupling3
    per_y: list

    def __iter__(self):
        return iter((self.value, self.coupling))


def check_shared_marginal(p: Coupling2, q: Coupling2, p_axis: int, q_axis: int, tol: float,
                          what: str):
    gp, gq = p.grids[p_axis], q.grids[q_axis]
    if gp.size != gq.size or not np.allclose(gp, gq, rtol=0, atol=1e-12):
        raise MarginalMismatch(f"{what}: couplings use different grids for the shared axis")
    diff = np.abs(p.marginal_weights(p_axis) - q.marginal_weights(q_axis)).max()
    if diff > tol:
        raise MarginalMismatch(f"{what}: shared marginals differ by {diff:.3g}")


def solve_overlapping(pxy: Coupling2, pyz: Coupling2, cost3, sense="minimize",
                      tol: Tolerances | None = None) -> OverlapResult:
    """Optimize ``int c3(x, z)`` over three-period martingales with both projections fixed.

    Decomposes into one fixed-barycenter problem per y-atom: the x- and
    z-conditionals given y are the marginals and y itself is the barycenter.
    """
    tol = resolve(tol)
    check_shared_marginal(pxy, pyz, 1, 0, tol.general, "solve_overlapping")
    if not (pxy.is_martingale(tol.martingale) and pyz.is_martingale(tol.martingale)):
        raise ValueError("solve_overlapping: both input couplings must be martingales")
    x, y = pxy.grids
    z = pyz.y_atoms
    mu_y = pxy.marginal_weights(1)

    def sub(j):
        w = mu_y[j]
        # rows carrying only round-off mass are empty, not skipped by the floor
        if w <= tol.support_floor or w < tol.mass_floor:
            return {"y": float(y[j]), "weight": float(w), "value": 0.0, "skipped": True}, None
        ix = np.flatnonzero(pxy.mass[:, j] > 0)
        kz = np.flatnonzero(pyz.mass[j, :] > 0)
        sx = DiscreteMeasure.from_unnormalized(x[ix], pxy.mass[ix, j])
        sz = DiscreteMeasure.from_unnormalized(z[kz], pyz.mass[j, kz])
        # the inputs are martingales only up to a mass-weighted residual, so the
        # conditional mean may sit slightly off y; use it as the barycenter
        zbar = sz.mean()
        try:
            if abs(zbar - y[j]) * w > tol.martingale:
                raise InfeasibleProblem(f"z-conditional has mean {zbar!r}")
            res = solve_fixed_barycenter(sx, sz, zbar, cost3, sense, tol)
        except InfeasibleProblem as exc:
            raise InfeasibleProblem(f"y={y[j]!r}: {exc}", y_atom=float(y[j])) from exc
        entry = {"y": float(y[j]), "weight": float(w), "value": res.value, "skipped": False,
                 "support_size": int(np.count_nonzero(res.coupling.mass > tol.support_floor))}
        return entry, (ix, kz, w * res.coupling.mass)

    results = ordered_map(sub, range(y.size))
    mass = np.zeros((x.size, y.size, z.size))
    log = []
    value = 0.0
    for j, (entry, block) in enumerate(results):
        log.append(entry)
        if block is not None:
            ix, kz, m = block
            mass[np.ix_(ix, [j], kz)] = m[:, None, :]
            value += entry["weight"] * entry["value"]
    return OverlapResult(float(value), Coupling3(x, y, z, mass), log)
