"""Price bounds as functions of the interaction weight and their tangent lines at zero.

``P_l(eps)`` (``P_u(eps)``) is the minimal (maximal) price of
``c1(x, y) + c2(y, z) + eps * c3(x, z)`` over three-period martingales with
the given marginals.  As an infimum (supremum) of affine functions of eps it
is concave (convex), so the tangent line at zero is an upper bound for the
lower curve and a lower bound for the upper curve.

The slope at zero is the optimum of ``int c3`` over the eps=0 optimal face.
Two routes compute it:

* ``"decoupled"`` solves the two two-period problems, then one
  fixed-barycenter problem per y-atom (cheap, exact when the two-period
  optimizers are unique);
* ``"lexicographic"`` optimizes ``c3`` over the optimal face of the full
  three-period LP (authoritative, expensive).
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import lp_core
from .config import Tolerances, ordered_map, resolve
from .costs import CostSpec
from .couplings import evaluate
from .errors import MOTError
from .mot import MOTResult, OverlapResult, solve_mot2, solve_mot3, solve_overlapping
from .structure import uniqueness_probe
from .tree_model import tree_price


class NonUniqueOptimizerWarning(UserWarning):
    """Two-period optimizers are not unique; the decoupled slope may miss the face optimum."""


class CurveInvariantWarning(UserWarning):
    pass


def _opposite(sense: str) -> str:
    return "maximize" if lp_core.normalize_sense(sense) == "minimize" else "minimize"


@dataclass
class Decoupled:
    """Everything the decoupled route computes for one sense."""

    sense: str
    xy: MOTResult
    yz: MOTResult
    overlap: OverlapResult
    probes: tuple = ()

    @property
    def value_at_zero(self) -> float:
        return self.xy.value + self.yz.value

    @property
    def slope(self) -> float:
        return self.overlap.value

    @property
    def unique(self) -> bool:
        return all(p.unique for p in self.probes)


def decoupled_expansion(mx, my, mz, cost: CostSpec, sense="minimize", side="right",
                        probe_trials: int = 4, seed: int = 0,
                        tol: Tolerances | None = None) -> Decoupled:
    tol = resolve(tol)
    sense = lp_core.normalize_sense(sense)
    xy = solve_mot2(mx, my, cost.c1, sense, tol)
    yz = solve_mot2(my, mz, cost.c2, sense, tol)
    probes = ()
    if probe_trials > 0:
        probes = tuple(uniqueness_probe(r.lp, probe_trials, seed, r.solution, tol=tol)
                       for r in (xy, yz))
        if not all(p.unique for p in probes):
            warnings.warn(f"{sense}: two-period optimizers are not unique; the lexicographic "
                          "slope is authoritative", NonUniqueOptimizerWarning, stacklevel=3)
    inner = sense if side == "right" else _opposite(sense)
    overlap = solve_overlapping(xy.coupling, yz.coupling, cost.c3, inner, tol)
    return Decoupled(sense, xy, yz, overlap, probes)


def face_slope(mx, my, mz, cost: CostSpec, sense="minimize", side="right",
               tol: Tolerances | None = None) -> lp_core.LPSolution:
    """Optimize ``int c3`` over the optimal face of the eps=0 three-period problem."""
    tol = resolve(tol)
    base = solve_mot3(mx, my, mz, cost.with_epsilon(0.0), sense, tol=tol)
    X, _, Z = np.meshgrid(mx.atoms, my.atoms, mz.atoms, indexing="ij")
    secondary = evaluate(cost.c3, X, Z).ravel()
    inner = lp_core.normalize_sense(sense) if side == "right" else _opposite(sense)
    return lp_core.solve_lexicographic(base.lp, secondary, inner, base.solution, tol)


def derivative_at_zero(mx, my, mz, cost: CostSpec, sense="minimize", method="decoupled",
                       side="right", probe_trials: int = 4, seed: int = 0,
                       tol: Tolerances | None = None) -> float:
    """One-sided derivative of the optimal value at eps = 0.

    ``side="right"`` is the derivative for eps > 0 (the one the first-order
    bounds use); ``side="left"`` optimizes ``c3`` in the opposite direction
    over the same face.
    """
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    if method == "decoupled":
        return decoupled_expansion(mx, my, mz, cost, sense, side, probe_trials, seed, tol).slope
    if method == "lexicographic":
        return face_slope(mx, my, mz, cost, sense, side, tol).value
    raise ValueError(f"unknown method {method!r}")


@dataclass
class BoundsReport:
    eps: float
    P_l0: float
    P_u0: float
    dP_l: float
    dP_u: float
    Q_l: float
    Q_u: float
    P_l: float | None = None
    P_u: float | None = None
    tree_prices: dict = field(default_factory=dict)
    supports: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    per_y: dict = field(default_factory=dict)
    probes: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    couplings: dict = field(default_factory=dict, repr=False)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "eps": self.eps,
            "P_l0": self.P_l0, "P_u0": self.P_u0,
            "dP_l": self.dP_l, "dP_u": self.dP_u,
            "Q_l": self.Q_l, "Q_u": self.Q_u,
            "P_l": self.P_l, "P_u": self.P_u,
            "tree_prices": {str(k): v for k, v in self.tree_prices.items()},
            "supports": self.supports,
            "certificates": {k: c.to_dict() for k, c in self.certificates.items()},
            "per_y": self.per_y,
            "probes": {k: {"unique": p.unique, "trials": p.trials,
                           "max_deviation": p.max_deviation} for k, p in self.probes.items()},
            "warnings": self.warnings,
        }
        if include_timing:
            d["timing"] = self.timing
        return d

    def table(self) -> str:
        """Rows ``eps | Q_l | p=... | Q_u`` (plus exact bounds when computed)."""
        ps = sorted(self.tree_prices)
        head = ["eps", "Q_l"] + [f"p = {p:g}" for p in ps] + ["Q_u"]
        row = [self.eps, self.Q_l] + [self.tree_prices[p] for p in ps] + [self.Q_u]
        if self.P_l is not None:
            head = head[:1] + ["P_l"] + head[1:] + ["P_u"]
            row = row[:1] + [self.P_l] + row[1:] + [self.P_u]
        cells = [f"{v:.10g}" for v in row]
        widths = [max(len(h), len(c)) for h, c in zip(head, cells)]
        line = " | ".join(h.rjust(w) for h, w in zip(head, widths))
        vals = " | ".join(c.rjust(w) for c, w in zip(cells, widths))
        return f"{line}\n{'-' * len(line)}\n{vals}"


def _support_list(c):
    return [list(map(float, cell)) for cell in c.support(resolve(None).support_floor)]


def first_order_bounds(mx, my, mz, cost: CostSpec, eps: float, exact: bool = False,
                       tree_p=(), probe_trials: int = 4, seed: int = 0,
                       tol: Tolerances | None = None) -> BoundsReport:
    """Tangent-line approximations ``Q_l``/``Q_u`` at ``eps`` from the decoupled route."""
    tol = resolve(tol)
    timing = {}
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonUniqueOptimizerWarning)
        lo = decoupled_expansion(mx, my, mz, cost, "minimize", "right", probe_trials, seed, tol)
        hi = decoupled_expansion(mx, my, mz, cost, "maximize", "right", probe_trials, seed, tol)
    timing["first_order"] = time.perf_counter() - t0

    report = BoundsReport(
        eps=float(eps),
        P_l0=lo.value_at_zero, P_u0=hi.value_at_zero,
        dP_l=lo.slope, dP_u=hi.slope,
        Q_l=lo.value_at_zero + eps * lo.slope,
        Q_u=hi.value_at_zero + eps * hi.slope,
        timing=timing,
    )
    report.warnings.extend(str(w.message) for w in caught)
    for tag, dec in (("lower", lo), ("upper", hi)):
        report.supports[f"{tag}_xy"] = _support_list(dec.xy.coupling)
        report.supports[f"{tag}_yz"] = _support_list(dec.yz.coupling)
        report.supports[f"{tag}_xyz"] = _support_list(dec.overlap.coupling)
        report.certificates[f"{tag}_xy"] = dec.xy.certificate
        report.certificates[f"{tag}_yz"] = dec.yz.certificate
        report.per_y[tag] = dec.overlap.per_y
        report.couplings[f"{tag}_xyz_first_order"] = dec.overlap.coupling
        for name, probe in zip(("xy", "yz"), dec.probes):
            report.probes[f"{tag}_{name}"] = probe

    if exact:
        t0 = time.perf_counter()
        ce = cost.with_epsilon(eps)
        low = solve_mot3(mx, my, mz, ce, "minimize", tol=tol)
        up = solve_mot3(mx, my, mz, ce, "maximize", tol=tol)
        report.P_l, report.P_u = low.value, up.value
        report.certificates["lower_xyz"] = low.certificate
        report.certificates["upper_xyz"] = up.certificate
        report.couplings["lower_xyz_exact"] = low.coupling
        report.couplings["upper_xyz_exact"] = up.coupling
        timing["exact"] = time.perf_counter() - t0
        if report.P_l > report.P_u + tol.hybrid(report.P_u):
            report.warnings.append("P_l exceeds P_u")

    for p in tree_p:
        report.tree_prices[p] = tree_price(mx, my, mz, p, cost, eps, tol)

    if report.Q_l > report.Q_u + tol.hybrid(report.Q_u):
        report.warnings.append("Q_l exceeds Q_u (slopes come from different decompositions)")
    return report


@dataclass
class BoundCurve:
    eps_grid: np.ndarray
    values: np.ndarray
    sense: str
    derivative_at_zero: float
    value_at_zero: float
    q_values: np.ndarray
    failures: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def invariants_ok(self) -> bool:
        return not self.violations and not self.failures

    @property
    def tangent_gaps(self) -> np.ndarray:
        """``Q - P`` for the lower curve, ``P - Q`` for the upper; nonnegative in theory."""
        d = self.q_values - self.values
        return d if self.sense == "minimize" else -d


def curve_violations(eps, values, q_values, sense, tol: Tolerances) -> list:
    out = []
    scale = max(1.0, float(np.nanmax(np.abs(values))) if np.isfinite(values).any() else 1.0)
    slack = tol.rel_cmp * scale
    sign = 1.0 if sense == "minimize" else -1.0
    ok = np.isfinite(values)
    e, v = np.asarray(eps)[ok], np.asarray(values)[ok]
    for a in range(len(e) - 2):
        t = (e[a + 1] - e[a]) / (e[a + 2] - e[a])
        chord = (1 - t) * v[a] + t * v[a + 2]
        # lower curve concave: P(mid) >= chord; upper convex: P(mid) <= chord
        if sign * (v[a + 1] - chord) < -slack:
            out.append(f"{'concavity' if sign > 0 else 'convexity'} fails at eps={e[a + 1]:g}")
    for ei, vi, qi in zip(eps, values, q_values):
        if np.isfinite(vi) and sign * (qi - vi) < -slack:
            out.append(f"tangent bound fails at eps={ei:g}")
    return out


def bound_curve(mx, my, mz, cost: CostSpec, eps_grid, sense="minimize", slope=None,
                probe_trials: int = 0, seed: int = 0,
                tol: Tolerances | None = None) -> BoundCurve:
    """Exact ``P(eps)`` on a grid by full three-period LPs, with the tangent line ``Q``."""
    tol = resolve(tol)
    sense = lp_core.normalize_sense(sense)
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or np.any(eps < 0) or np.any(np.diff(eps) < 0):
        raise ValueError("eps grid must be sorted and nonnegative")
    dec = decoupled_expansion(mx, my, mz, cost, sense, "right", probe_trials, seed, tol)
    d = dec.slope if slope is None else float(slope)
    p0 = dec.value_at_zero

    failures = {}

    def point(e):
        try:
            return solve_mot3(mx, my, mz, cost.with_epsilon(e), sense, tol=tol).value
        except MOTError as exc:
            failures[float(e)] = str(exc)
            return float("nan")

    values = np.array(ordered_map(point, eps))
    q = p0 + eps * d
    curve = BoundCurve(eps, values, sense, d, p0, q, failures)
    curve.violations = curve_violations(eps, values, q, sense, tol)
    if not curve.invariants_ok:
        warnings.warn("; ".join(curve.violations + list(failures.values())),
                      CurveInvariantWarning, stacklevel=2)
    return curve


def write_curve_csv(path, lower: BoundCurve, upper: BoundCurve, models: dict | None = None):
    """``epsilon,P_lower,Q_lower,P_upper,Q_upper[,model_price_p...]`` rows."""
    models = models or {}
    if not np.array_equal(lower.eps_grid, upper.eps_grid):
        raise ValueError("lower and upper curves use different grids")
    names = [f"model_price_p{k:g}" for k in models]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["epsilon", "P_lower", "Q_lower", "P_upper", "Q_upper"] + names) + "\n")
        for n, e in enumerate(lower.eps_grid):
            row = [e, lower.values[n], lower.q_values[n], upper.values[n], upper.q_values[n]]
            row += [models[k][n] for k in models]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
