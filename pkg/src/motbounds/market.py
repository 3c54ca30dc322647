"""Risk-neutral marginals from call-price chains.

Prices are taken to be in forward terms (undiscounted, no carry); convert
before calling.  Atoms are placed at the quoted strikes, no interpolation.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lp_core
from .config import resolve
from .errors import AllMassClipped, RepairInfeasible, TooFewStrikes
from .lp_core import LinearProgram
from .measure import DiscreteMeasure, convex_order_leq


class ChainRepairWarning(UserWarning):
    """Negative implied masses were clipped."""


@dataclass
class OptionChain:
    strikes: np.ndarray
    calls: np.ndarray
    maturity: str = ""
    forward: float | None = None

    def __post_init__(self):
        self.strikes = np.asarray(self.strikes, dtype=float)
        self.calls = np.asarray(self.calls, dtype=float)
        if self.strikes.shape != self.calls.shape or self.strikes.ndim != 1:
            raise ValueError("strikes and calls must be 1-d arrays of equal length")
        if np.any(np.diff(self.strikes) <= 0):
            raise ValueError("strikes must be strictly increasing")
        if np.any(self.calls < 0):
            raise ValueError("call prices must be nonnegative")


@dataclass
class ChainDiagnostics:
    raw_masses: np.ndarray
    clipped: list = field(default_factory=list)  # strikes whose mass was negative
    clipped_mass: float = 0.0
    implied_mean: float = float("nan")
    mean: float = float("nan")
    forward_gap: float | None = None

    @property
    def valid(self) -> bool:
        return not self.clipped

    def to_dict(self) -> dict:
        return {"valid": self.valid, "clipped_strikes": self.clipped,
                "clipped_mass": self.clipped_mass, "implied_mean": self.implied_mean,
                "mean": self.mean, "forward_gap": self.forward_gap}


def implied_masses(strikes, calls) -> np.ndarray:
    """Masses at each strike from slopes of the call curve.

    Interior strikes get the jump in slope (second divided difference times
    half the surrounding spacing).  The first strike gets ``1 + s_0`` and the
    last ``-s_last``, where ``s`` are the segment slopes; for any measure
    supported on the strike grid this telescopes to total mass one and
    reproduces the measure exactly.
    """
    K = np.asarray(strikes, dtype=float)
    C = np.asarray(calls, dtype=float)
    s = np.diff(C) / np.diff(K)
    return np.concatenate([[1.0 + s[0]], np.diff(s), [-s[-1]]])


def bl_density_report(chain: OptionChain):
    if chain.strikes.size < 3:
        raise TooFewStrikes(f"need at least 3 strikes, got {chain.strikes.size}")
    raw = implied_masses(chain.strikes, chain.calls)
    diag = ChainDiagnostics(raw, implied_mean=float(chain.strikes[0] + chain.calls[0]))
    # second differences of exact prices leave round-off of order 1e-16
    noise = resolve(None).weight_sum * max(1.0, float(np.abs(chain.calls).max()))
    neg = raw < -noise
    raw = np.where((raw < 0) & ~neg, 0.0, raw)
    if neg.any():
        diag.clipped = [float(k) for k in chain.strikes[neg]]
        diag.clipped_mass = float(-raw[neg].sum())
        warnings.warn(f"chain {chain.maturity!r}: clipped negative mass {diag.clipped_mass:.3g} "
                      f"at {len(diag.clipped)} strike(s)", ChainRepairWarning, stacklevel=3)
    masses = np.maximum(raw, 0.0)
    if masses.sum() <= 0:
        raise AllMassClipped(f"chain {chain.maturity!r}: no positive mass after clipping")
    m = DiscreteMeasure.from_unnormalized(chain.strikes, masses)
    diag.mean = m.mean()
    if chain.forward is not None:
        diag.forward_gap = float(diag.mean - chain.forward)
    return m, diag


def bl_density(chain: OptionChain) -> DiscreteMeasure:
    """Discrete risk-neutral law implied by a call chain (clip negatives, renormalize)."""
    return bl_density_report(chain)[0]


def call_prices(m: DiscreteMeasure, strikes) -> np.ndarray:
    """``sum_i w_i max(x_i - K, 0)`` for each strike."""
    K = np.asarray(strikes, dtype=float)
    return np.maximum(m.atoms[None, :] - K[:, None], 0.0) @ m.weights


def repair_chain(ms, target_mean: float, budget: float = 0.1, tol: float | None = None):
    """Move the least total weight (L1) so the chain has equal means and convex order.

    Atoms stay fixed; only weights change.  Raises :class:`RepairInfeasible`
    when no repair exists on the given atoms or it would move more than
    ``budget`` in total.
    """
    tol = resolve(None).general if tol is None else tol
    ms = list(ms)
    if not ms:
        raise ValueError("empty chain")
    means_ok = all(abs(m.mean() - target_mean) <= tol for m in ms)
    if means_ok and all(convex_order_leq(a, b, tol) for a, b in zip(ms, ms[1:])):
        return ms

    # variables: per measure [w'(n) | p(n) | q(n)], then one slack per potential row
    sizes = [len(m) for m in ms]
    offs = np.concatenate([[0], np.cumsum([3 * n for n in sizes])])
    grids = [np.union1d(a.atoms, b.atoms) for a, b in zip(ms, ms[1:])]
    n_slack = sum(g.size for g in grids)
    nvar = offs[-1] + n_slack
    rows, rhs = [], []
    for t, m in enumerate(ms):
        n, o = sizes[t], offs[t]
        r = np.zeros(nvar); r[o:o + n] = 1; rows.append(r); rhs.append(1.0)
        r = np.zeros(nvar); r[o:o + n] = m.atoms; rows.append(r); rhs.append(target_mean)
        for i in range(n):  # w' - p + q = w
            r = np.zeros(nvar); r[o + i] = 1; r[o + n + i] = -1; r[o + 2 * n + i] = 1
            rows.append(r); rhs.append(m.weights[i])
    s = offs[-1]
    for t, g in enumerate(grids):
        a, b = ms[t], ms[t + 1]
        for pt in g:  # U_a(pt) - U_b(pt) + slack = 0
            r = np.zeros(nvar)
            r[offs[t]:offs[t] + sizes[t]] = np.abs(pt - a.atoms)
            r[offs[t + 1]:offs[t + 1] + sizes[t + 1]] = -np.abs(pt - b.atoms)
            r[s] = 1
            s += 1
            rows.append(r); rhs.append(0.0)
    cost = np.zeros(nvar)
    for t, n in enumerate(sizes):
        cost[offs[t] + n: offs[t] + 3 * n] = 1.0
    sol = lp_core.solve(LinearProgram(cost, np.array(rows), np.array(rhs)))
    diagnostics = {"means": [m.mean() for m in ms], "target_mean": target_mean,
                   "budget": budget}
    if not sol.optimal:
        raise RepairInfeasible("no convex-order chain with this mean exists on these atoms",
                               diagnostics)
    diagnostics["moved"] = sol.value
    if sol.value > budget + tol:
        raise RepairInfeasible(f"repair needs to move {sol.value:.6g} > budget {budget:.6g}",
                               diagnostics)
    out = []
    for t, n in enumerate(sizes):
        w = np.maximum(sol.primal[offs[t]:offs[t] + n], 0.0)
        out.append(DiscreteMeasure(ms[t].atoms, w / w.sum()))
    return out


# --- files ----------------------------------------------------------------

def read_chain(csv_path, sidecar=None) -> OptionChain:
    """Read ``strike,call_price`` rows plus an optional JSON sidecar ``{maturity, forward}``.

    The sidecar defaults to the CSV path with a ``.json`` suffix when present.
    """
    csv_path = Path(csv_path)
    strikes, calls = [], []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["strike", "call_price"]:
            raise ValueError(f"{csv_path}: line 1: expected header 'strike,call_price', "
                             f"got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{csv_path}: line {lineno}: expected 2 columns, got {len(row)}")
            try:
                strikes.append(float(row[0]))
                calls.append(float(row[1]))
            except ValueError:
                raise ValueError(f"{csv_path}: line {lineno}: non-numeric value in {row!r}") from None
    sidecar = Path(sidecar) if sidecar else csv_path.with_suffix(".json")
    maturity, forward = csv_path.stem, None
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        maturity = str(meta.get("maturity", maturity))
        forward = meta.get("forward")
        forward = None if forward is None else float(forward)
    try:
        return OptionChain(np.array(strikes), np.array(calls), maturity, forward)
    except ValueError as exc:
        raise ValueError(f"{csv_path}: {exc}") from None


def write_chain(chain: OptionChain, csv_path) -> None:
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("strike,call_price\n")
        for k, c in zip(chain.strikes, chain.calls):
            fh.write(f"{k:.17g},{c:.17g}\n")
    meta = {"maturity": chain.maturity, "forward": chain.forward}
    csv_path.with_suffix(".json").write_text(json.dumps(meta) + "\n", encoding="utf-8")
