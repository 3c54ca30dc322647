"""Discrete probability measures on the real line and convex-order tests."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .config import Tolerances, resolve


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely many atoms with nonnegative weights summing to one.

    Atoms are sorted on construction and positions closer than the merge
    tolerance are combined.  Zero-weight atoms are kept: they still index a
    row or column of any transport problem built on the measure.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __init__(self, atoms, weights, tol: Tolerances | None = None):
        tol = resolve(tol)
        atoms = np.asarray(atoms, dtype=float).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        if atoms.size != weights.size:
            raise ValueError("atoms and weights must have the same length")
        if atoms.size == 0:
            raise ValueError("a measure needs at least one atom")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise ValueError("atoms and weights must be finite")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > tol.weight_sum:
            raise ValueError(f"weights sum to {weights.sum():.17g}, not 1")

        order = np.argsort(atoms, kind="stable")
        atoms, weights = atoms[order], weights[order]
        keep = np.concatenate([[True], np.diff(atoms) > tol.merge])
        groups = np.cumsum(keep) - 1
        merged_w = np.bincount(groups, weights=weights)
        merged_x = atoms[keep]
        merged_x.setflags(write=False)
        merged_w.setflags(write=False)
        object.__setattr__(self, "atoms", merged_x)
        object.__setattr__(self, "weights", merged_w)

    @classmethod
    def from_unnormalized(cls, atoms, masses, tol=None) -> "DiscreteMeasure":
        masses = np.asarray(masses, dtype=float)
        total = masses.sum()
        if total <= 0:
            raise ValueError("total mass must be positive")
        return cls(atoms, masses / total, tol)

    @classmethod
    def dirac(cls, x: float) -> "DiscreteMeasure":
        return cls([x], [1.0])

    @classmethod
    def uniform(cls, atoms) -> "DiscreteMeasure":
        atoms = np.asarray(atoms, dtype=float)
        return cls(atoms, np.full(atoms.size, 1.0 / atoms.size))

    def __len__(self) -> int:
        return self.atoms.size

    def __repr__(self) -> str:
        pairs = ", ".join(f"{x:g}: {w:g}" for x, w in zip(self.atoms, self.weights))
        return f"DiscreteMeasure({{{pairs}}})"

    def mean(self) -> float:
        return float(self.weights @ self.atoms)

    def moment(self, k: int) -> float:
        return float(self.weights @ self.atoms**k)

    def variance(self) -> float:
        return float(self.weights @ (self.atoms - self.mean()) ** 2)

    def potential(self, t):
        """``U(t) = sum_i w_i |t - x_i|``; accepts scalars or arrays."""
        t = np.asarray(t, dtype=float)
        out = np.abs(t[..., None] - self.atoms) @ self.weights
        return float(out) if out.ndim == 0 else out

    def support(self, floor: float = 0.0) -> np.ndarray:
        return self.atoms[self.weights > floor]

    def allclose(self, other: "DiscreteMeasure", atol: float = 1e-12) -> bool:
        return (len(self) == len(other) and np.allclose(self.atoms, other.atoms, atol=atol)
                and np.allclose(self.weights, other.weights, atol=atol))

    def total_variation(self, other: "DiscreteMeasure") -> float:
        grid = np.union1d(self.atoms, other.atoms)
        a = np.zeros(grid.size)
        b = np.zeros(grid.size)
        a[np.searchsorted(grid, self.atoms)] = self.weights
        b[np.searchsorted(grid, other.atoms)] = other.weights
        return 0.5 * float(np.abs(a - b).sum())


def mean(m: DiscreteMeasure) -> float:
    return m.mean()


def potential(m: DiscreteMeasure, t):
    return m.potential(t)


def convex_order_leq(a: DiscreteMeasure, b: DiscreteMeasure, tol: float | None = None,
                     strict: bool = False) -> bool:
    """True when ``a`` precedes ``b`` in convex order.

    Both potentials are piecewise linear with kinks at atoms, so comparing
    them at the union of atoms (plus equal means, which fixes the tails) is
    exact.  ``strict=True`` disables the tolerance.
    """
    if strict:
        tol = 0.0
    elif tol is None:
        tol = resolve(None).general
    if abs(a.mean() - b.mean()) > tol:
        return False
    grid = np.union1d(a.atoms, b.atoms)
    return bool(np.all(a.potential(grid) <= b.potential(grid) + tol))


def is_convex_order_chain(ms, tol: float | None = None) -> bool:
    return all(convex_order_leq(a, b, tol) for a, b in zip(ms, ms[1:]))


def read_measure_csv(path) -> DiscreteMeasure:
    """Read ``position,weight`` rows (header required)."""
    atoms, weights = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["position", "weight"]:
            raise ValueError(f"{path}: line 1: expected header 'position,weight', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 2 columns, got {len(row)}")
            try:
                atoms.append(float(row[0]))
                weights.append(float(row[1]))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric value in {row!r}") from None
    if not atoms:
        raise ValueError(f"{path}: no data rows")
    # printed decimals rarely sum to exactly 1; renormalize only small drift
    total = sum(weights)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"{path}: weights sum to {total!r}, not 1")
    if abs(total - 1.0) <= resolve(None).weight_sum:
        return DiscreteMeasure(atoms, weights)  # keep the file's bits
    return DiscreteMeasure.from_unnormalized(atoms, weights)


def write_measure_csv(m: DiscreteMeasure, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("position,weight\n")
        for x, w in zip(m.atoms, m.weights):
            fh.write(f"{x:.17g},{w:.17g}\n")
