"""Two- and three-axis couplings on atom grids, disintegration and CSV export.

Mass is stored as a dense array over the grid product; desk-sized grids
(at most a few thousand cells) make a sparse container unnecessary.  Use
:meth:`Coupling2.support` / :meth:`Coupling3.support` for the nonzero cells.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .config import resolve
from .measure import DiscreteMeasure


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Coupling2:
    x_atoms: np.ndarray
    y_atoms: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_atoms", _frozen(self.x_atoms))
        object.__setattr__(self, "y_atoms", _frozen(self.y_atoms))
        mass = np.maximum(np.array(self.mass, dtype=float), 0.0)
        if mass.shape != (self.x_atoms.size, self.y_atoms.size):
            raise ValueError(f"mass shape {mass.shape} does not match grids")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @property
    def grids(self):
        return (self.x_atoms, self.y_atoms)

    def marginal(self, axis: int) -> DiscreteMeasure:
        w = self.mass.sum(axis=1 - axis)
        return DiscreteMeasure.from_unnormalized(self.grids[axis], w)

    def marginal_weights(self, axis: int) -> np.ndarray:
        return self.mass.sum(axis=1 - axis)

    def integrate(self, f) -> float:
        X, Y = np.meshgrid(self.x_atoms, self.y_atoms, indexing="ij")
        return float((self.mass * evaluate(f, X, Y)).sum())

    def martingale_residuals(self) -> np.ndarray:
        """Per x-atom ``sum_j mass(i, j) * (y_j - x_i)``."""
        return self.mass @ self.y_atoms - self.mass.sum(axis=1) * self.x_atoms

    def is_martingale(self, tol: float | None = None) -> bool:
        tol = resolve(None).martingale if tol is None else tol
        return bool(np.all(np.abs(self.martingale_residuals()) <= tol))

    def support(self, floor: float = 0.0):
        """List of ``(x, y, mass)`` for cells above ``floor``, in grid order."""
        i, j = np.nonzero(self.mass > floor)
        return [(self.x_atoms[a], self.y_atoms[b], self.mass[a, b]) for a, b in zip(i, j)]

    def transpose(self) -> "Coupling2":
        return Coupling2(self.y_atoms, self.x_atoms, self.mass.T)


@dataclass(frozen=True, eq=False)
class Coupling3:
    x_atoms: np.ndarray
    y_atoms: np.ndarray
    z_atoms: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        for name in ("x_atoms", "y_atoms", "z_atoms"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        mass = np.maximum(np.array(self.mass, dtype=float), 0.0)
        if mass.shape != (self.x_atoms.size, self.y_atoms.size, self.z_atoms.size):
            raise ValueError(f"mass shape {mass.shape} does not match grids")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @property
    def grids(self):
        return (self.x_atoms, self.y_atoms, self.z_atoms)

    def marginal_weights(self, axis: int) -> np.ndarray:
        other = tuple(a for a in range(3) if a != axis)
        return self.mass.sum(axis=other)

    def marginal(self, axis: int) -> DiscreteMeasure:
        return DiscreteMeasure.from_unnormalized(self.grids[axis], self.marginal_weights(axis))

    def project(self, axes) -> Coupling2:
        a, b = axes
        drop = ({0, 1, 2} - {a, b}).pop()
        m = self.mass.sum(axis=drop)
        if a > b:
            m = m.T
        return Coupling2(self.grids[a], self.grids[b], m)

    def integrate(self, f) -> float:
        X, Y, Z = np.meshgrid(*self.grids, indexing="ij")
        return float((self.mass * evaluate(f, X, Y, Z)).sum())

    def martingale_residuals(self):
        """First-step residuals per x and second-step residuals per (x, y)."""
        x, y, z = self.grids
        pxy = self.mass.sum(axis=2)
        first = pxy @ y - pxy.sum(axis=1) * x
        second = self.mass @ z - pxy * y[None, :]
        return first, second

    def is_martingale(self, tol: float | None = None) -> bool:
        tol = resolve(None).martingale if tol is None else tol
        first, second = self.martingale_residuals()
        return bool(np.all(np.abs(first) <= tol) and np.all(np.abs(second) <= tol))

    def support(self, floor: float = 0.0):
        idx = np.argwhere(self.mass > floor)
        return [(self.x_atoms[i], self.y_atoms[j], self.z_atoms[k], self.mass[i, j, k])
                for i, j, k in idx]


def evaluate(f, *args) -> np.ndarray:
    """Evaluate a cost on broadcast grids, falling back to elementwise calls."""
    shape = np.broadcast_shapes(*(np.shape(a) for a in args))
    try:
        out = np.asarray(f(*args), dtype=float)
        if out.shape != shape:
            out = np.broadcast_to(out, shape).astype(float)
    except (TypeError, ValueError):
        out = np.vectorize(lambda *v: float(f(*v)), otypes=[float])(*args)
    if not np.all(np.isfinite(out)):
        raise ValueError("cost is not finite on the atom grid")
    return out


def check_marginals(coupling, measures, tol: float | None = None) -> list:
    """Return indices of axes whose marginal differs from ``measures`` (None entries skipped)."""
    tol = resolve(None).general if tol is None else tol
    bad = []
    for axis, m in enumerate(measures):
        if m is None:
            continue
        grid = coupling.grids[axis]
        w = coupling.marginal_weights(axis)
        target = np.zeros(grid.size)
        pos = np.searchsorted(grid, m.atoms)
        pos = np.clip(pos, 0, grid.size - 1)
        if not np.allclose(grid[pos], m.atoms, atol=1e-12, rtol=0):
            bad.append(axis)
            continue
        target[pos] = m.weights
        if np.abs(w - target).max() > tol:
            bad.append(axis)
    return bad


def disintegrate(c, axes):
    """Condition a coupling on the axes in ``axes``.

    Returns ``(point, conditional)`` pairs for every conditioning point with
    positive weight.  The conditional is a :class:`DiscreteMeasure` when one
    axis remains and a :class:`Coupling2` when two remain (three-axis
    coupling conditioned on a single axis).  Conditionals keep the full grid
    of the remaining axes, so zero-weight atoms appear in them.
    """
    axes = tuple(sorted({axes} if isinstance(axes, int) else set(axes)))
    ndim = c.mass.ndim
    rest = tuple(a for a in range(ndim) if a not in axes)
    if not axes or not rest:
        raise ValueError("condition on a nonempty proper subset of axes")
    mass = np.moveaxis(c.mass, axes + rest, tuple(range(ndim)))
    cond_shape = mass.shape[:len(axes)]
    out = []
    for idx in np.ndindex(*cond_shape):
        block = mass[idx]
        w = block.sum()
        if w <= 0:
            continue
        point = tuple(c.grids[a][i] for a, i in zip(axes, idx))
        point = point[0] if len(point) == 1 else point
        block = block / w
        if len(rest) == 1:
            cond = DiscreteMeasure.from_unnormalized(c.grids[rest[0]], block)
        else:
            cond = Coupling2(c.grids[rest[0]], c.grids[rest[1]], block)
        out.append((point, cond))
    return out


def conditional_rows(c: Coupling2, axis: int = 0):
    """Normalized conditional weight vectors (full grid) keyed by conditioning index."""
    m = c.mass if axis == 0 else c.mass.T
    w = m.sum(axis=1)
    rows = {}
    for i in np.flatnonzero(w > 0):
        rows[int(i)] = m[i] / w[i]
    return rows


def write_coupling_csv(c, path) -> None:
    """Export nonzero cells as ``x,y[,z],mass`` in lexicographic order, 17 significant digits."""
    names = ["x", "y", "z"][: c.mass.ndim]
    idx = np.argwhere(c.mass > 0)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(names + ["mass"]) + "\n")
        for cell in idx:  # argwhere yields C order, i.e. lexicographic on sorted grids
            coords = [c.grids[a][k] for a, k in enumerate(cell)]
            fh.write(",".join(f"{v:.17g}" for v in coords + [c.mass[tuple(cell)]]) + "\n")


def read_coupling_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header not in (["x", "y", "mass"], ["x", "y", "z", "mass"]):
            raise ValueError(f"{path}: line 1: expected header x,y[,z],mass, got {header!r}")
        ndim = len(header) - 1
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != ndim + 1:
                raise ValueError(f"{path}: line {lineno}: expected {ndim + 1} columns")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric value in {row!r}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    grids = [np.unique(data[:, a]) for a in range(ndim)]
    mass = np.zeros(tuple(g.size for g in grids))
    cells = tuple(np.searchsorted(g, data[:, a]) for a, g in enumerate(grids))
    np.add.at(mass, cells, data[:, -1])
    return Coupling2(*grids, mass) if ndim == 2 else Coupling3(*grids, mass)


def embed_coupling(c, grids):
    """Re-express ``c`` on supersets of its grids (e.g. after CSV import dropped empty atoms)."""
    mass = np.zeros(tuple(len(g) for g in grids))
    pos = [np.searchsorted(np.asarray(g), cg) for g, cg in zip(grids, c.grids)]
    for g, cg, p in zip(grids, c.grids, pos):
        p = np.clip(p, 0, len(g) - 1)
        if not np.allclose(np.asarray(g)[p], cg, atol=1e-12, rtol=0):
            raise ValueError("coupling grid is not contained in the target grid")
    mass[np.ix_(*pos)] = c.mass
    return Coupling2(*grids, mass) if c.mass.ndim == 2 else Coupling3(*grids, mass)
