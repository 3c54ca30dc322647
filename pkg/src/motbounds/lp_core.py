"""Dense revised simplex for equality-form linear programs.

Problems have the form ``opt c @ x  s.t.  A @ x = b, x >= 0``.  The solver
keeps an explicit basis inverse (refactorized periodically), prices with the
most-negative reduced cost and falls back to Bland's rule once the iteration
count passes ``5 * (m + n)``, which guarantees termination on degenerate
instances such as martingale transport problems.  There is no randomness, so
identical inputs give identical outputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances, resolve
from .errors import InternalSolverError, NumericalFailure

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_SENSES = {"min": "minimize", "minimize": "minimize", "max": "maximize", "maximize": "maximize"}

REFACTOR_EVERY = 50
DRIVE_OUT_PIVOT = 1e-9


def normalize_sense(sense: str) -> str:
    try:
        return _SENSES[str(sense).lower()]
    except KeyError:
        raise ValueError(f"unknown sense {sense!r}; use 'minimize' or 'maximize'") from None


@dataclass
class LinearProgram:
    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray
    sense: str = "minimize"

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        self.constraint_matrix = np.atleast_2d(np.asarray(self.constraint_matrix, dtype=float))
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.sense = normalize_sense(self.sense)
        m, n = self.constraint_matrix.shape
        if self.objective.size != n:
            raise ValueError(f"objective has {self.objective.size} entries, matrix has {n} columns")
        if self.rhs.size != m:
            raise ValueError(f"rhs has {self.rhs.size} entries, matrix has {m} rows")

    @property
    def n_vars(self) -> int:
        return self.constraint_matrix.shape[1]

    @property
    def n_rows(self) -> int:
        return self.constraint_matrix.shape[0]

    def dump(self, fh) -> None:
        """Write a plain-text listing: header, objective row, then ``coeffs = rhs`` rows."""
        fh.write(f"{self.sense} {self.n_rows} {self.n_vars}\n")
        fh.write(" ".join(f"{v:.17g}" for v in self.objective) + "\n")
        for row, b in zip(self.constraint_matrix, self.rhs):
            fh.write(" ".join(f"{v:.17g}" for v in row) + f" = {b:.17g}\n")


@dataclass
class LPSolution:
    status: str
    value: float
    primal: np.ndarray
    duals: np.ndarray
    basis: tuple = ()
    iterations: int = 0
    reduced_costs: np.ndarray = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Simplex:
    """One simplex run over a fixed column set; single use."""

    def __init__(self, A, b, c, basis, tol: Tolerances, bland_after: int, max_iter: int):
        self.A = A
        self.b = b
        self.c = c
        self.basis = list(basis)
        self.tol = tol
        self.bland_after = bland_after
        self.max_iter = max_iter
        self.iterations = 0
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis matrix") from exc
        self.xB = self.Binv @ self.b
        self.since_refactor = 0

    def duals(self):
        return self.c[self.basis] @ self.Binv

    def reduced_costs(self):
        d = self.c - self.duals() @ self.A
        d[self.basis] = 0.0
        return d

    def pivot(self, r, q, u):
        theta = self.xB[r] / u[r]
        self.xB -= theta * u
        self.xB[r] = theta
        pivot_row = self.Binv[r] / u[r]
        self.Binv -= np.outer(u, pivot_row)
        self.Binv[r] = pivot_row
        self.basis[r] = q
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def run(self, opt_tol: float) -> str:
        pivot_tol = self.tol.pivot
        while True:
            d = self.reduced_costs()
            bland = self.iterations >= self.bland_after
            if bland:
                cand = np.flatnonzero(d < -opt_tol)
                if cand.size == 0:
                    return OPTIMAL
                q = int(cand[0])
            else:
                q = int(np.argmin(d))
                if d[q] >= -opt_tol:
                    return OPTIMAL
            u = self.Binv @ self.A[:, q]
            rows = np.flatnonzero(u > pivot_tol)
            if rows.size == 0:
                return UNBOUNDED
            xb = np.maximum(self.xB[rows], 0.0)
            ratios = xb / u[rows]
            theta = ratios.min()
            ties = rows[ratios <= theta + 1e-12 * (1.0 + theta)]
            if bland:
                r = int(min(ties, key=lambda i: self.basis[i]))
            else:
                r = int(ties[np.argmax(u[ties])])
            self.pivot(r, q, u)
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise NumericalFailure(
                    f"simplex exceeded {self.max_iter} iterations (cycling guard exhausted)")


def solve(lp: LinearProgram, tol: Tolerances | None = None) -> LPSolution:
    """Solve ``lp``; infeasibility and unboundedness are reported through ``status``."""
    tol = resolve(tol)
    A = lp.constraint_matrix.copy()
    b = lp.rhs.copy()
    m, n = A.shape
    maximize = lp.sense == "maximize"
    c = -lp.objective if maximize else lp.objective.copy()

    flip = np.where(b < 0, -1.0, 1.0)
    A *= flip[:, None]
    b *= flip
    bland_after = 5 * (m + n)
    max_iter = 60 * (m + n) + 1000
    feas_tol = 1e-8 * (1.0 + np.abs(b).max(initial=0.0))
    opt_tol = tol.abs_cmp * max(1.0, np.abs(c).max(initial=0.0))

    if m == 0:
        if np.any(c < -opt_tol):
            return _unbounded(n, maximize)
        return LPSolution(OPTIMAL, 0.0, np.zeros(n), np.zeros(0), (), 0, c.copy())

    # phase 1: artificial identity columns
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    ph1 = _Simplex(A1, b, c1, range(n, n + m), tol, bland_after, max_iter)
    ph1.run(tol.abs_cmp)
    infeas = float(c1[ph1.basis] @ ph1.xB)
    if infeas > feas_tol:
        return LPSolution(INFEASIBLE, float("nan"), np.full(n, np.nan), np.full(m, np.nan),
                          (), ph1.iterations)

    # drive artificials out of the basis; rows that cannot be pivoted are redundant
    redundant = []
    for r in range(m):
        j = ph1.basis[r]
        if j < n:
            continue
        row = ph1.Binv[r] @ A
        row[[k for k in ph1.basis if k < n]] = 0.0
        k = int(np.argmax(np.abs(row)))
        if abs(row[k]) > DRIVE_OUT_PIVOT:
            u = ph1.Binv @ A1[:, k]
            ph1.pivot(r, k, u)
        else:
            redundant.append(j - n)
    keep = np.setdiff1d(np.arange(m), redundant)
    basis = [j for j in ph1.basis if j < n]
    if len(basis) != keep.size:
        raise InternalSolverError("basis size does not match the number of independent rows")

    ph2 = _Simplex(A[keep], b[keep], c, basis, tol, bland_after, max_iter)
    ph2.iterations = 0
    status = ph2.run(opt_tol)
    iterations = ph1.iterations + ph2.iterations
    if status == UNBOUNDED:
        return _unbounded(n, maximize, iterations)

    x = np.zeros(n)
    x[ph2.basis] = np.maximum(ph2.xB, 0.0)
    y = np.zeros(m)
    y[keep] = ph2.duals()
    y *= flip
    d = ph2.reduced_costs()
    value = float(lp.objective @ x)
    if maximize:
        y = -y
        d = -d
    return LPSolution(OPTIMAL, value, x, y, tuple(sorted(ph2.basis)), iterations, d)


def _unbounded(n, maximize, iterations=0):
    value = float("inf") if maximize else float("-inf")
    return LPSolution(UNBOUNDED, value, np.full(n, np.nan), np.zeros(0), (), iterations)


def solve_lexicographic(lp: LinearProgram, secondary, sense2: str = "minimize",
                        primary: LPSolution | None = None,
                        tol: Tolerances | None = None) -> LPSolution:
    """Optimize ``secondary`` over the optimal face of ``lp``.

    The primary objective is appended as an equality row at its optimal value
    and the augmented program is re-solved.  ``primary`` may be passed to skip
    the first solve.
    """
    if primary is None:
        primary = solve(lp, tol)
    if not primary.optimal:
        raise ValueError(f"primary problem is {primary.status}, not optimal")
    A = np.vstack([lp.constraint_matrix, lp.objective])
    b = np.append(lp.rhs, primary.value)
    stage2 = LinearProgram(np.asarray(secondary, dtype=float), A, b, sense2)
    sol = solve(stage2, tol)
    if sol.status == INFEASIBLE:
        raise InternalSolverError("optimal face reported empty in lexicographic stage")
    return sol


def check_solution(lp: LinearProgram, sol: LPSolution) -> dict:
    """Primal residual, duality gap and dual-feasibility violation of an optimal solution."""
    A, b, c = lp.constraint_matrix, lp.rhs, lp.objective
    residual = float(np.abs(A @ sol.primal - b).max(initial=0.0))
    gap = abs(float(c @ sol.primal) - float(b @ sol.duals))
    slack = c - sol.duals @ A
    if lp.sense == "maximize":
        slack = -slack
    return {
        "primal_residual": residual,
        "duality_gap": gap,
        "dual_violation": float(max(0.0, -slack.min(initial=0.0))),
        "complementarity": float(np.abs(slack * sol.primal).max(initial=0.0)),
    }
