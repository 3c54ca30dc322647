"""Tree-like benchmark model.

Each step is the martingale coupling that minimizes the deviation
``|next - current|**p`` between consecutive marginals; the two steps are
then glued Markovianly.  The result is one particular martingale with the
given marginals, so its price always lies between the exact bounds.
"""
from __future__ import annotations

from .config import Tolerances, resolve
from .costs import CostSpec, deviation
from .couplings import Coupling3
from .mot import solve_mot2
from .structure import markov_glue


def tree_coupling(mx, my, mz, p: float, tol: Tolerances | None = None) -> Coupling3:
    tol = resolve(tol)
    if p <= 0:
        raise ValueError("deviation exponent must be positive")
    step1 = solve_mot2(mx, my, deviation(p), "minimize", tol)
    step2 = solve_mot2(my, mz, deviation(p), "minimize", tol)
    return markov_glue(step1.coupling, step2.coupling, tol)


def tree_price(mx, my, mz, p: float, cost: CostSpec, eps: float,
               tol: Tolerances | None = None) -> float:
    """Price of ``c1 + c2 + eps * c3`` under the glued minimal-deviation martingale."""
    coupling = tree_coupling(mx, my, mz, p, tol)
    return float((coupling.mass * cost.with_epsilon(eps).tensor(*coupling.grids)).sum())
