"""Numerical tolerances and worker settings shared by every module.

Functions that accept ``tol=None`` fall back to :data:`DEFAULTS`.  The CLI
builds a modified copy with :func:`dataclasses.replace` rather than mutating
the defaults.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    general: float = 1e-9           # convex order, mean equality, marginal checks
    merge: float = 1e-12            # atoms closer than this are merged
    weight_sum: float = 1e-12       # |sum(weights) - 1|
    pivot: float = 1e-11            # smallest acceptable simplex pivot
    abs_cmp: float = 1e-9           # hybrid comparison: abs_cmp + rel_cmp * scale
    rel_cmp: float = 1e-7
    martingale: float = 1e-8
    support_floor: float = 1e-10    # masses below this count as absent in checkers
    mass_floor: float = 0.0         # per-y subproblems below this weight are skipped

    def hybrid(self, scale: float) -> float:
        return self.abs_cmp + self.rel_cmp * abs(scale)


DEFAULTS = Tolerances()


def resolve(tol: Tolerances | None) -> Tolerances:
    return DEFAULTS if tol is None else tol


def worker_count() -> int:
    """Worker cap from ``MOT_THREADS``; 1 (serial) when unset or invalid."""
    try:
        n = int(os.environ.get("MOT_THREADS", "1"))
    except ValueError:
        return 1
    return max(1, n)


def ordered_map(fn, items):
    """Map ``fn`` over ``items``, possibly in threads, returning results in input order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
