"""Model-free price bounds for multi-period claims via discrete martingale optimal transport."""
from .config import DEFAULTS, Tolerances
from .costs import CostSpec, cost_from_expressions, deviation, straddle_basket, third_moment_cross
from .couplings import Coupling2, Coupling3, disintegrate
from .errors import (AllMassClipped, ConditionalConvexOrderViolation, ConvexOrderViolation,
                     DegenerateBracket, InfeasibleProblem, InternalSolverError, MarginalMismatch,
                     MOTError, NumericalFailure, RepairInfeasible, SupportViolation,
                     TooFewStrikes)
from .lp_core import LinearProgram, LPSolution, solve, solve_lexicographic
from .market import OptionChain, bl_density, call_prices, repair_chain
from .measure import DiscreteMeasure, convex_order_leq, mean, potential
from .mot import (DualCertificate, solve_fixed_barycenter, solve_mot2, solve_mot3,
                  solve_overlapping)
from .perturb import (BoundCurve, BoundsReport, bound_curve, derivative_at_zero,
                      first_order_bounds)
from .structure import (cw_monotone_check, left_monotone_check, markov_glue, singleton_coupling,
                        strassen_glue, two_point_decompose, uniqueness_probe)
from .tree_model import tree_coupling, tree_price

__all__ = [
    "DEFAULTS", "Tolerances", "CostSpec", "cost_from_expressions", "deviation",
    "straddle_basket", "third_moment_cross", "Coupling2", "Coupling3", "disintegrate",
    "AllMassClipped", "ConditionalConvexOrderViolation", "ConvexOrderViolation",
    "DegenerateBracket", "InfeasibleProblem", "InternalSolverError", "MarginalMismatch",
    "MOTError", "NumericalFailure", "RepairInfeasible", "SupportViolation", "TooFewStrikes",
    "LinearProgram", "LPSolution", "solve", "solve_lexicographic", "OptionChain", "bl_density",
    "call_prices", "repair_chain", "DiscreteMeasure", "convex_order_leq", "mean", "potential",
    "DualCertificate", "solve_fixed_barycenter", "solve_mot2", "solve_mot3",
    "solve_overlapping", "BoundCurve", "BoundsReport", "bound_curve", "derivative_at_zero",
    "first_order_bounds", "cw_monotone_check", "left_monotone_check", "markov_glue",
    "singleton_coupling", "strassen_glue", "two_point_decompose", "uniqueness_probe",
    "tree_coupling", "tree_price",
]

__version__ = "0.1.0"
