"""Exception types raised across the package."""


class MOTError(Exception):
    """Base class for all package errors."""


class NumericalFailure(MOTError):
    """The simplex could not make progress (tiny pivots, iteration cap hit)."""


class InternalSolverError(MOTError):
    """A state that should be impossible by construction was reached."""


class ConvexOrderViolation(MOTError):
    """Marginals are not in increasing convex order, so no martingale coupling exists."""


class ConditionalConvexOrderViolation(ConvexOrderViolation):
    def __init__(self, x_atom, message=None):
        self.x_atom = x_atom
        super().__init__(message or f"conditionals at x={x_atom!r} are not in convex order")


class InfeasibleProblem(MOTError):
    def __init__(self, message, y_atom=None):
        self.y_atom = y_atom
        super().__init__(message)


class MarginalMismatch(MOTError):
    """Two couplings that must share a marginal do not."""


class DegenerateBracket(MOTError):
    """Barycenter does not lie strictly between the two support points."""


class SupportViolation(MOTError):
    """A measure has atoms outside the interval required by a construction."""


class TooFewStrikes(MOTError):
    pass


class AllMassClipped(MOTError):
    """Every second difference of the call chain was negative."""


class RepairInfeasible(MOTError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
