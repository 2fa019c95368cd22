"""Exception types shared across the package."""


class DrivenLindbladError(Exception):
    """Base class for all errors raised by this package."""


class NonSquare(DrivenLindbladError, ValueError):
    pass


class NonFinite(DrivenLindbladError, ValueError):
    pass


class DimensionMismatch(DrivenLindbladError, ValueError):
    pass


class Singular(DrivenLindbladError, ArithmeticError):
    pass


class NonConvergence(DrivenLindbladError, ArithmeticError):
    pass


class StepUnderflow(DrivenLindbladError, ArithmeticError):
    """Adaptive step size fell below the floating point floor at ``t``."""

    def __init__(self, t, h):
        super().__init__(f"step size {h:.3e} underflowed at t = {t:.6g}")
        self.t = t
        self.h = h


class DegenerateSteadyState(DrivenLindbladError):
    pass


class NoSteadyState(DrivenLindbladError):
    pass


class ClosureOverflow(DrivenLindbladError):
    pass


class XiSingular(DrivenLindbladError, ArithmeticError):
    """Wei-Norman frame matrix lost invertibility (global breakdown of the ansatz)."""

    def __init__(self, t, condition):
        super().__init__(f"Wei-Norman xi matrix singular at t = {t:.6g} (cond = {condition:.3e})")
        self.t = t
        self.condition = condition


class NoBulk(DrivenLindbladError):
    pass


class MissingChannel(DrivenLindbladError, KeyError):
    pass


class ParseError(DrivenLindbladError):
    def __init__(self, message, line=None, field=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        prefix = f"{', '.join(loc)}: " if loc else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class ValidationError(DrivenLindbladError):
    def __init__(self, field, constraint):
        super().__init__(f"{field}: {constraint}")
        self.field = field
        self.constraint = constraint


class BranchCrossing(UserWarning):
    """Continuity tracking of an adiabatic branch passed too close to an exceptional point."""
