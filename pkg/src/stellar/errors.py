"""Exception hierarchy shared by all stellar modules."""


class StellarError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(StellarError, ValueError):
    """Mode count or mode index mismatch."""


class CapacityError(StellarError, MemoryError):
    """A tensor would exceed the configured entry budget."""


class ParameterRangeError(StellarError, ValueError):
    """A physical parameter lies outside its allowed range."""


class SpecError(StellarError, ValueError):
    """A state specification could not be parsed or is degenerate."""


class DegenerateProjection(StellarError, ArithmeticError):
    """Projection onto a stratum set carried (numerically) zero weight."""


class TruncationError(StellarError, ArithmeticError):
    """Mass was pushed beyond the Fock cutoff.

    The measured leak is kept on ``leak`` so callers can decide to escalate.
    """

    def __init__(self, message, leak=float("nan")):
        super().__init__(message)
        self.leak = leak


class PrecisionError(StellarError, ArithmeticError):
    """A quadrature did not converge on refinement."""


class InfeasibleOptimization(StellarError, RuntimeError):
    """No start produced a feasible objective evaluation."""
