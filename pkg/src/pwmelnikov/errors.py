"""Exception hierarchy shared by all modules."""


class MelnikovError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MelnikovError, ValueError):
    """A point lies outside the domain where a quantity is defined."""


class EnergyRangeError(MelnikovError, ValueError):
    """Energy level outside the open period-annulus interval."""


class DegenerateOvalError(EnergyRangeError):
    """Energy within the guard band of the center or the separatrix."""


class AccuracyError(MelnikovError, ArithmeticError):
    """Quadrature or refinement failed to reach the requested tolerance."""

    def __init__(self, message: str, estimate: float | None = None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class UnsupportedIndexError(MelnikovError, ValueError):
    """An Abelian integral index the recurrences cannot reach or reduce."""


class PreconditionError(MelnikovError, ValueError):
    """A documented precondition of an operation was violated."""


class SingularLocusError(PreconditionError):
    """Evaluation too close to a singular point of a Picard-Fuchs relation."""


class RatioDenominatorError(PreconditionError):
    """The denominator integral of a Riccati ratio is (numerically) zero."""


class InvariantViolation(MelnikovError, AssertionError):
    """A mathematical property claimed to hold was observed to fail."""


class SimulationError(MelnikovError, RuntimeError):
    """Trajectory integration failed (escape, event cap, step underflow)."""
