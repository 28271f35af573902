"""Exception types raised by the engine."""


class FinslerLabError(Exception):
    """Base class for all engine errors."""


class DomainError(FinslerLabError):
    """A point lies outside the declared chart domain or a family's range."""


class NonPositiveDefinite(FinslerLabError):
    """A matrix that must be positive definite is not."""


class SingularEvaluation(FinslerLabError):
    """Division by a vanishing quantity during evaluation."""


class DegenerateFit(FinslerLabError):
    """The basis of a scalar least-squares fit vanishes."""


class EmptyTrace(FinslerLabError):
    """A geodesic trace has fewer than two points."""


class SpecError(FinslerLabError):
    """A metric specification document is malformed."""
