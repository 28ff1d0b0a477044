"""Exception hierarchy for pmgeom.

Every error raised by the library derives from :class:`PmgeomError`, so
callers (including the CLI) can distinguish domain failures from genuine
bugs or I/O problems with a single except clause.
"""


class PmgeomError(Exception):
    """Base class for all pmgeom domain errors."""


class InvalidInputError(PmgeomError):
    """Input violates a documented precondition (shape, finiteness, range)."""


class NotPsdError(InvalidInputError):
    """Matrix expected to be positive semidefinite has a clearly negative eigenvalue."""


class InsufficientPointsError(InvalidInputError):
    """Too few points for the requested neighborhood size."""


class UndefinedCorrelationError(PmgeomError):
    """Pearson correlation is undefined for a constant sequence."""


class DegenerateManifoldError(PmgeomError):
    """A manifold has zero volume, so separation degree is undefined."""


class DegenerateNeighborhoodError(PmgeomError):
    """A point's neighborhood is too rank-deficient to define a tangent frame."""


class FitFailureError(PmgeomError):
    """The quadric normal equations could not be solved even with ridge."""


class UnreliableEstimateError(PmgeomError):
    """More than half the points of a manifold were skipped during curvature estimation."""


class InvalidCurvatureError(InvalidInputError):
    """A curvature vector entry is non-positive or non-finite."""


class InvalidScheduleError(InvalidInputError):
    """Loss schedule violates epoch >= 1 or tau > 1."""


class EmptyPoolError(PmgeomError):
    """Dequeue attempted on an empty feature pool."""


class IncompletePoolError(PmgeomError):
    """Pool snapshot requested while some class has no stored features."""


class InvalidStateError(PmgeomError):
    """Feature-pool protocol driven past its terminal epoch or otherwise out of order."""


class TrainingDivergedError(PmgeomError):
    """Training loss became non-finite. Carries the trace recorded so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
