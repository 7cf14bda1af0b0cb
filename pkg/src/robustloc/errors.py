"""Exception hierarchy shared by every module of the package."""


class LocalizationError(Exception):
    """Base class for all errors raised by :mod:`robustloc`."""


class SolverFailure(LocalizationError):
    """A numerical kernel failed to converge."""


class EmptyNullSpaceError(LocalizationError):
    pass


class RankDeficientError(LocalizationError):
    pass


class DegenerateColumnError(LocalizationError):
    pass


class DomainError(LocalizationError, ValueError):
    """An argument is outside the domain of the operation."""


class ShapeError(LocalizationError, ValueError):
    pass


class DegenerateConfigurationError(LocalizationError):
    """Anchors are affinely dependent (rank of the trilateration matrix < r)."""


class AugmentedRankError(LocalizationError):
    """The all-ones vector lies in the column space of the anchor matrix."""


class InsufficientAnchorsError(LocalizationError):
    """Robust recovery needs strictly more than r + 2 anchors."""


class SamplingExhaustedError(LocalizationError):
    """Rejection sampling could not place all nodes within the attempt budget."""


class ExperimentAborted(LocalizationError):
    pass


class ReportIOError(LocalizationError, OSError):
    pass
