"""Exception hierarchy shared by all modules."""


class RandCompError(Exception):
    """Base class for every error raised by this package."""


class NormalizationError(RandCompError, ValueError):
    """A probability row is negative or does not sum to one."""


class StructureError(RandCompError, ValueError):
    """Dangling reference, duplicate id or incomplete table in a network."""


class ShapeMismatch(RandCompError, ValueError):
    pass


class EnumerationCapExceeded(RandCompError):
    """The network is too large to evaluate exactly."""


class SourceNotFound(RandCompError, KeyError):
    pass


class InvalidSplit(RandCompError, ValueError):
    pass


class InvalidParams(RandCompError, ValueError):
    pass


class InvalidRange(RandCompError, ValueError):
    pass


class BoundOverflow(RandCompError, OverflowError):
    """A bound does not fit in a signed 64-bit integer."""


class SearchCapExceeded(RandCompError):
    pass


class AttemptsExhausted(RandCompError):
    """No sampling met the tolerance within the attempt budget.

    ``best_deviation`` is the smallest deviation seen over all attempts and
    ``reports`` holds the reports of stages completed before the failure
    (the failing stage's report is last).
    """

    def __init__(self, message, best_deviation, reports=()):
        super().__init__(message)
        self.best_deviation = best_deviation
        self.reports = list(reports)
