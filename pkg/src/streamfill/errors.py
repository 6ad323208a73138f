"""Exception hierarchy shared by all streamfill modules."""


class StreamfillError(Exception):
    """Base class; the CLI turns these into a machine-readable error line."""


class EmptyIntersection(StreamfillError):
    pass


class ForecastGap(StreamfillError):
    pass


class DegenerateSplit(StreamfillError):
    pass


class IndexOutOfRange(StreamfillError, IndexError):
    pass


class DegenerateVariance(StreamfillError, ValueError):
    pass


class DegenerateMean(StreamfillError, ValueError):
    pass


class UnimputedCell(StreamfillError):
    pass


class InsufficientSamples(StreamfillError, ValueError):
    pass


class UnknownStation(StreamfillError, KeyError):
    pass


class NoCompleteRows(StreamfillError):
    pass


class InsufficientRows(StreamfillError):
    pass


class NonConvergence(StreamfillError):
    pass


class CholeskyFailure(StreamfillError):
    pass


class DimensionMismatch(StreamfillError, ValueError):
    pass


class NoCompleteTrainingRows(StreamfillError):
    pass


class InvalidConfig(StreamfillError, ValueError):
    pass


class ParseError(StreamfillError):
    def __init__(self, line, column, reason):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column}: {reason}")


class NonMonotoneDates(StreamfillError):
    pass
