"""Exception hierarchy.

Every error raised by the package derives from :class:`StrataError`, which is
itself a ``ValueError`` so callers that only care about bad input can catch
the builtin.
"""


class StrataError(ValueError):
    """Base class for all package errors."""


# design construction
class InvariantViolation(StrataError):
    pass


class NonPositiveCount(InvariantViolation):
    pass


class SampleExceedsStratum(InvariantViolation):
    pass


class CorrelationOutOfRange(InvariantViolation):
    pass


class InconsistentCovariance(InvariantViolation):
    pass


class DuplicateStratum(InvariantViolation):
    pass


class ZeroAuxMean(StrataError):
    pass


# point estimation
class ZeroSampleAuxMean(StrataError):
    pass


class ZeroDenominator(StrataError):
    pass


class DegenerateSlope(StrataError):
    pass


class StrataMismatch(StrataError):
    pass


class NonFiniteResult(StrataError):
    pass


# moment analysis
class UndefinedCorrelation(StrataError):
    pass


class ZeroTuning(StrataError):
    pass


class UncorrelatedStratum(StrataError):
    pass


class SingularSystem(StrataError):
    pass


# simulation
class InvalidSpec(StrataError):
    pass


class TooManySamples(StrataError):
    pass


class EmptyRange(StrataError):
    pass


# io
class MalformedHeader(StrataError):
    pass


class MalformedRow(StrataError):
    def __init__(self, message: str, line: int | None = None, column: str | None = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class SingletonStratum(StrataError):
    pass


class UnknownDataset(StrataError):
    pass
