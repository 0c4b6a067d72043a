"""Exception hierarchy.

Errors fall into three families that the command line maps onto exit codes:
``UsageError`` (1), ``DataError`` (2) and ``NumericalError`` (3).
"""


class FactorCovError(Exception):
    """Base class for every error raised by this package."""


class UsageError(FactorCovError, ValueError):
    """Invalid parameter or configuration value."""


class DataError(FactorCovError, ValueError):
    """Malformed or inconsistent input data."""


class NumericalError(FactorCovError, ArithmeticError):
    """A computation is undefined or numerically unreliable for the given input."""


# data errors


class DimensionMismatch(DataError):
    pass


class TooFewObservations(DataError):
    pass


class NotSymmetric(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class MissingColumn(DataError):
    def __init__(self, column, path=None):
        self.column = column
        self.path = path
        msg = f"missing column {column!r}"
        if path is not None:
            msg = f"{path}: {msg}"
        super().__init__(msg)


class EmptyIntersection(DataError):
    pass


class MissingMoment(DataError):
    pass


# numerical errors


class SingularMatrix(NumericalError):
    def __init__(self, message, condition_number=None):
        self.condition_number = condition_number
        if condition_number is not None:
            message = f"{message} (condition number ~ {condition_number:.3e})"
        super().__init__(message)


class SingularFactorGram(SingularMatrix):
    pass


class SingularFactorCov(SingularMatrix):
    pass


class ZeroResidualVariance(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NotPSD(NumericalError):
    pass


class DegenerateFrontier(NumericalError):
    pass


class DegenerateInverse(NumericalError):
    pass


class ShortPosition(NumericalError):
    """A no-short check found negative weights."""


class NoConvergence(NumericalError):
    pass


class RejectionStall(NumericalError):
    pass


# usage errors


class InvalidTarget(UsageError):
    pass
