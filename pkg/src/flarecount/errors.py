"""Exception hierarchy shared by every module."""


class FlareCountError(Exception):
    pass


class DomainError(FlareCountError, ValueError):
    """Argument outside the domain of an operation (bad time, bad grid)."""


class ParseError(FlareCountError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InapplicableError(FlareCountError):
    """An estimator's precondition is not met by the table."""

    def __init__(self, estimator, reason):
        self.estimator = estimator
        self.reason = reason
        super().__init__(f"{estimator}: {reason}")


class DegenerateInputError(InapplicableError):
    """The input sits on a boundary where the estimate diverges or vanishes."""


class EmptyTableError(InapplicableError):
    pass


class NumericalError(FlareCountError, ArithmeticError):
    pass


class BracketError(NumericalError):
    pass


class QuadratureError(NumericalError):
    def __init__(self, message, estimate, error):
        self.estimate = estimate
        self.error = error
        super().__init__(f"{message} (best estimate {estimate!r}, error {error!r})")


class LogOfZeroError(FlareCountError, ValueError):
    pass
