"""Exception hierarchy. Each class carries the CLI exit code for its category."""


class LineSourceError(Exception):
    exit_code = 1


class ValidationError(LineSourceError, ValueError):
    exit_code = 3


class NetworkParseError(ValidationError):
    def __init__(self, message, lineno=None):
        super().__init__(message)
        self.lineno = lineno


class LocationError(LineSourceError, ValueError):
    exit_code = 3


class SingularEvaluationError(LineSourceError, ArithmeticError):
    """A kernel was evaluated on (or within the floor radius of) the source set."""

    exit_code = 4

    def __init__(self, message, segment=None):
        super().__init__(message)
        self.segment = segment


class SolverError(LineSourceError, RuntimeError):
    exit_code = 5


class ConvergenceError(SolverError):
    pass


class ConsistencyError(LineSourceError, RuntimeError):
    """Manufactured data failed a preflight check."""

    exit_code = 6
