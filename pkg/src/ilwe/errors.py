"""Exception types shared across the package."""


class IlweError(Exception):
    """Base class for computation failures (CLI exit code 2)."""


class ParameterError(ValueError):
    """Invalid shapes or parameter values (CLI exit code 1)."""


class SingularOrIndefinite(IlweError):
    """A Gram or normal-equation matrix failed the positive-definiteness test."""


class DegenerateLastComponent(IlweError):
    """The last entry of the smallest singular vector vanished."""


class ConvergenceError(IlweError):
    """An iterative kernel ran out of its iteration budget."""


class AttemptBudgetExceeded(IlweError):
    """The rejection loop drew too many candidates for one sample."""


class TuneFailed(IlweError):
    """No rejection bound in range reached the requested rejection window."""

    def __init__(self, message, closest_rate=None, closest_value=None):
        super().__init__(message)
        self.closest_rate = closest_rate
        self.closest_value = closest_value
