"""Exception types raised by the samplers and transformations."""


class TMCMCError(Exception):
    """Base class for all package errors."""


class DomainError(TMCMCError, ValueError):
    """An input lies outside the domain of a transformation or distribution."""


class NonFiniteError(TMCMCError, FloatingPointError):
    """A target density or gradient evaluated to NaN (or +inf)."""


class ChainError(TMCMCError, RuntimeError):
    """A kernel failed while a chain was running.

    Attributes:
        iteration: zero-based index of the failing iteration.
    """

    def __init__(self, iteration: int, cause: BaseException):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"iteration {iteration}: {type(cause).__name__}: {cause}")
