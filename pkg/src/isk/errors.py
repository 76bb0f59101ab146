"""Exception types shared across the package."""


class ISKError(Exception):
    """Base class for errors raised by this package."""


class DomainError(ISKError, ValueError):
    """An argument lies outside the domain of the operation."""


class SizeError(ISKError, ValueError):
    """A system is too large for the requested engine."""


class UnsupportedError(ISKError, ValueError):
    """The requested engine cannot handle this kernel or geometry."""


class DegenerateError(ISKError, ValueError):
    """The requested quantity is undefined for these parameters."""


class ConvergenceError(ISKError, RuntimeError):
    """An iteration did not converge; ``trajectory`` holds the iterates."""

    def __init__(self, message, trajectory=()):
        super().__init__(message)
        self.trajectory = list(trajectory)
