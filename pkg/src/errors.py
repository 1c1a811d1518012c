"""
Error kinds shared by every module, each carrying its CLI exit code
"""


class DayflowError(Exception):
    """Base class for all errors raised by the library"""

    exit_code = 1


class InvalidArgument(DayflowError, ValueError):
    """Arguments are malformed or belong to different groups"""

    exit_code = 2


class UnsupportedOperation(DayflowError, NotImplementedError):
    """Operation is not available for this kind of group or semigroup"""

    exit_code = 2


class PreconditionViolation(DayflowError, ValueError):
    """A documented precondition does not hold (e.g. an unbounded orbit)"""

    exit_code = 2


class ResourceLimit(DayflowError):
    """Enumeration would exceed the configured cap"""

    exit_code = 3


class SolverError(DayflowError, RuntimeError):
    """The LP engine failed to produce a usable solution"""

    exit_code = 1

    def __init__(self, message: str, status: str = 'error'):
        super().__init__(message)
        self.status = status
