"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class IgmdsrError(Exception):
    exit_code = 1


class InputError(IgmdsrError):
    """Unreadable, malformed or mis-shaped input data."""

    exit_code = 1


class ShapeError(IgmdsrError, ValueError):
    """Operand shapes do not conform."""

    exit_code = 2


class ParameterError(IgmdsrError, ValueError):
    """A configuration value is outside its valid range."""

    exit_code = 2


class DomainError(IgmdsrError, ValueError):
    """Input values violate a mathematical precondition (e.g. negativity)."""

    exit_code = 2


class NumericError(IgmdsrError, ArithmeticError):
    """Non-finite values appeared during computation.

    ``log`` holds the partial training log when raised from :func:`fit`.
    """

    exit_code = 3

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log
