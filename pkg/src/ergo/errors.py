"""Exception hierarchy shared by every module; the CLI maps each class to an exit code."""


class ErgoError(Exception):
    exit_code = 1


class InputError(ErgoError, ValueError):
    """Arguments violate a documented precondition."""

    exit_code = 2


class CapacityError(ErgoError):
    """Instance is larger than an exhaustive routine is allowed to handle."""

    exit_code = 3


class NumericError(ErgoError, ArithmeticError):
    """A series, root finder or bracket search failed to converge."""

    exit_code = 3


class RejectionFailure(ErgoError):
    """Rejection sampling gave up after its try budget."""

    exit_code = 3

    def __init__(self, message, tries, successes=0):
        super().__init__(message)
        self.tries = tries
        self.successes = successes

    @property
    def empirical_fraction(self):
        return self.successes / self.tries if self.tries else 0.0


class OracleViolation(ErgoError):
    exit_code = 4


class ConfigError(InputError):
    """Experiment configuration is missing, malformed or out of range."""

    exit_code = 2


class IOFailure(ErgoError, OSError):
    exit_code = 5
