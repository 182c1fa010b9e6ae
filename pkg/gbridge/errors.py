"""Exception hierarchy shared by the library and the command line."""


class BridgeError(Exception):
    """Base class for every error raised by gbridge."""


class InvalidArgumentError(BridgeError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedError(BridgeError):
    """The requested combination of model and operation is not available."""


class NumericalDegeneracyError(BridgeError):
    """A matrix needed by the computation is numerically singular."""

    def __init__(self, message, minor=None):
        super().__init__(message)
        self.minor = minor


class LinearDependenceError(NumericalDegeneracyError):
    """The conditioning functionals are linearly dependent."""


class DegenerateConditioningError(NumericalDegeneracyError):
    """A Gram node or conditioning pivot is below the degeneracy floor."""


class ConfigError(BridgeError):
    """A configuration file does not match its schema."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
