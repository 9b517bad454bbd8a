"""Exception hierarchy shared by all presslide modules."""


class PresslideError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PresslideError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class SingularityError(PresslideError, ArithmeticError):
    """A quantity hit a singular configuration (zero load, gimbal lock, ...)."""


class GimbalLockError(SingularityError):
    """Euler pitch too close to +-pi/2 for the rate mapping to be invertible."""


class ConfigError(PresslideError, ValueError):
    """A configuration file or block is missing keys or holds invalid values."""


class FitError(PresslideError, ValueError):
    """An identification fit cannot be performed on the given data."""


class NotFittedError(PresslideError, RuntimeError):
    """An estimator method that requires a completed fit was called too early."""


class SolverError(PresslideError, RuntimeError):
    """The trajectory optimizer failed irrecoverably."""
