"""Exception hierarchy for condimp."""


class CondimpError(Exception):
    """Base exception for condimp errors."""

    pass


class InvalidParameterError(CondimpError, ValueError):
    """Raised when an argument violates a documented precondition."""

    pass


class NumericalError(CondimpError, ArithmeticError):
    """Raised when a factorization or linear solve fails."""

    pass


class ConfigError(CondimpError):
    """Raised when a configuration file or override cannot be used."""

    pass


class UsageError(CondimpError):
    """Raised for inconsistent command-line requests."""

    pass
