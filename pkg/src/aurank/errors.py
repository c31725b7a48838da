"""Exception hierarchy; the CLI maps each class to an exit code."""


class AurankError(Exception):
    pass


class ConfigError(AurankError, ValueError):
    """Invalid configuration (exit code 2)."""


class DataError(AurankError, ValueError):
    """Malformed or inconsistent input data (exit code 3)."""


class NumericError(AurankError, ArithmeticError):
    """Non-finite values during training (exit code 4)."""
