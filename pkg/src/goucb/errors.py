"""Exception types raised across the package."""


class InputError(ValueError):
    """Bad argument: wrong shape, out-of-range value, violated precondition."""


class ConfigError(ValueError):
    """Inconsistent or incomplete run configuration."""


class StateError(RuntimeError):
    """An object was used in a state that breaks its contract."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values or a failed factorization."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
