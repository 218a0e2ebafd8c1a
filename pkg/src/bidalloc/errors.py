"""Exception types shared across the package."""


class ContractError(ValueError):
    """An input violated an operation's precondition (shape, range, emptiness)."""


class NumericError(ArithmeticError):
    """A computation produced NaN or infinity where a finite value was required."""


class ConfigError(ValueError):
    """A run configuration is invalid. The CLI maps this to a usage error."""
