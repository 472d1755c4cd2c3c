"""Exception types shared across the package."""


class BudgetExceededError(RuntimeError):
    """An operation would exceed a configured evaluation or enumeration budget."""


class NumericalAbortError(RuntimeError):
    """A numerical computation produced non-finite values and was aborted."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""
