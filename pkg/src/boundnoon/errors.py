"""Exception hierarchy shared by the library and the CLI."""


class BoundNoonError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(BoundNoonError, ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class NumericalError(BoundNoonError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy result (CLI exit code 3)."""


class RegimeError(NumericalError):
    """The strong-coupling effective model is not valid for the given parameters."""


class BracketError(NumericalError):
    """An optimizer or root finder could not bracket its target."""


class BudgetError(NumericalError):
    """A dense representation would exceed the memory budget."""
