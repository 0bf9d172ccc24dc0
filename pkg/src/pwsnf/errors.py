"""Exception types shared across the package."""


class PwsnfError(Exception):
    """Base class for all package errors."""


class InputError(PwsnfError):
    """Malformed input: bad polynomial text, unknown symbol, bad TOML."""


class PolySyntaxError(InputError):
    def __init__(self, message, token_index=None, column=None):
        super().__init__(message)
        self.token_index = token_index
        self.column = column


class PreconditionError(PwsnfError):
    """A documented precondition of an operation does not hold."""


class ResourceBudgetError(PwsnfError):
    """A computation exceeded its configured step budget."""


class EvaluationError(PwsnfError):
    """An exact evaluation is impossible for the given data."""


class OracleError(PwsnfError):
    """Numeric integration failed (escape, step budget, ambiguous fit)."""
