"""Exception hierarchy shared by the library and the command line."""


class GPRJError(Exception):
    """Base class for all package errors."""


class ConfigError(GPRJError, ValueError):
    """Invalid hyperparameters, sampler settings or configuration file."""


class DataError(GPRJError, ValueError):
    """Base class for problems with survival data."""


class SchemaError(DataError):
    """A required column is missing from the input."""


class ParseError(DataError):
    """A cell could not be parsed; carries the 1-based data row number."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ValidationError(DataError):
    """Parsed data violates a model invariant."""


class NumericError(GPRJError, ArithmeticError):
    """A log-likelihood or acceptance ratio became non-finite."""


class ConvergenceError(GPRJError):
    """Chains failed the potential-scale-reduction gate."""
