"""Exception hierarchy shared by the library and the command line."""


class RelsecError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(RelsecError):
    """Input data violates a documented invariant.

    ``violations`` carries the individual findings so callers can report
    every problem at once instead of the first one.
    """

    exit_code = 2

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class ParseError(ValidationError):
    """A spec document could not be read as structured data."""


class UsageError(RelsecError):
    """A function was called outside its precondition."""

    exit_code = 2


class ConfigurationError(RelsecError):
    """Sizes, limits or options make the requested computation impossible."""

    exit_code = 3


class InternalAssertionError(RelsecError):
    """A self-check inside the library failed. Always a bug."""

    exit_code = 4
