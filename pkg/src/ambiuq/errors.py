"""Exception types shared across the package."""


class UQError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(UQError):
    """Malformed input: bad distribution, mismatched class lists, bad record."""


class SupportError(ValidationError):
    """Support mismatch between distributions; align them first."""


class DomainError(UQError):
    """Argument outside the mathematical domain of a function."""


class DegenerateInputError(UQError):
    """Structurally valid input on which the requested quantity is undefined."""


class EstimatorUnavailableError(UQError):
    """The record lacks the data a particular estimator requires."""


class ConfigurationError(UQError):
    """A simulation or pipeline configuration that cannot be satisfied."""
