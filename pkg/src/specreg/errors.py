"""Exception types raised across the package."""


class SpecRegError(Exception):
    """Base class for all package errors."""


class ValidationError(SpecRegError, ValueError):
    """An argument or object violates a stated precondition."""


class DomainError(ValidationError):
    """A value lies outside the domain of an index function or filter."""


class RangeError(ValidationError):
    """A target value lies outside the range of a monotone function."""


class DataError(SpecRegError, ValueError):
    """Input data contain non-finite values."""


class UnsupportedOperationError(SpecRegError):
    """The operation is not defined for the given kernel or object."""


class PreconditionError(ValidationError):
    """A probabilistic lemma was invoked outside its admissible regime."""


class ExperimentError(SpecRegError):
    """A convergence experiment could not be completed."""
