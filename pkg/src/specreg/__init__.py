"""Spectral regularization for least-squares learning under general source conditions."""

from . import filters, harness, index_fn, operators, synthetic, theory
from .errors import (
    DataError,
    DomainError,
    ExperimentError,
    PreconditionError,
    RangeError,
    SpecRegError,
    UnsupportedOperationError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "filters", "harness", "index_fn", "operators", "synthetic", "theory",
    "DataError", "DomainError", "ExperimentError", "PreconditionError", "RangeError",
    "SpecRegError", "UnsupportedOperationError", "ValidationError",
]
