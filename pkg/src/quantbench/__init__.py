"""Quantization and bit-depth benchmarks for logistic regression."""

__version__ = "0.1.0"

from .core import Matrix, Precision, as_labels, cast, column_min_max  # noqa: E402
from .errors import QuantBenchError  # noqa: E402

__all__ = [
    "Matrix",
    "Precision",
    "QuantBenchError",
    "as_labels",
    "cast",
    "column_min_max",
]
