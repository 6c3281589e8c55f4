"""Exception hierarchy shared by every quantbench module."""


class QuantBenchError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(QuantBenchError, ValueError):
    """Matrix or vector dimensions do not line up."""


class CastRangeError(QuantBenchError, ValueError):
    """A value cannot be represented in the target precision."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class DataError(QuantBenchError, ValueError):
    """Non-finite or otherwise unusable feature values."""


class LabelError(QuantBenchError, ValueError):
    """Labels are not binary {0, 1}."""


class InsufficientDataError(QuantBenchError, ValueError):
    pass


class ParameterError(QuantBenchError, ValueError):
    """A transform or model parameter is out of its valid range."""


class StratificationError(QuantBenchError, ValueError):
    pass


class ClockError(QuantBenchError, RuntimeError):
    pass


class ConfigError(QuantBenchError, ValueError):
    """Malformed experiment config. ``key`` names the offending field."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DatasetError(QuantBenchError, ValueError):
    """CSV ingestion failure (missing file, header, target column...)."""


class ReportError(QuantBenchError, ValueError):
    pass


class CellError(QuantBenchError, RuntimeError):
    """A benchmark cell failed; wraps the underlying stage error."""

    def __init__(self, technique, precision, stage, cause):
        self.technique = technique
        self.precision = precision
        self.stage = stage
        self.cause = cause
        super().__init__(
            f"cell ({technique}, {precision}) failed at stage '{stage}': {cause}"
        )
