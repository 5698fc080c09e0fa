"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid scenario, noise or optimizer configuration."""


class DatasetFormatError(ValueError):
    """A dataset file or array violates the dataset schema."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class IrregularSpacingError(DatasetFormatError):
    """Timestamps are not strictly increasing with a constant step."""


class MissingCellError(DatasetFormatError):
    """A required cell is empty or unparsable."""


class RankDeficiencyError(ValueError):
    """Design matrix columns are linearly dependent."""

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class MetricUndefinedError(ValueError):
    """A reference sample makes the percentage error undefined."""
