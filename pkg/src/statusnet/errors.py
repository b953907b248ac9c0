"""Exception types shared across the package."""


class StatusNetError(Exception):
    """Base class for all package errors."""


class EmptyGraph(StatusNetError):
    pass


class FormatError(StatusNetError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, *, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class EmptyDataset(StatusNetError):
    pass


class ConfigError(StatusNetError):
    pass


class BudgetExceeded(StatusNetError):
    pass


class PartialLabels(StatusNetError):
    pass


class NumericalError(StatusNetError):
    pass


class DegenerateTraining(StatusNetError):
    pass


class ShapeError(StatusNetError, ValueError):
    pass


class ModelVersionError(StatusNetError):
    """Model file is corrupted or was written for a different feature set."""


class DegenerateNull(UserWarning):
    """Emitted when every shuffled statistic takes the same value."""
