"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class RollingQuantError(Exception):
    """Base class for all package errors."""


class ConfigError(RollingQuantError):
    """Invalid run or generator configuration."""


class DataError(RollingQuantError):
    """Base class for ingestion/validation problems."""


class ParseError(DataError):
    """Malformed input row; message names file, line and column."""


class ValidationError(DataError):
    """Dataset invariant violated; message names stock/date."""


class NumericError(RollingQuantError):
    """Base class for numeric/training failures."""


class TrainingError(NumericError):
    """Loss became non-finite during training."""


class StrategyError(NumericError):
    """A ranking strategy could not be computed."""


class RebalanceError(NumericError):
    """Portfolio could not be traded to targets."""
