"""Exception hierarchy shared across the package.

`DataError` covers input files and generated datasets, `ConfigError`
covers scenario/CLI validation. The CLI maps them to distinct exit codes.
"""


class RecmarketError(Exception):
    """Base class for all package errors."""


class DataError(RecmarketError):
    """A data file or generated dataset is malformed or unusable."""


class ConfigError(RecmarketError):
    """A configuration value violates a documented invariant."""


class TrainingError(RecmarketError):
    """Model training produced a non-finite intermediate."""
