"""Exception hierarchy shared across the package."""


class CuganError(Exception):
    """Base class for all package errors."""


class ConfigError(CuganError, ValueError):
    """Invalid or inconsistent configuration."""


class InvalidScoreError(CuganError, ValueError):
    """Raw difficulty scores that cannot be normalized (non-finite or empty)."""


class UnsupportedSourceError(CuganError, ValueError):
    """A score source that cannot be used with the given dataset."""


class DegenerateDistributionError(CuganError, ValueError):
    """Sampling weights sum to zero, so no categorical distribution exists."""


class DatasetError(CuganError, ValueError):
    """Dataset too small, ragged, or not parseable."""


class MissingMetadataError(CuganError, ValueError):
    """An operation needs synthetic-mixture metadata the dataset does not carry."""


class StaleCacheError(CuganError, RuntimeError):
    """A forward cache was used after the network it came from changed."""


class DivergedTrainingError(CuganError, RuntimeError):
    """A loss or network output became non-finite during training.

    ``partial_log`` holds the rows logged before the failure, when available.
    """

    def __init__(self, message, partial_log=None, iteration=None):
        super().__init__(message)
        self.partial_log = partial_log
        self.iteration = iteration
