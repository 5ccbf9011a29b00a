"""Exception hierarchy. Each family maps to one CLI exit code."""

from __future__ import annotations


class PemError(Exception):
    """Base class for every error raised by this package."""

    category = "internal"
    exit_code = 4


class UsageError(PemError):
    category = "usage"
    exit_code = 1


class IoFailure(PemError):
    category = "io"
    exit_code = 2


class DataError(PemError, ValueError):
    category = "data"
    exit_code = 3


class EmptyCode(DataError):
    pass


class MalformedCode(DataError):
    pass


class InvalidLevel(DataError):
    pass


class MissingColumn(DataError):
    pass


class EmptyMatrix(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class InvalidPopulation(DataError):
    pass


class InvalidDf(DataError):
    pass


class TooFewSamples(DataError):
    pass


class LengthMismatch(DataError):
    pass


class InvalidConfig(DataError):
    pass
