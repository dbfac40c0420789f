"""Exception hierarchy.

Validation problems derive from :class:`ValidationError` (a ``ValueError``),
so callers that only care about "bad input" can catch one type. The CLI maps
these families onto exit codes.
"""

from __future__ import annotations


class ChainMatchError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ChainMatchError, ValueError):
    pass


# -- trips / chains ----------------------------------------------------------

class RoundTripRejected(ValidationError):
    pass


class NonCausalSlots(ValidationError):
    pass


class SlotOutOfHorizon(ValidationError):
    pass


class StationOutOfRange(ValidationError):
    pass


class ChainLengthOutOfDepth(ValidationError):
    pass


class DepthOutOfRange(ValidationError):
    pass


class PoolOverflow(ChainMatchError):
    pass


# -- ingestion ---------------------------------------------------------------

class MissingColumn(ValidationError):
    pass


class UnparsableRow(ValidationError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class EmptyFile(ValidationError):
    pass


class TimestampOutsideWindow(ValidationError):
    pass


class InvalidDimensions(ValidationError):
    pass


class SchemaVersionMismatch(ValidationError):
    pass


class IoError(ChainMatchError, OSError):
    pass


# -- pricing -----------------------------------------------------------------

class AlphaOutOfOpenInterval(ValidationError):
    pass


class AlphaOutOfRange(ValidationError):
    pass


class CostFactorOutOfRange(ValidationError):
    pass


class ThresholdAboveBase(ValidationError):
    pass


class MissingPrice(ValidationError):
    pass


# -- matcher -----------------------------------------------------------------

class PoolTooLargeForOracle(ChainMatchError):
    pass
