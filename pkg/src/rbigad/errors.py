"""Exception types raised across the package.

Parse and IO problems derive from :class:`FormatError`; everything the
numerical pipeline can reject derives from :class:`RbigError` directly.
The CLI maps the first family to exit code 2 and the rest to 3.
"""


class RbigError(Exception):
    """Base class for all package errors."""


class DomainError(RbigError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class InsufficientSamplesError(RbigError, ValueError):
    pass


class DegenerateColumnError(RbigError, ValueError):
    """A column (or a whole sample set) has zero spread."""


class UnfittableError(RbigError, ValueError):
    pass


class DimensionMismatchError(RbigError, ValueError):
    pass


class NotPositiveDefiniteError(RbigError, ValueError):
    pass


class KindMismatchError(RbigError, TypeError):
    pass


class UndefinedCurveError(RbigError, ValueError):
    """Labels contain a single class, so ROC/PR curves do not exist."""


class NotRecordedError(RbigError, LookupError):
    pass


class FormatError(RbigError):
    """Base for file parsing failures."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class DimensionOverflowError(FormatError):
    pass


class ModelFormatError(FormatError):
    pass


class CsvParseError(FormatError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
