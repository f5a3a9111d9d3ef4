"""Exception hierarchy shared by all securetag modules."""


class SecureTagError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SecureTagError, ValueError):
    """An argument lies outside the domain of an operation."""


class EmptyTraceError(SecureTagError, ValueError):
    """A trace would contain no samples."""


class SilentSegment(SecureTagError):
    """A segment has zero variance, so nothing can be separated from it."""


class CalibrationDegenerate(SecureTagError):
    """On-body and off-body calibration statistics cannot be told apart."""


class ConfigError(SecureTagError, ValueError):
    """Invalid configuration, topology or file contents."""
