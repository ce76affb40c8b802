"""Exception types shared across the package."""


class TsfError(Exception):
    """Base class for all package errors."""


class ConfigError(TsfError):
    """Invalid engine configuration; message names the offending field."""


class UsageError(TsfError):
    """Caller violated an API contract (role mismatch, bad argument)."""


class TrialCompleteError(TsfError):
    """Attempted to step a trial past its final frame."""


class InsufficientDataError(TsfError):
    """Not enough observed frames to run an inference."""


class TableKeyError(TsfError):
    """Unknown policy id looked up in a performance table."""


class DegenerateDataError(TsfError):
    """Input data carries no usable variance."""
