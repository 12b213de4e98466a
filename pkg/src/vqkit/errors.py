"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its exit-code contract: usage/configuration
problems exit 1, data and format problems exit 2.
"""


class VqError(Exception):
    """Base class for all toolkit errors."""


class UsageError(VqError):
    """Caller passed inconsistent arguments (dimension mismatch, bad flags)."""


class ConfigError(UsageError):
    """Invalid configuration value (codebook size not a power of two, ...)."""


class DomainError(VqError):
    """Mathematically undefined request (centroid of an empty set, ...)."""


class FormatError(VqError):
    """Malformed or corrupt input data (bad magic, truncated payload, ragged CSV)."""


class InternalError(VqError):
    """Engine invariant violated; indicates a bug, not a user mistake."""
