"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific type that applies rather than a bare RuntimeError.
"""

from __future__ import annotations

__all__ = [
    "SparsemixError",
    "InvalidConfigError",
    "ResourceCapError",
    "DataError",
    "DegenerateInstanceError",
]


class SparsemixError(Exception):
    """Base class for package errors."""


class InvalidConfigError(SparsemixError, ValueError):
    """A configuration value is out of domain or inconsistent."""


class ResourceCapError(SparsemixError, RuntimeError):
    """An operation would exceed an explicit resource cap.

    Raised before any large allocation or enumeration starts; the message
    names the cap and, where one exists, the cheaper alternative.
    """


class DataError(SparsemixError, ValueError):
    """Input arrays contain non-finite entries or have inconsistent shapes."""


class DegenerateInstanceError(SparsemixError, RuntimeError):
    """A linear system required by an analysis is numerically singular."""
