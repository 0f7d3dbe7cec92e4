"""Exception hierarchy shared by every module."""


class SparseBoundError(Exception):
    """Base class for all package errors."""


class DomainError(SparseBoundError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(DomainError):
    """An experiment configuration is malformed or inconsistent."""


class ResourceCapError(SparseBoundError):
    """A computation would exceed a configured size cap."""


class UnsupportedOperationError(SparseBoundError, TypeError):
    """The operation is not defined for this model or distribution."""
