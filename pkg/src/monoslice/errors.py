"""Shared error base so the CLI can report every pipeline failure uniformly."""


class MonosliceError(Exception):
    """Base class for all errors raised by this package."""


class NoServices(MonosliceError):
    """Raised when an operation needs at least one service and got none."""
