"""Exception types shared across the package.

DomainError carries a short machine-readable token (stable across releases,
used by the CLI to build structured error objects) plus a human message.
"""

from __future__ import annotations


class LdpkitError(Exception):
    """Base class for package errors."""


class DomainError(LdpkitError):
    """A request that is mathematically out of domain for the given inputs.

    Parameters
    ----------
    token : str
        Stable identifier, e.g. ``"infeasible-constraints"``.
    message : str
        Human-readable detail.
    """

    def __init__(self, token: str, message: str):
        self.token = token
        super().__init__(f"{token}: {message}")


class ParseError(LdpkitError, ValueError):
    """Malformed textual input (distribution strings, model files).

    ``column`` is the 0-based position of the offending character where it
    is known, else None.
    """

    def __init__(self, message: str, column: int | None = None):
        self.column = column
        if column is not None:
            message = f"{message} (column {column})"
        super().__init__(message)
