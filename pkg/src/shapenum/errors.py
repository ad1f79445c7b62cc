"""Exception types shared across the analyzer."""

from __future__ import annotations


class ShapenumError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ShapenumError):
    """Malformed source text; carries the offending position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class DefsError(ShapenumError):
    """Malformed or unsupported inductive-definition file."""


class UnknownFieldError(ShapenumError):
    """A field name was used without a declaring malloc or definition."""

    def __init__(self, name: str):
        super().__init__(f"unknown field {name!r}")
        self.name = name


class InternalError(ShapenumError):
    """Contract violation inside the analyzer (a bug, not a program error)."""


class ConcreteRunError(ShapenumError):
    """Runtime error raised by the concrete interpreter.

    ``kind`` is one of: null-deref, unmapped-address, invalid-free, assert.
    """

    def __init__(self, kind: str, label: int, detail: str = ""):
        msg = f"runtime error at label {label}: {kind}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.kind = kind
        self.label = label
        self.detail = detail
