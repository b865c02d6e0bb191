"""Exception types shared across the package.

Every error carries a short machine-readable category so the CLI can emit
structured JSON on stderr and map categories to exit codes.
"""

from __future__ import annotations


class CidsegError(Exception):
    """Base class; `category` feeds the CLI error JSON."""

    category = "error"

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail

    def to_json_dict(self) -> dict:
        out = {"error": self.category, "message": str(self)}
        if self.detail:
            out["detail"] = {k: v for k, v in self.detail.items() if v is not None}
        return out


class InvalidInputError(CidsegError):
    """Semantically invalid arguments: bad dimensions, empty groups, bad counts."""

    category = "invalid-input"


class ParseError(CidsegError):
    """Malformed input file. Carries path and a line or byte offset."""

    category = "parse"

    def __init__(self, message: str, path=None, line=None, byte=None):
        super().__init__(message, path=str(path) if path is not None else None,
                         line=line, byte=byte)
        self.path = path
        self.line = line
        self.byte = byte

    def __str__(self):
        loc = ""
        if self.line is not None:
            loc = f" (line {self.line})"
        elif self.byte is not None:
            loc = f" (byte {self.byte})"
        base = super().__str__()
        if self.path is not None:
            return f"{self.path}: {base}{loc}"
        return f"{base}{loc}"


class WriteError(CidsegError):
    """Output path unwritable or serialization failed."""

    category = "io"


class UsageError(CidsegError):
    """Conflicting or missing CLI arguments / missing input files."""

    category = "usage"
