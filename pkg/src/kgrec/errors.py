"""Exception types shared across the package.

The CLI maps these onto exit codes: input problems (parse errors, missing
files) exit 2, unknown-entity lookups exit 3, anything else exits 1.
"""


class KgrecError(Exception):
    """Base class for all package errors."""


class ParseError(KgrecError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownEntityError(KgrecError):
    """A query or candidate entity is not present in the relevant table."""


class DivergenceError(KgrecError):
    """Training produced a non-finite loss."""
