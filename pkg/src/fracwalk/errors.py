"""Exception taxonomy shared across the package.

Two failure families are distinguished because the command line maps them to
different exit codes: problems with *inputs* (files, matrices, vectors,
flag combinations) raise :class:`ValidationError`, while requests that fall
outside the supported numeric domain of an algorithm (fractional order out
of range, oracle unavailable for a problem size, ...) raise
:class:`DomainError`.  Both derive from ``ValueError`` so callers that do
not care about the distinction can catch the usual thing.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """An input (matrix, vector, file, argument combination) is malformed."""


class DomainError(ValueError):
    """A request lies outside the numeric domain an algorithm supports."""


class MatrixMarketError(ValidationError):
    """A Matrix Market file failed to parse; carries the offending line.

    ``line`` is the 1-based line number in the file, or ``None`` when the
    problem is not attributable to a single line (e.g. truncated file).
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
