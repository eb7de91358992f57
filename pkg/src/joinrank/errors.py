"""Exception types shared across the package."""

from __future__ import annotations


class JoinRankError(Exception):
    """Base class for every failure raised by this package."""


class ParseError(JoinRankError):
    """A file or response could not be parsed."""

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        location = ""
        if source is not None:
            location = f" [{source}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + location)
        self.source = source
        self.line = line


class CorpusError(JoinRankError):
    """A corpus invariant was violated (duplicate names, ragged rows, ...)."""


class ValidationError(JoinRankError):
    """Cross-references did not resolve against the corpus."""

    def __init__(self, message: str, details: list[str] | None = None):
        self.details = details or []
        if self.details:
            message = message + ": " + "; ".join(self.details)
        super().__init__(message)


class MissingEmbeddingError(JoinRankError):
    """A precomputed store has no vector for the requested text."""

    def __init__(self, text_hash: str):
        super().__init__(f"no stored embedding for text hash {text_hash}")
        self.text_hash = text_hash


class TransportError(JoinRankError):
    """A remote service could not be reached after the configured retries."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class MissingDecompositionError(JoinRankError):
    """A cache-only decomposition client has no entry for the query."""

    def __init__(self, query: str):
        super().__init__(f"no cached decomposition for query: {query!r}")
        self.query = query


class InfeasibleModelError(JoinRankError):
    """The requested selection cannot be built (e.g. more tables than the pool holds)."""


class SolveTimeoutError(JoinRankError):
    """The solver exceeded its time limit."""


class OracleSizeError(JoinRankError):
    """The enumeration oracle refused an instance above its size guard."""
