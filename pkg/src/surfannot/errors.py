"""Exception types shared across the toolkit."""
from __future__ import annotations


class SurfannotError(Exception):
    """Base class for all errors raised by this package."""


class MeshValidationError(SurfannotError):
    """Raised when an operation receives a mesh that fails validation."""

    def __init__(self, report):
        self.report = report
        super().__init__("invalid mesh: " + "; ".join(report.problems))


class PlyParseError(SurfannotError):
    """A .ply file could not be parsed.

    ``offset`` is the byte offset into the input at which the problem was
    detected; ``reason`` is a human-readable description.
    """

    def __init__(self, offset: int, reason: str):
        self.offset = offset
        self.reason = reason
        super().__init__(f"parse error at byte {offset}: {reason}")


class SeriesLoadError(SurfannotError):
    """Loading a frame sequence failed; carries per-file diagnostics."""

    def __init__(self, failures):
        # failures: list of (path, message)
        self.failures = list(failures)
        lines = ", ".join(f"{p}: {m}" for p, m in self.failures)
        super().__init__(f"failed to load series ({lines})")


class MarkerImportError(SurfannotError):
    """A marker CSV could not be imported; ``row`` is the 1-based data row."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class UnknownMarkerError(SurfannotError):
    """Referenced marker id does not exist."""


class StaleHitError(SurfannotError):
    """A pick hit does not match the current mesh of its frame."""


class StaleVersionError(SurfannotError):
    """Optimistic-concurrency token does not match the current state."""

    def __init__(self, expected: int, current: int):
        self.expected = expected
        self.current = current
        super().__init__(
            f"stale state version {expected} (current is {current})"
        )


class ManifestError(SurfannotError):
    """Project manifest is missing files or fails its integrity checks."""
