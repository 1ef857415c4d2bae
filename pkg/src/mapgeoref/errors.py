"""Exception hierarchy shared across the package.

Input problems (bad files, bad config, out-of-range values) and numerical
problems (degenerate geometry, singular systems) are kept in separate
branches so the CLI can map them to distinct exit codes.
"""

from __future__ import annotations


class GeorefError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GeorefError):
    """Invalid user input: malformed files, bad config values, bad paths."""


class ParseError(InputError):
    """Malformed file content; carries the 1-based line (and field) location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", field {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class NumericalError(GeorefError):
    """Geometry or linear algebra failed in a way no input tweak can fix."""


class DegenerateInputError(NumericalError):
    """Point set lacks the dimensionality the operation needs."""


class DuplicatePointError(NumericalError):
    """Two input points coincide within tolerance."""

    def __init__(self, index_a: int, index_b: int, tolerance: float):
        super().__init__(
            f"points {index_a} and {index_b} coincide within {tolerance:g} m"
        )
        self.index_a = index_a
        self.index_b = index_b


class SingularTransformError(NumericalError):
    """A per-tetrahedron transform system is too ill-conditioned to trust."""

    def __init__(self, tetrahedron: int, vertex_indices: tuple[int, ...], condition: float):
        super().__init__(
            f"tetrahedron {tetrahedron} with vertices {list(vertex_indices)} has "
            f"condition number {condition:.3e}"
        )
        self.tetrahedron = tetrahedron
        self.vertex_indices = vertex_indices
        self.condition = condition


class OutOfRangeError(GeorefError):
    """Query time falls outside the supported interval."""


class InsufficientSupportError(GeorefError):
    """Not enough spacing-compliant frames around the query time."""


class PipelineError(GeorefError):
    """A pipeline stage failed; wraps the stage name and the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
