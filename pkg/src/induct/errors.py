"""Exception types shared across the package."""

from __future__ import annotations


class InductError(Exception):
    """Base class for all errors raised by this package."""


class AlgebraMismatch(InductError):
    """Two values that must live on the same algebra do not."""


class DomainError(InductError):
    """An argument lies outside the domain an operation is defined on."""


class BoundaryError(InductError):
    """A derivative or geodesic was requested at a point where it is unbounded."""


class EmptyQuotient(InductError):
    """Quotienting by every atom leaves no algebra behind."""


class SizeLimit(InductError):
    """An exhaustive enumeration would exceed the configured cap."""


class NoConvergence(InductError):
    """An iterative solver hit its iteration cap before reaching tolerance.

    Carries a ``diagnostics`` dict (iterations, gradient norm, whether the
    target looks like it sits on the boundary of the achievable set, ...).
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InternalError(InductError):
    """An internal contract was violated (e.g. a convex functional went negative)."""


class SchemaError(InductError):
    """A JSON document does not match the expected wire format.

    ``path`` points at the offending field, e.g. ``constraints[0].moment.f``.
    """

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
