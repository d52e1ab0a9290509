"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """Structurally valid input that exceeds a configured limit."""


class GeometryError(ValueError):
    """Geometrically inconsistent input (e.g. field point inside the sphere)."""


class BracketError(RuntimeError):
    """A root/minimum search left its bracket."""


class ConvergenceError(RuntimeError):
    """Iterative refinement hit its cap before reaching the target accuracy.

    Carries the best value obtained so far in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
