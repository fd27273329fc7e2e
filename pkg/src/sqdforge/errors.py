"""Exception types shared across the package."""

from __future__ import annotations


class SqdforgeError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SqdforgeError):
    """Malformed input text. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConsistencyError(SqdforgeError):
    """Header or metadata fields contradict each other."""


class ShapeError(SqdforgeError):
    """Operands sized for different orbital spaces."""


class ConfigurationError(SqdforgeError):
    """A configuration violates the required particle numbers."""


class ConvergenceError(SqdforgeError):
    """Iterative eigensolver failed to converge. Carries the best residual."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (best residual {residual:.3e})"
        super().__init__(message)


class RecoveryError(SqdforgeError):
    """Configuration recovery produced no usable configurations."""


class ResourceError(SqdforgeError):
    """Problem size exceeds a hard desk-scale cap."""


class DegenerateAbscissa(SqdforgeError):
    """All fit abscissae identical; a line cannot be determined."""


class RegularizationError(SqdforgeError):
    """Overlap regularization discarded every direction."""


class ClusterSizeError(SqdforgeError):
    """A cluster ended below the minimum admissible size."""


class MissingDataError(SqdforgeError):
    """A required (species, method) energy cell is absent."""

    def __init__(self, species: str, method: str):
        self.species = species
        self.method = method
        super().__init__(f"no energy for species {species!r}, method {method!r}")
