"""Exception types shared across the package."""

from __future__ import annotations


class PlanmatchError(Exception):
    """Base class for every error raised by this package."""


class ParseError(PlanmatchError, ValueError):
    """Malformed input text (page grammar, answer structure, config files)."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class EmptyDocumentError(ParseError):
    """Document input contained no pages."""


class SpanRangeError(PlanmatchError, ValueError):
    """Character span outside the document's canonical text."""


class ConfigError(PlanmatchError, ValueError):
    """Invalid configuration value or violated call precondition."""


class DimensionError(PlanmatchError, ValueError):
    """Vector dimensionality mismatch or drift within a batch."""


class IndexStateError(PlanmatchError):
    """Vector index used in the wrong lifecycle state (e.g. unfrozen retrieval)."""


class ProviderError(PlanmatchError):
    """A remote or local provider failed after exhausting its retries."""

    def __init__(self, message: str, failed_indices: list[int] | None = None):
        super().__init__(message)
        self.failed_indices = failed_indices or []


class ConvergenceError(PlanmatchError):
    """Iterative factorization did not converge within its iteration budget."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class TaxonomyShapeError(PlanmatchError, ValueError):
    """Provider-built taxonomy did not contain exactly 20 unique labels."""


class UnknownCityError(PlanmatchError, KeyError):
    """City id not present in the matrix or snapshot."""


class DuplicateEvaluationError(PlanmatchError, ValueError):
    """More than one evaluation for the same (city, domain, tier)."""


class EmptyPeersError(PlanmatchError, ValueError):
    """Adoption rates requested for an empty peer set."""


class SnapshotError(PlanmatchError):
    """Snapshot publication refused or snapshot files inconsistent."""
