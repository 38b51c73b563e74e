"""Exception hierarchy shared across the engine.

Every error carries a stable ``code`` (the class name) so the HTTP layer can
emit a uniform ``{code, message, details}`` envelope without inspecting types.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine errors."""

    def __init__(self, message: str, **details: object) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    @property
    def code(self) -> str:
        return type(self).__name__


# --- table / profiling ---


class EmptyTable(EngineError):
    """Table has no columns or no rows."""


class RaggedRows(EngineError):
    """Column lengths differ; the profiler rejects rather than repairs."""


class NonFiniteValue(EngineError):
    """NaN or infinity reached a numeric summary builder."""


# --- sketches ---


class SignatureLengthMismatch(EngineError):
    """MinHash signatures of different lengths are not comparable."""


# --- index ---


class ProfileVersionUnsupported(EngineError):
    """Profile document version not understood by this build."""


class ChecksumMismatch(EngineError):
    """Persisted index file does not match its manifest checksum."""


class VersionUnsupported(EngineError):
    """Persisted index format/magic not understood by this build."""


class EmptyIndexError(EngineError):
    """Attempted to load an index from a directory with no manifest."""


# --- search ---


class InvalidQuery(EngineError):
    """Query violates a structural constraint (e.g. start > end)."""


class EmptyQuery(InvalidQuery):
    """Query carries no constraint at all."""


class UnknownNamedArea(InvalidQuery):
    """Named area not present in the gazetteer."""


# --- augmentation ---


class IncompatiblePairKinds(EngineError):
    """Join/union pair references columns of incompatible kinds."""


class AggregationOnNonNumeric(EngineError):
    """Sum/Mean/Max/Min requested for a non-numeric column."""


class MissingAggregation(EngineError):
    """An included join column has no aggregation function."""


class NoPairs(EngineError):
    """Augmentation spec has an empty pair list."""


# --- ingestion ---


class PluginUnavailable(EngineError):
    """Discovery plugin cannot be reached (network/IO failure)."""


class MalformedListing(EngineError):
    """Plugin catalog response does not match the expected shape."""


class HashMismatch(EngineError):
    """Re-fetched bytes do not match the recorded content hash."""


class SourceGone(EngineError):
    """Dataset can no longer be fetched from its recorded source."""


# --- configuration / service ---


class ConfigError(EngineError):
    """Engine configuration file is missing or invalid."""


class MetadataSchemaViolation(EngineError):
    """Custom metadata does not satisfy the deployment's field schema."""


class UnknownDataset(EngineError):
    """Dataset id not present in the index."""
