"""Dataset profiling: type detection, statistics, and summaries.

A profile is the engine's complete description of one dataset: per-column
types (categorical, numerical, temporal, or a spatial latitude/longitude
pair), statistics, a summary sketch per column, a small row sample, and
provenance. Profiles serialize to a versioned JSON document
(``profile_version: 1``) that is the interchange format between the CLI,
the HTTP service, index persistence, and the UI.

Type detection is threshold-based: with nulls removed, a column is temporal
when >= 90% of cells parse as timestamps, else numerical when >= 90% parse
as numbers, else categorical. Spatial types are only ever assigned in
(latitude, longitude) pairs by a post-pass over column names and value
ranges. A user override that matches no values at all yields an empty
summary and no numeric stats.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field, replace

from . import sketches
from .errors import EmptyTable
from .sketches import (
    CategoricalSketch,
    ColumnSummary,
    NumericSummary,
    SpatialSummary,
    TemporalSummary,
)
from .table import TableData
from .timestamps import Resolution, detect_resolution, name_hints_temporal, parse_timestamp

PROFILE_VERSION = 1

DEFAULT_NULL_LITERALS = ("", "na", "n/a", "null", "none", "-")

_LAT_NAME_TOKENS = ("lat", "latitude")
_LON_NAME_TOKENS = ("lon", "lng", "long", "longitude")


class ColumnType(enum.Enum):
    CATEGORICAL = "categorical"
    NUMERICAL = "numerical"
    TEMPORAL = "temporal"
    SPATIAL_LATITUDE = "spatial_latitude"
    SPATIAL_LONGITUDE = "spatial_longitude"

    @classmethod
    def from_label(cls, label: str) -> "ColumnType":
        return cls(label.strip().lower())


@dataclass
class ProfilerConfig:
    k_ranges: int = sketches.DEFAULT_RANGES_PER_COLUMN
    num_permutations: int = sketches.DEFAULT_PERMUTATIONS
    numeric_threshold: float = 0.90
    temporal_threshold: float = 0.90
    null_literals: tuple[str, ...] = DEFAULT_NULL_LITERALS
    sample_rows: int = 20
    top_values: int = 10
    distinct_exact_limit: int = 100_000


@dataclass
class NumericStats:
    mean: float
    variance: float
    min: float
    max: float


@dataclass
class ColumnProfile:
    name: str
    detected_type: ColumnType
    null_fraction: float
    distinct_count_estimate: int
    summary: ColumnSummary
    user_type_override: ColumnType | None = None
    numeric_stats: NumericStats | None = None
    temporal_resolution: Resolution | None = None
    top_values: list[tuple[str, int]] = field(default_factory=list)

    @property
    def effective_type(self) -> ColumnType:
        return self.user_type_override or self.detected_type


@dataclass
class DatasetProfile:
    id: str
    name: str
    description: str
    source: str
    row_count: int
    columns: list[ColumnProfile]
    sample: list[list[str]]
    spatial_coverage: list[tuple[str, str]] = field(default_factory=list)
    provenance: "ProvenanceRecord | None" = None
    custom_metadata: dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> ColumnProfile:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)

    def has_column(self, name: str) -> bool:
        return any(col.name == name for col in self.columns)


@dataclass
class _ParsedColumn:
    """Working state for one column during profiling."""

    name: str
    raw: list[str]
    non_null: list[str]
    null_fraction: float
    detected: ColumnType
    numbers: list[float]  # parsed floats (numeric / spatial candidates)
    epochs: list[float]  # parsed timestamps (temporal)


def detect_column_type(
    values: list[str], column_name: str, config: ProfilerConfig | None = None
) -> tuple[ColumnType, list, float]:
    """Classify one column. Returns (type, parsed representation, null_fraction).

    The parsed representation is floats for numerical, epoch seconds for
    temporal, and the trimmed non-null strings for categorical. All-null
    columns come back categorical with null_fraction 1 (not an error).
    """
    config = config or ProfilerConfig()
    parsed = _parse_column(values, column_name, config)
    if parsed.detected is ColumnType.NUMERICAL:
        return parsed.detected, parsed.numbers, parsed.null_fraction
    if parsed.detected is ColumnType.TEMPORAL:
        return parsed.detected, parsed.epochs, parsed.null_fraction
    return parsed.detected, parsed.non_null, parsed.null_fraction


def _parse_column(values: list[str], column_name: str, config: ProfilerConfig) -> _ParsedColumn:
    nulls = {lit.casefold() for lit in config.null_literals}
    hint = name_hints_temporal(column_name)
    non_null: list[str] = []
    numbers: list[float] = []
    epochs: list[float] = []
    for cell in values:
        trimmed = cell.strip()
        if trimmed.casefold() in nulls:
            continue
        non_null.append(trimmed)
        num = _parse_number(trimmed)
        if num is not None:
            numbers.append(num)
        ts = parse_timestamp(trimmed, name_hint=hint)
        if ts is not None:
            epochs.append(ts)
    null_fraction = 1.0 - len(non_null) / len(values) if values else 1.0
    if not non_null:
        detected = ColumnType.CATEGORICAL
    elif len(epochs) / len(non_null) >= config.temporal_threshold:
        detected = ColumnType.TEMPORAL
    elif len(numbers) / len(non_null) >= config.numeric_threshold:
        detected = ColumnType.NUMERICAL
    else:
        detected = ColumnType.CATEGORICAL
    return _ParsedColumn(
        column_name, list(values), non_null, null_fraction, detected, numbers, epochs
    )


def _parse_number(text: str) -> float | None:
    if not text or "_" in text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def detect_temporal_resolution(timestamps: list[float]) -> Resolution:
    """See timestamps.detect_resolution; exposed here next to the other
    detection rules."""
    return detect_resolution(timestamps)


def detect_spatial_pairs(profiles: list[ColumnProfile]) -> list[tuple[str, str]]:
    """Pair latitude/longitude columns by name token + value range.

    Greedy left-to-right: each latitude-named numerical column within
    [-90, 90] pairs with the first unpaired longitude-named numerical column
    within [-180, 180]. The caller retypes paired columns.
    """
    lat_candidates = [
        p for p in profiles if _is_spatial_candidate(p, _LAT_NAME_TOKENS, 90.0)
    ]
    lon_candidates = [
        p for p in profiles if _is_spatial_candidate(p, _LON_NAME_TOKENS, 180.0)
    ]
    pairs: list[tuple[str, str]] = []
    used: set[str] = set()
    for lat in lat_candidates:
        if lat.name in used:
            continue
        for lon in lon_candidates:
            if lon.name in used or lon.name == lat.name:
                continue
            pairs.append((lat.name, lon.name))
            used.add(lat.name)
            used.add(lon.name)
            break
    return pairs


def _is_spatial_candidate(
    profile: ColumnProfile, tokens: tuple[str, ...], bound: float
) -> bool:
    if profile.effective_type is not ColumnType.NUMERICAL:
        return False
    name = profile.name.casefold()
    if not any(t in name for t in tokens):
        return False
    stats = profile.numeric_stats
    return stats is not None and stats.min >= -bound and stats.max <= bound


def profile_table(
    table: TableData,
    config: ProfilerConfig | None = None,
    name: str = "",
    description: str = "",
    source: str = "",
    type_overrides: dict[str, ColumnType] | None = None,
    content_hash: str | None = None,
    custom_metadata: dict[str, str] | None = None,
    provenance: "ProvenanceRecord | None" = None,
) -> DatasetProfile:
    """Profile a table into a DatasetProfile.

    ``type_overrides`` maps column names to user-asserted types; the detected
    type is kept alongside and summaries are rebuilt under the override.
    ``content_hash`` (hex) pins the dataset id; when absent the id comes from
    a canonical hash of the table content, so identical bytes always re-profile
    to the same id.
    """
    config = config or ProfilerConfig()
    overrides = type_overrides or {}
    table.require_nonempty()

    parsed_cols = [
        _parse_column(col.values, col.name, config) for col in table.columns
    ]
    profiles: list[ColumnProfile] = []
    for pc in parsed_cols:
        override = overrides.get(pc.name)
        profiles.append(_build_column_profile(pc, override, config))

    coverage = _apply_spatial_pass(table, parsed_cols, profiles, overrides, config)

    digest = content_hash or table.content_hash()
    sample_n = min(config.sample_rows, table.row_count)
    sample = table.rows()[:sample_n]
    return DatasetProfile(
        id=f"ds-{digest[:16]}",
        name=name,
        description=description,
        source=source,
        row_count=table.row_count,
        columns=profiles,
        sample=sample,
        spatial_coverage=coverage,
        provenance=provenance,
        custom_metadata=dict(custom_metadata or {}),
    )


def _build_column_profile(
    pc: _ParsedColumn, override: ColumnType | None, config: ProfilerConfig
) -> ColumnProfile:
    effective = override or pc.detected
    if override is ColumnType.TEMPORAL and pc.detected is not ColumnType.TEMPORAL:
        # user asserts temporal: re-parse with the name gate forced open
        pc = replace(
            pc,
            epochs=[
                ts
                for v in pc.non_null
                if (ts := parse_timestamp(v, name_hint=True)) is not None
            ],
        )
    if override in (ColumnType.SPATIAL_LATITUDE, ColumnType.SPATIAL_LONGITUDE):
        effective = ColumnType.NUMERICAL  # pairing happens in the spatial pass

    stats: NumericStats | None = None
    resolution: Resolution | None = None
    summary: ColumnSummary
    if effective is ColumnType.NUMERICAL:
        stats = _numeric_stats(pc.numbers)
        distinct = len(set(pc.numbers))
        summary = sketches.build_numeric_summary(pc.numbers, config.k_ranges) \
            if pc.numbers else NumericSummary([], 0)
    elif effective is ColumnType.TEMPORAL:
        resolution = detect_resolution(pc.epochs) if pc.epochs else Resolution.DAY
        distinct = len(set(pc.epochs))
        summary = (
            sketches.build_temporal_summary(pc.epochs, config.k_ranges, resolution)
            if pc.epochs
            else TemporalSummary([], 0, resolution)
        )
    else:
        normalized = {sketches.normalize_categorical(v) for v in pc.non_null}
        distinct = len(normalized)
        sketch = sketches.build_categorical_sketch(
            pc.non_null, config.num_permutations
        )
        if distinct > config.distinct_exact_limit:
            distinct = sketches.estimate_cardinality(sketch)
        sketch.cardinality = distinct
        summary = sketch

    return ColumnProfile(
        name=pc.name,
        detected_type=pc.detected,
        user_type_override=override,
        null_fraction=pc.null_fraction,
        distinct_count_estimate=distinct,
        numeric_stats=stats,
        temporal_resolution=resolution,
        top_values=_top_values(pc.non_null, config.top_values),
        summary=summary,
    )


def _numeric_stats(numbers: list[float]) -> NumericStats | None:
    if not numbers:
        return None
    n = len(numbers)
    mean = sum(numbers) / n
    variance = sum((x - mean) ** 2 for x in numbers) / n
    return NumericStats(mean, variance, min(numbers), max(numbers))


def _top_values(non_null: list[str], limit: int) -> list[tuple[str, int]]:
    counts = Counter(non_null)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ordered[:limit]


def _apply_spatial_pass(
    table: TableData,
    parsed_cols: list[_ParsedColumn],
    profiles: list[ColumnProfile],
    overrides: dict[str, ColumnType],
    config: ProfilerConfig,
) -> list[tuple[str, str]]:
    pairs = _override_spatial_pairs(profiles, overrides)
    paired = {name for pair in pairs for name in pair}
    for lat, lon in detect_spatial_pairs(
        [p for p in profiles if p.name not in paired and p.name not in overrides]
    ):
        pairs.append((lat, lon))
    paired = {name for pair in pairs for name in pair}
    for p in profiles:
        # a spatial assertion that found no valid partner (or failed the
        # range check) is dropped rather than left dangling
        if (
            p.user_type_override
            in (ColumnType.SPATIAL_LATITUDE, ColumnType.SPATIAL_LONGITUDE)
            and p.name not in paired
        ):
            p.user_type_override = None

    by_name = {p.name: p for p in profiles}
    nulls = {lit.casefold() for lit in config.null_literals}
    coverage: list[tuple[str, str]] = []
    for lat_name, lon_name in pairs:
        lat_col = table.column(lat_name)
        lon_col = table.column(lon_name)
        points = []
        for a, b in zip(lat_col.values, lon_col.values):
            if a.strip().casefold() in nulls or b.strip().casefold() in nulls:
                continue
            la, lo = _parse_number(a.strip()), _parse_number(b.strip())
            if la is not None and lo is not None:
                points.append((la, lo))
        summary = sketches.build_spatial_summary(points, config.k_ranges)
        by_name[lat_name].detected_type = ColumnType.SPATIAL_LATITUDE
        by_name[lon_name].detected_type = ColumnType.SPATIAL_LONGITUDE
        by_name[lat_name].summary = summary
        by_name[lon_name].summary = summary
        coverage.append((lat_name, lon_name))
    return coverage


def _override_spatial_pairs(
    profiles: list[ColumnProfile], overrides: dict[str, ColumnType]
) -> list[tuple[str, str]]:
    """Pair user-asserted lat/lon overrides in column order; range limits
    still apply (an out-of-range assertion is dropped)."""
    lats = [
        p
        for p in profiles
        if overrides.get(p.name) is ColumnType.SPATIAL_LATITUDE
        and p.numeric_stats is not None
        and -90.0 <= p.numeric_stats.min
        and p.numeric_stats.max <= 90.0
    ]
    lons = [
        p
        for p in profiles
        if overrides.get(p.name) is ColumnType.SPATIAL_LONGITUDE
        and p.numeric_stats is not None
        and -180.0 <= p.numeric_stats.min
        and p.numeric_stats.max <= 180.0
    ]
    pairs = []
    for lat, lon in zip(lats, lons):
        pairs.append((lat.name, lon.name))
    return pairs


# --- JSON interchange (profile_version 1) ---


def profile_to_json(profile: DatasetProfile) -> dict:
    from .ingest import provenance_to_json  # cycle-free at call time

    return {
        "profile_version": PROFILE_VERSION,
        "id": profile.id,
        "name": profile.name,
        "description": profile.description,
        "source": profile.source,
        "row_count": profile.row_count,
        "columns": [_column_to_json(c) for c in profile.columns],
        "sample": profile.sample,
        "spatial_coverage": [list(pair) for pair in profile.spatial_coverage],
        "provenance": provenance_to_json(profile.provenance)
        if profile.provenance
        else None,
        "custom_metadata": profile.custom_metadata,
    }


def _column_to_json(col: ColumnProfile) -> dict:
    return {
        "name": col.name,
        "detected_type": col.detected_type.value,
        "user_type_override": col.user_type_override.value
        if col.user_type_override
        else None,
        "null_fraction": col.null_fraction,
        "distinct_count_estimate": col.distinct_count_estimate,
        "numeric_stats": {
            "mean": col.numeric_stats.mean,
            "variance": col.numeric_stats.variance,
            "min": col.numeric_stats.min,
            "max": col.numeric_stats.max,
        }
        if col.numeric_stats
        else None,
        "temporal_resolution": col.temporal_resolution.label
        if col.temporal_resolution
        else None,
        "top_values": [[v, n] for v, n in col.top_values],
        "summary": sketches.summary_to_json(col.summary),
    }


def profile_from_json(doc: dict) -> DatasetProfile:
    from .errors import ProfileVersionUnsupported
    from .ingest import provenance_from_json

    version = doc.get("profile_version")
    if version != PROFILE_VERSION:
        raise ProfileVersionUnsupported(
            f"profile_version {version!r} not supported", expected=PROFILE_VERSION
        )
    columns = [_column_from_json(c) for c in doc["columns"]]
    return DatasetProfile(
        id=doc["id"],
        name=doc.get("name", ""),
        description=doc.get("description", ""),
        source=doc.get("source", ""),
        row_count=int(doc["row_count"]),
        columns=columns,
        sample=[list(row) for row in doc.get("sample", [])],
        spatial_coverage=[tuple(p) for p in doc.get("spatial_coverage", [])],
        provenance=provenance_from_json(doc["provenance"])
        if doc.get("provenance")
        else None,
        custom_metadata=dict(doc.get("custom_metadata", {})),
    )


def _column_from_json(doc: dict) -> ColumnProfile:
    stats = doc.get("numeric_stats")
    resolution = doc.get("temporal_resolution")
    return ColumnProfile(
        name=doc["name"],
        detected_type=ColumnType(doc["detected_type"]),
        user_type_override=ColumnType(doc["user_type_override"])
        if doc.get("user_type_override")
        else None,
        null_fraction=float(doc["null_fraction"]),
        distinct_count_estimate=int(doc["distinct_count_estimate"]),
        numeric_stats=NumericStats(
            stats["mean"], stats["variance"], stats["min"], stats["max"]
        )
        if stats
        else None,
        temporal_resolution=Resolution.from_label(resolution) if resolution else None,
        top_values=[(v, int(n)) for v, n in doc.get("top_values", [])],
        summary=sketches.summary_from_json(doc["summary"]),
    )
