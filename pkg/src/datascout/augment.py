"""Materializing augmentations: joins with resolution alignment, and unions.

Joins are left-outer: the result always keeps exactly the left table's rows,
with one appended column per included right column, reduced per group by an
aggregation function. Join keys are built per pair kind: categorical values
are trimmed and case-folded, numeric keys compare exactly, temporal keys are
truncated to a common resolution (the coarser of the two sides when the spec
does not pick one), and spatial keys snap to a floor grid. Unions keep the
left schema and append the right rows through the matched column pairs.

Null handling: the profiler's null literals never match as keys; Sum, Mean,
Max and Min skip nulls and yield null for an all-null group; Count counts
non-null values (0 for an empty group); First takes the first non-null value
in right-row order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .errors import (
    AggregationOnNonNumeric,
    IncompatiblePairKinds,
    MissingAggregation,
    NoPairs,
)
from .profiler import ColumnType, DatasetProfile, ProfilerConfig, profile_table
from .sketches import normalize_categorical
from .table import Column, TableData
from .timestamps import Resolution, parse_timestamp

DEFAULT_SPATIAL_GRID_DEGREES = 1.0


class AggregationFn(enum.Enum):
    FIRST = "first"
    COUNT = "count"
    SUM = "sum"
    MEAN = "mean"
    MAX = "max"
    MIN = "min"

    @classmethod
    def from_label(cls, label: str) -> "AggregationFn":
        return cls(label.strip().lower())


_NUMERIC_ONLY = (AggregationFn.SUM, AggregationFn.MEAN, AggregationFn.MAX, AggregationFn.MIN)


@dataclass
class AugmentationSpec:
    mode: str  # join | union
    pairs: list[tuple[str, str]]
    agg: dict[str, AggregationFn] = field(default_factory=dict)
    temporal_resolution: Resolution | None = None
    spatial_grid_degrees: float | None = None
    include_columns: list[str] | None = None  # None: every non-key right column


@dataclass
class AugmentedTable:
    table: TableData
    provenance: dict


def spec_to_json(spec: AugmentationSpec) -> dict:
    return {
        "mode": spec.mode,
        "pairs": [list(p) for p in spec.pairs],
        "agg": {col: fn.value for col, fn in spec.agg.items()},
        "temporal_resolution": spec.temporal_resolution.label
        if spec.temporal_resolution
        else None,
        "spatial_grid_degrees": spec.spatial_grid_degrees,
        "include_columns": spec.include_columns,
    }


def spec_from_json(doc: dict) -> AugmentationSpec:
    return AugmentationSpec(
        mode=str(doc.get("mode", "")),
        pairs=[(str(a), str(b)) for a, b in doc.get("pairs", [])],
        agg={
            str(col): AggregationFn.from_label(fn)
            for col, fn in (doc.get("agg") or {}).items()
        },
        temporal_resolution=Resolution.from_label(doc["temporal_resolution"])
        if doc.get("temporal_resolution")
        else None,
        spatial_grid_degrees=float(doc["spatial_grid_degrees"])
        if doc.get("spatial_grid_degrees") is not None
        else None,
        include_columns=[str(c) for c in doc["include_columns"]]
        if doc.get("include_columns") is not None
        else None,
    )


# --- key alignment ---


def align_temporal(epoch_seconds: float, resolution: Resolution) -> float:
    """Truncate to the UTC start of the containing period. Weeks start
    Monday; quarters start January, April, July, October."""
    if resolution is Resolution.SECOND:
        return float(math.floor(epoch_seconds))
    if resolution is Resolution.MINUTE:
        return float(math.floor(epoch_seconds / 60) * 60)
    if resolution is Resolution.HOUR:
        return float(math.floor(epoch_seconds / 3600) * 3600)
    if resolution is Resolution.DAY:
        return float(math.floor(epoch_seconds / 86400) * 86400)
    dt = datetime.fromtimestamp(epoch_seconds, tz=timezone.utc)
    if resolution is Resolution.WEEK:
        monday = (dt - timedelta(days=dt.weekday())).date()
        return datetime(monday.year, monday.month, monday.day, tzinfo=timezone.utc).timestamp()
    if resolution is Resolution.MONTH:
        return datetime(dt.year, dt.month, 1, tzinfo=timezone.utc).timestamp()
    if resolution is Resolution.QUARTER:
        month = (dt.month - 1) // 3 * 3 + 1
        return datetime(dt.year, month, 1, tzinfo=timezone.utc).timestamp()
    return datetime(dt.year, 1, 1, tzinfo=timezone.utc).timestamp()


def align_spatial(lat: float, lon: float, grid_degrees: float) -> tuple[int, int]:
    """Snap a point to its grid cell; boundaries go to the floor side."""
    return math.floor(lat / grid_degrees), math.floor(lon / grid_degrees)


# --- pair kinds ---

_PAIR_KINDS = {
    ColumnType.CATEGORICAL: "categorical",
    ColumnType.NUMERICAL: "numeric",
    ColumnType.TEMPORAL: "temporal",
    ColumnType.SPATIAL_LATITUDE: "spatial",
    ColumnType.SPATIAL_LONGITUDE: "spatial",
}


def _column_kind(profile: DatasetProfile, name: str) -> ColumnType:
    try:
        return profile.column(name).effective_type
    except KeyError:
        raise IncompatiblePairKinds(f"column {name!r} does not exist") from None


def _pair_kind(left: DatasetProfile, right: DatasetProfile, pair: tuple[str, str]) -> ColumnType:
    lkind = _column_kind(left, pair[0])
    rkind = _column_kind(right, pair[1])
    if lkind is not rkind:
        raise IncompatiblePairKinds(
            f"pair {pair!r} mixes {lkind.value} with {rkind.value}",
            left=lkind.value,
            right=rkind.value,
        )
    return lkind


def _key_parser(
    kind: ColumnType,
    resolution: Resolution | None,
    grid: float,
    nulls: set[str],
):
    def parse(cell: str):
        trimmed = cell.strip()
        if trimmed.casefold() in nulls:
            return None
        if kind is ColumnType.CATEGORICAL:
            return normalize_categorical(trimmed)
        if kind is ColumnType.TEMPORAL:
            ts = parse_timestamp(trimmed, name_hint=True)
            if ts is None:
                return None
            return align_temporal(ts, resolution or Resolution.DAY)
        try:
            value = float(trimmed)
        except ValueError:
            return None
        if not math.isfinite(value):
            return None
        if kind in (ColumnType.SPATIAL_LATITUDE, ColumnType.SPATIAL_LONGITUDE):
            return math.floor(value / grid)
        return value

    return parse


# --- aggregation ---


def _format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _aggregate(fn: AggregationFn, cells: list[str], nulls: set[str]) -> str:
    non_null = [c for c in cells if c.strip().casefold() not in nulls]
    if fn is AggregationFn.COUNT:
        return str(len(non_null))
    if fn is AggregationFn.FIRST:
        return non_null[0] if non_null else ""
    numbers = []
    for cell in non_null:
        try:
            value = float(cell.strip())
        except ValueError:
            continue
        if math.isfinite(value):
            numbers.append(value)
    if not numbers:
        return ""
    if fn is AggregationFn.SUM:
        return _format_number(math.fsum(numbers))
    if fn is AggregationFn.MEAN:
        return _format_number(math.fsum(numbers) / len(numbers))
    if fn is AggregationFn.MAX:
        return _format_number(max(numbers))
    return _format_number(min(numbers))


# --- join / union ---


def _profiles_for(
    left: TableData, right: TableData, config: ProfilerConfig
) -> tuple[DatasetProfile, DatasetProfile]:
    return (
        profile_table(left, config, name="left"),
        profile_table(right, config, name="right"),
    )


def resolve_spec(
    spec: AugmentationSpec,
    left_profile: DatasetProfile,
    right_profile: DatasetProfile,
) -> AugmentationSpec:
    """Validate a spec against both schemas and fill the documented defaults:
    aggregation Mean for numeric / First otherwise, all non-key right columns
    when include_columns is omitted, the coarser detected resolution for
    temporal keys, and a 1-degree grid for spatial keys."""
    if not spec.pairs:
        raise NoPairs("augmentation spec has no column pairs")
    kinds = [_pair_kind(left_profile, right_profile, pair) for pair in spec.pairs]
    if spec.mode == "union":
        return AugmentationSpec("union", list(spec.pairs))

    resolution = spec.temporal_resolution
    if resolution is None and any(k is ColumnType.TEMPORAL for k in kinds):
        detected = [
            col.temporal_resolution
            for profile, names in (
                (left_profile, [p[0] for p in spec.pairs]),
                (right_profile, [p[1] for p in spec.pairs]),
            )
            for name in names
            if (col := profile.column(name)).temporal_resolution is not None
        ]
        resolution = max(detected) if detected else Resolution.DAY

    grid = spec.spatial_grid_degrees
    if grid is None and any(
        k in (ColumnType.SPATIAL_LATITUDE, ColumnType.SPATIAL_LONGITUDE) for k in kinds
    ):
        grid = DEFAULT_SPATIAL_GRID_DEGREES
    if grid is not None and grid <= 0:
        raise IncompatiblePairKinds("spatial grid must be positive", grid=grid)

    key_columns = {r for _, r in spec.pairs}
    include = (
        list(spec.include_columns)
        if spec.include_columns is not None
        else [c.name for c in right_profile.columns if c.name not in key_columns]
    )
    for name in include:
        if not right_profile.has_column(name):
            raise IncompatiblePairKinds(f"include column {name!r} does not exist")

    agg: dict[str, AggregationFn] = {}
    for name in include:
        fn = spec.agg.get(name)
        col_kind = right_profile.column(name).effective_type
        numeric = col_kind in (
            ColumnType.NUMERICAL,
            ColumnType.SPATIAL_LATITUDE,
            ColumnType.SPATIAL_LONGITUDE,
        )
        if fn is None:
            fn = AggregationFn.MEAN if numeric else AggregationFn.FIRST
        elif fn in _NUMERIC_ONLY and not numeric:
            raise AggregationOnNonNumeric(
                f"{fn.value} is not defined for {col_kind.value} column {name!r}",
                column=name,
            )
        agg[name] = fn
    for name in spec.agg:
        if name not in include:
            raise MissingAggregation(
                f"aggregation given for {name!r}, which is not an included column",
                column=name,
            )
    return AugmentationSpec(
        "join", list(spec.pairs), agg, resolution, grid, include
    )


def join(
    left: TableData,
    right: TableData,
    spec: AugmentationSpec,
    left_id: str = "",
    right_id: str = "",
    config: ProfilerConfig | None = None,
) -> AugmentedTable:
    """Left-outer join with per-group aggregation; |result| == |left|."""
    config = config or ProfilerConfig()
    left_profile, right_profile = _profiles_for(left, right, config)
    resolved = resolve_spec(spec, left_profile, right_profile)
    if resolved.mode != "join":
        raise NoPairs("join() called with a union spec")
    if not resolved.agg and resolved.include_columns:
        raise MissingAggregation("no aggregation functions resolved")

    nulls = {lit.casefold() for lit in config.null_literals}
    kinds = [_pair_kind(left_profile, right_profile, p) for p in resolved.pairs]
    parsers = [
        _key_parser(kind, resolved.temporal_resolution, resolved.spatial_grid_degrees or 1.0, nulls)
        for kind in kinds
    ]

    def row_key(cells: list[str]) -> tuple | None:
        key = []
        for parser, cell in zip(parsers, cells):
            part = parser(cell)
            if part is None:
                return None
            key.append(part)
        return tuple(key)

    right_key_cols = [right.column(r).values for _, r in resolved.pairs]
    groups: dict[tuple, list[int]] = {}
    for i in range(right.row_count):
        key = row_key([col[i] for col in right_key_cols])
        if key is not None:
            groups.setdefault(key, []).append(i)

    include = resolved.include_columns or []
    right_values = {name: right.column(name).values for name in include}
    aggregated: dict[tuple, list[str]] = {}
    for key, rows in groups.items():
        aggregated[key] = [
            _aggregate(resolved.agg[name], [right_values[name][i] for i in rows], nulls)
            for name in include
        ]
    empty_group = [
        "0" if resolved.agg[name] is AggregationFn.COUNT else "" for name in include
    ]

    left_key_cols = [left.column(l).values for l, _ in resolved.pairs]
    appended: list[list[str]] = [[] for _ in include]
    for i in range(left.row_count):
        key = row_key([col[i] for col in left_key_cols])
        values = aggregated.get(key, empty_group) if key is not None else empty_group
        for j, value in enumerate(values):
            appended[j].append(value)

    taken = {c.name.casefold() for c in left.columns}
    pairs = [(c.name, list(c.values)) for c in left.columns]
    for name, values in zip(include, appended):
        out_name = name if name.casefold() not in taken else f"{name}_right"
        pairs.append((out_name, values))
    table = TableData.from_columns(pairs)
    return AugmentedTable(
        table,
        {
            "mode": "join",
            "left_id": left_id,
            "right_id": right_id,
            "spec": spec_to_json(resolved),
            "row_counts": {
                "left": left.row_count,
                "right": right.row_count,
                "result": table.row_count,
            },
        },
    )


def union(
    left: TableData,
    right: TableData,
    spec: AugmentationSpec,
    left_id: str = "",
    right_id: str = "",
    config: ProfilerConfig | None = None,
) -> AugmentedTable:
    """Append right rows under the left schema via the matched pairs;
    unmatched left columns are null in appended rows."""
    config = config or ProfilerConfig()
    if not spec.pairs:
        raise NoPairs("augmentation spec has no column pairs")
    left_profile, right_profile = _profiles_for(left, right, config)
    for pair in spec.pairs:
        _pair_kind(left_profile, right_profile, pair)

    mapping = dict(spec.pairs)  # left column -> right column
    pairs = []
    for col in left.columns:
        values = list(col.values)
        if col.name in mapping:
            values.extend(right.column(mapping[col.name]).values)
        else:
            values.extend([""] * right.row_count)
        pairs.append((col.name, values))
    table = TableData.from_columns(pairs)
    return AugmentedTable(
        table,
        {
            "mode": "union",
            "left_id": left_id,
            "right_id": right_id,
            "spec": spec_to_json(AugmentationSpec("union", list(spec.pairs))),
            "row_counts": {
                "left": left.row_count,
                "right": right.row_count,
                "result": table.row_count,
            },
        },
    )


def augment(
    left: TableData,
    right: TableData,
    spec: AugmentationSpec,
    left_id: str = "",
    right_id: str = "",
    config: ProfilerConfig | None = None,
) -> AugmentedTable:
    if spec.mode == "join":
        return join(left, right, spec, left_id, right_id, config)
    if spec.mode == "union":
        return union(left, right, spec, left_id, right_id, config)
    raise NoPairs(f"unknown augmentation mode {spec.mode!r}")
