"""Discovery queries: filters, keyword ranking, join and union search.

A Query combines any of keywords, a temporal window, a spatial box (drawn or
named via the gazetteer), source and column-type filters, and an optional
related dataset for join/union discovery. Evaluation intersects the hit sets
of all active filters, scores the survivors, and returns paged SearchResults
with snippets and (for related queries) the match details needed to request
an augmentation.

Scoring merges three components with weights 0.5 (keyword), 0.2 (mean filter
overlap) and 0.3 (best join/union score); weights of absent components are
renormalized over the present ones. BM25 scores are unbounded, so the
keyword component is divided by the maximum across the result list. Results
sort by total score descending with dataset id as the tie-break, which makes
ranking total and deterministic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import EmptyQuery, InvalidQuery, UnknownNamedArea
from .indexing import IndexShard
from .profiler import ColumnType, DatasetProfile
from .sketches import (
    BoxBucket,
    CategoricalSketch,
    NumericSummary,
    SpatialSummary,
    TemporalSummary,
    estimate_containment,
    estimate_range_overlap,
    estimate_spatial_overlap,
)
from .timestamps import Resolution, format_iso_utc, parse_timestamp

JOIN_PAIR_FLOOR = 0.05
UNION_NAME_THRESHOLD = 0.4

DEFAULT_WEIGHTS = {"keyword": 0.5, "filter": 0.2, "related": 0.3}

_FOLD_RE = re.compile(r"[\s_\-]+")


# --- query model ---


@dataclass
class BoundingBox:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def validate(self) -> None:
        if self.lat_min > self.lat_max or self.lon_min > self.lon_max:
            raise InvalidQuery("bounding box corners are inverted")


@dataclass
class TemporalFilter:
    start: float
    end: float
    resolution: Resolution | None = None


@dataclass
class SpatialFilter:
    box: BoundingBox | None = None
    area: str | None = None


@dataclass
class RelatedInput:
    profile: DatasetProfile
    mode: str = "either"  # join | union | either


@dataclass
class Page:
    offset: int = 0
    limit: int = 20


@dataclass
class Query:
    keywords: list[str] = field(default_factory=list)
    temporal: TemporalFilter | None = None
    spatial: SpatialFilter | None = None
    sources: set[str] | None = None
    required_types: set[ColumnType] | None = None
    related: RelatedInput | None = None
    page: Page = field(default_factory=Page)

    def validate(self) -> None:
        if not (
            self.keywords
            or self.temporal
            or self.spatial
            or self.sources
            or self.required_types
            or self.related
        ):
            raise EmptyQuery("query carries no constraint")
        if self.temporal and self.temporal.start > self.temporal.end:
            raise InvalidQuery("temporal filter start is after end")
        if self.spatial:
            if (self.spatial.box is None) == (self.spatial.area is None):
                raise InvalidQuery("spatial filter needs exactly one of box or area")
            if self.spatial.box:
                self.spatial.box.validate()
        if self.related and self.related.mode not in ("join", "union", "either"):
            raise InvalidQuery(f"unknown related mode {self.related.mode!r}")
        if self.page.offset < 0 or self.page.limit < 1:
            raise InvalidQuery("page offset must be >= 0 and limit >= 1")


# --- match and result types ---


@dataclass
class JoinPair:
    query_column: str
    candidate_column: str
    kind: str  # categorical | numeric | temporal | spatial
    containment_score: float


@dataclass
class JoinCandidate:
    dataset_id: str
    pairs: list[JoinPair]

    @property
    def join_score(self) -> float:
        return max(p.containment_score for p in self.pairs)


@dataclass
class UnionPair:
    query_column: str
    candidate_column: str
    name_similarity: float


@dataclass
class UnionCandidate:
    dataset_id: str
    column_pairs: list[UnionPair]
    matched_fraction: float

    @property
    def union_score(self) -> float:
        return sum(p.name_similarity for p in self.column_pairs) / len(self.column_pairs)


@dataclass
class SearchResult:
    dataset_id: str
    total_score: float
    score_breakdown: dict[str, float]
    snippet: dict
    augmentation: JoinCandidate | UnionCandidate | None = None


# --- gazetteer ---


class Gazetteer:
    """Named area -> bounding box; administrative areas become boxes here."""

    def __init__(self, table: dict[str, BoundingBox]) -> None:
        self._table = table

    @classmethod
    def bundled(cls) -> "Gazetteer":
        raw = json.loads(
            resources.files("datascout").joinpath("data/gazetteer.json").read_text()
        )
        table = {
            name: BoundingBox(p1[0], p2[0], p1[1], p2[1])
            for name, (p1, p2) in raw.items()
        }
        return cls(table)

    def resolve(self, name: str) -> BoundingBox:
        key = " ".join(name.strip().casefold().split())
        if key not in self._table:
            raise UnknownNamedArea(f"unknown named area: {name!r}", area=name)
        return self._table[key]

    def names(self) -> list[str]:
        return sorted(self._table)


# --- name similarity ---


def _fold_name(name: str) -> str:
    return _FOLD_RE.sub("_", name.strip().casefold())


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(cur[j - 1] + 1, prev[j] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def name_similarity(a: str, b: str) -> float:
    """1 - normalized edit distance over folded names (case, whitespace and
    _ / - runs collapse). Two empty names count as identical."""
    fa, fb = _fold_name(a), _fold_name(b)
    longest = max(len(fa), len(fb))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(fa, fb) / longest


# --- join search ---


def join_search(
    query_profile: DatasetProfile,
    shard: IndexShard,
    floor: float = JOIN_PAIR_FLOOR,
) -> list[JoinCandidate]:
    """Datasets with at least one column whose summary intersects a query
    column's summary, scored by estimated containment of the query column."""
    pairs_by_dataset: dict[str, list[JoinPair]] = {}

    def add(dataset_id: str, pair: JoinPair) -> None:
        if dataset_id == query_profile.id:
            return
        if pair.containment_score >= floor:
            pairs_by_dataset.setdefault(dataset_id, []).append(pair)

    spatial_lats = {lat for lat, _ in query_profile.spatial_coverage}
    spatial_lons = {lon for _, lon in query_profile.spatial_coverage}
    for col in query_profile.columns:
        kind = col.effective_type
        if kind is ColumnType.CATEGORICAL and isinstance(col.summary, CategoricalSketch):
            for dataset_id, column in shard.query_lsh(col.summary):
                candidate = shard.get(dataset_id).column(column).summary
                if isinstance(candidate, CategoricalSketch):
                    score = estimate_containment(col.summary, candidate)
                    add(dataset_id, JoinPair(col.name, column, "categorical", score))
        elif kind in (ColumnType.NUMERICAL, ColumnType.TEMPORAL) and isinstance(
            col.summary, NumericSummary
        ):
            envelope = col.summary.envelope()
            if envelope is None:
                continue
            probe = (
                shard.query_temporal if kind is ColumnType.TEMPORAL else shard.query_numeric
            )
            label = "temporal" if kind is ColumnType.TEMPORAL else "numeric"
            for dataset_id, column, _ in probe(*envelope):
                candidate = shard.get(dataset_id).column(column).summary
                if isinstance(candidate, NumericSummary):
                    score = estimate_range_overlap(col.summary, candidate)
                    add(dataset_id, JoinPair(col.name, column, label, score))
        elif col.name in spatial_lats and isinstance(col.summary, SpatialSummary):
            envelope = col.summary.envelope()
            if envelope is None:
                continue
            lon_name = next(
                lon for lat, lon in query_profile.spatial_coverage if lat == col.name
            )
            for dataset_id, (cand_lat, cand_lon), _ in shard.query_spatial(*envelope):
                candidate = shard.get(dataset_id).column(cand_lat).summary
                if isinstance(candidate, SpatialSummary):
                    score = estimate_spatial_overlap(col.summary, candidate)
                    # one spatial match contributes both axis pairs so an
                    # augmentation spec can map columns one-to-one
                    add(dataset_id, JoinPair(col.name, cand_lat, "spatial", score))
                    add(dataset_id, JoinPair(lon_name, cand_lon, "spatial", score))
        elif col.name in spatial_lons:
            continue  # handled with its latitude partner

    candidates = []
    for dataset_id, pairs in pairs_by_dataset.items():
        pairs.sort(key=lambda p: (-p.containment_score, p.query_column, p.candidate_column))
        candidates.append(JoinCandidate(dataset_id, pairs))
    candidates.sort(key=lambda c: (-c.join_score, c.dataset_id))
    return candidates


# --- union search ---


def union_search(
    query_profile: DatasetProfile,
    shard: IndexShard,
    threshold: float = UNION_NAME_THRESHOLD,
) -> list[UnionCandidate]:
    """Datasets whose columns match the query's columns by equal type and
    similar name; a candidate may cover only a subset of the query columns."""
    candidates = []
    for dataset_id in shard.ids():
        if dataset_id == query_profile.id:
            continue
        other = shard.get(dataset_id)
        edges = []
        for qcol in query_profile.columns:
            for ccol in other.columns:
                if qcol.effective_type is not ccol.effective_type:
                    continue
                similarity = name_similarity(qcol.name, ccol.name)
                if similarity >= threshold:
                    edges.append((similarity, qcol.name, ccol.name))
        # greedy matching by descending similarity; ties by query column name
        edges.sort(key=lambda e: (-e[0], e[1], e[2]))
        used_q: set[str] = set()
        used_c: set[str] = set()
        pairs = []
        for similarity, qname, cname in edges:
            if qname in used_q or cname in used_c:
                continue
            used_q.add(qname)
            used_c.add(cname)
            pairs.append(UnionPair(qname, cname, similarity))
        if pairs:
            candidates.append(
                UnionCandidate(dataset_id, pairs, len(pairs) / len(query_profile.columns))
            )
    candidates.sort(key=lambda c: (-c.union_score, c.dataset_id))
    return candidates


# --- snippets ---


def make_snippet(profile: DatasetProfile) -> dict:
    """Deterministic result-card projection of a profile."""
    snippet = {
        "name": profile.name,
        "source": profile.source,
        "row_count": profile.row_count,
        "columns": [
            {"name": c.name, "type": c.effective_type.value} for c in profile.columns
        ],
        "top_values": {c.name: [[v, n] for v, n in c.top_values] for c in profile.columns},
        "sample": profile.sample,
    }
    temporal_ranges = [
        r
        for c in profile.columns
        if isinstance(c.summary, TemporalSummary)
        for r in c.summary.ranges
    ]
    if temporal_ranges:
        snippet["temporal_extent"] = [
            format_iso_utc(min(r.lo for r in temporal_ranges)),
            format_iso_utc(max(r.hi for r in temporal_ranges)),
        ]
    boxes = [
        b
        for lat, _ in profile.spatial_coverage
        if isinstance(profile.column(lat).summary, SpatialSummary)
        for b in profile.column(lat).summary.boxes
    ]
    if boxes:
        snippet["spatial_extent"] = [
            [min(b.lat_min for b in boxes), min(b.lon_min for b in boxes)],
            [max(b.lat_max for b in boxes), max(b.lon_max for b in boxes)],
        ]
    return snippet


# --- query evaluation ---


def execute_query(
    query: Query,
    shard: IndexShard,
    gazetteer: Gazetteer | None = None,
    weights: dict[str, float] | None = None,
) -> tuple[list[SearchResult], int]:
    """Evaluate a query; returns (page of results, total result count)."""
    query.validate()
    weights = weights or DEFAULT_WEIGHTS
    hit_sets: list[set[str]] = []
    overlaps: list[dict[str, float]] = []  # per active filter: id -> fraction

    keyword_scores: dict[str, float] = {}
    if query.keywords:
        keyword_scores = dict(shard.query_keyword(query.keywords))
        hit_sets.append(set(keyword_scores))

    if query.temporal:
        per_dataset: dict[str, float] = {}
        for dataset_id, column, fraction in shard.query_temporal(
            query.temporal.start, query.temporal.end
        ):
            if query.temporal.resolution is not None:
                col = shard.get(dataset_id).column(column)
                if (
                    col.temporal_resolution is None
                    or col.temporal_resolution > query.temporal.resolution
                ):
                    continue  # column is coarser than requested
            per_dataset[dataset_id] = max(per_dataset.get(dataset_id, 0.0), fraction)
        hit_sets.append(set(per_dataset))
        overlaps.append(per_dataset)

    if query.spatial:
        box = query.spatial.box
        if box is None:
            box = (gazetteer or Gazetteer.bundled()).resolve(query.spatial.area or "")
        per_dataset = {}
        for dataset_id, _pair, fraction in shard.query_spatial(
            box.lat_min, box.lat_max, box.lon_min, box.lon_max
        ):
            per_dataset[dataset_id] = max(per_dataset.get(dataset_id, 0.0), fraction)
        hit_sets.append(set(per_dataset))
        overlaps.append(per_dataset)

    if query.sources is not None:
        matched = {
            ds for ds in shard.ids() if shard.get(ds).source in query.sources
        }
        hit_sets.append(matched)
        overlaps.append({ds: 1.0 for ds in matched})

    if query.required_types is not None:
        matched = set()
        for ds in shard.ids():
            types = {c.effective_type for c in shard.get(ds).columns}
            if query.required_types <= types:
                matched.add(ds)
        hit_sets.append(matched)
        overlaps.append({ds: 1.0 for ds in matched})

    join_by_dataset: dict[str, JoinCandidate] = {}
    union_by_dataset: dict[str, UnionCandidate] = {}
    if query.related:
        if query.related.mode in ("join", "either"):
            join_by_dataset = {
                c.dataset_id: c for c in join_search(query.related.profile, shard)
            }
        if query.related.mode in ("union", "either"):
            union_by_dataset = {
                c.dataset_id: c for c in union_search(query.related.profile, shard)
            }
        hit_sets.append(set(join_by_dataset) | set(union_by_dataset))

    candidates: set[str] = set.intersection(*hit_sets) if hit_sets else set()

    max_keyword = max((keyword_scores[ds] for ds in candidates & set(keyword_scores)), default=0.0)
    results = []
    for ds in candidates:
        breakdown = {"keyword": 0.0, "filter_overlap": 0.0, "join": 0.0, "union": 0.0}
        used_weight = 0.0
        score = 0.0
        if query.keywords:
            breakdown["keyword"] = (
                keyword_scores.get(ds, 0.0) / max_keyword if max_keyword > 0 else 0.0
            )
            score += weights["keyword"] * breakdown["keyword"]
            used_weight += weights["keyword"]
        if overlaps:
            breakdown["filter_overlap"] = sum(o.get(ds, 0.0) for o in overlaps) / len(overlaps)
            score += weights["filter"] * breakdown["filter_overlap"]
            used_weight += weights["filter"]
        augmentation: JoinCandidate | UnionCandidate | None = None
        if query.related:
            join_c = join_by_dataset.get(ds)
            union_c = union_by_dataset.get(ds)
            breakdown["join"] = join_c.join_score if join_c else 0.0
            breakdown["union"] = union_c.union_score if union_c else 0.0
            related_score = max(breakdown["join"], breakdown["union"])
            augmentation = (
                join_c if breakdown["join"] >= breakdown["union"] and join_c else union_c
            )
            score += weights["related"] * related_score
            used_weight += weights["related"]
        total = score / used_weight if used_weight > 0 else 0.0
        results.append(
            SearchResult(ds, total, breakdown, make_snippet(shard.get(ds)), augmentation)
        )

    results.sort(key=lambda r: (-r.total_score, r.dataset_id))
    total = len(results)
    page = results[query.page.offset : query.page.offset + query.page.limit]
    return page, total


# --- canonical JSON encodings ---


def query_to_json(query: Query) -> dict:
    doc: dict = {}
    if query.keywords:
        doc["keywords"] = list(query.keywords)
    if query.temporal:
        doc["temporal"] = {
            "start": format_iso_utc(query.temporal.start),
            "end": format_iso_utc(query.temporal.end),
        }
        if query.temporal.resolution:
            doc["temporal"]["resolution"] = query.temporal.resolution.label
    if query.spatial:
        if query.spatial.box:
            b = query.spatial.box
            doc["spatial"] = {"box": [[b.lat_min, b.lon_min], [b.lat_max, b.lon_max]]}
        else:
            doc["spatial"] = {"area": query.spatial.area}
    if query.sources is not None:
        doc["sources"] = sorted(query.sources)
    if query.required_types is not None:
        doc["required_types"] = sorted(t.value for t in query.required_types)
    if query.related:
        doc["related"] = {"mode": query.related.mode, "dataset_id": query.related.profile.id}
    doc["page"] = {"offset": query.page.offset, "limit": query.page.limit}
    return doc


def _parse_query_time(value) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    ts = parse_timestamp(str(value), name_hint=True)
    if ts is None:
        raise InvalidQuery(f"cannot parse timestamp {value!r}")
    return ts


def query_from_json(doc: dict, resolve_profile=None) -> Query:
    """Decode the canonical query JSON. ``resolve_profile`` maps a dataset id
    to a DatasetProfile when ``related.dataset_id`` is used; a profile passed
    inline under ``related.profile`` is decoded directly."""
    from .profiler import profile_from_json

    if not isinstance(doc, dict):
        raise InvalidQuery("query body must be a JSON object")
    query = Query()
    query.keywords = [str(k) for k in doc.get("keywords", [])]
    if doc.get("temporal"):
        t = doc["temporal"]
        if "start" not in t or "end" not in t:
            raise InvalidQuery("temporal filter needs start and end")
        query.temporal = TemporalFilter(
            _parse_query_time(t["start"]),
            _parse_query_time(t["end"]),
            Resolution.from_label(t["resolution"]) if t.get("resolution") else None,
        )
    if doc.get("spatial"):
        s = doc["spatial"]
        box = None
        if s.get("box"):
            (lat1, lon1), (lat2, lon2) = s["box"]
            box = BoundingBox(float(lat1), float(lat2), float(lon1), float(lon2))
        query.spatial = SpatialFilter(box=box, area=s.get("area"))
    if doc.get("sources") is not None:
        query.sources = {str(s) for s in doc["sources"]}
    if doc.get("required_types") is not None:
        try:
            query.required_types = {
                ColumnType.from_label(t) for t in doc["required_types"]
            }
        except ValueError as exc:
            raise InvalidQuery(str(exc)) from exc
    if doc.get("related"):
        r = doc["related"]
        mode = str(r.get("mode", "either"))
        if r.get("profile"):
            profile = profile_from_json(r["profile"])
        elif r.get("dataset_id") and resolve_profile is not None:
            profile = resolve_profile(str(r["dataset_id"]))
        else:
            raise InvalidQuery("related needs a profile or a resolvable dataset_id")
        query.related = RelatedInput(profile, mode)
    if doc.get("page"):
        query.page = Page(
            int(doc["page"].get("offset", 0)), int(doc["page"].get("limit", 20))
        )
    return query


def augmentation_to_json(match: JoinCandidate | UnionCandidate | None) -> dict | None:
    if match is None:
        return None
    if isinstance(match, JoinCandidate):
        return {
            "mode": "join",
            "dataset_id": match.dataset_id,
            "pairs": [
                {
                    "query_column": p.query_column,
                    "candidate_column": p.candidate_column,
                    "kind": p.kind,
                    "containment_score": p.containment_score,
                }
                for p in match.pairs
            ],
            "join_score": match.join_score,
        }
    return {
        "mode": "union",
        "dataset_id": match.dataset_id,
        "column_pairs": [
            {
                "query_column": p.query_column,
                "candidate_column": p.candidate_column,
                "name_similarity": p.name_similarity,
            }
            for p in match.column_pairs
        ],
        "union_score": match.union_score,
        "matched_fraction": match.matched_fraction,
    }


def result_to_json(result: SearchResult) -> dict:
    return {
        "dataset_id": result.dataset_id,
        "total_score": result.total_score,
        "score_breakdown": result.score_breakdown,
        "snippet": result.snippet,
        "augmentation": augmentation_to_json(result.augmentation),
    }
