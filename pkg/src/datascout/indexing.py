"""In-process indices over dataset profiles.

One IndexShard holds everything a deployment has registered: BM25 keyword
postings over name/description/column names, sorted interval lists for
numeric and temporal summaries, a box list for spatial summaries, and LSH
band tables over categorical MinHash signatures. All structures reference
datasets by id; the profile store inside the shard is authoritative.

Interval semantics are closed everywhere: ranges touching at an endpoint
overlap. Mutations and queries are serialized through one re-entrant lock,
which satisfies the many-readers-or-one-writer contract at desk scale.
"""

from __future__ import annotations

import hashlib
import math
import re
import struct
import threading
from bisect import bisect_right, insort
from dataclasses import dataclass, field

from .errors import SignatureLengthMismatch
from .profiler import ColumnType, DatasetProfile
from .sketches import (
    CategoricalSketch,
    NumericSummary,
    RangeBucket,
    SpatialSummary,
    estimate_range_overlap,
    estimate_spatial_overlap,
)

BM25_K1 = 1.2
BM25_B = 0.75

# Keyword field weights: title matches should dominate.
WEIGHT_NAME = 3.0
WEIGHT_DESCRIPTION = 1.0
WEIGHT_COLUMN = 2.0

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Case-folded ASCII-alphanumeric tokens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class LshParams:
    """32 bands x 4 rows over 128-position signatures; the s-curve midpoint
    sits near (1/32)^(1/4) ~ 0.42, the union/join candidate regime."""

    bands: int = 32
    rows: int = 4

    @property
    def signature_length(self) -> int:
        return self.bands * self.rows


@dataclass
class _RangeEntry:
    lo: float
    hi: float
    dataset_id: str
    column: str


@dataclass
class _SpatialEntry:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    dataset_id: str
    lat_column: str
    lon_column: str


def _band_key(band: int, values: list[int]) -> int:
    payload = struct.pack("<I4Q", band, *values)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


@dataclass
class IndexShard:
    lsh_params: LshParams = field(default_factory=LshParams)

    def __post_init__(self) -> None:
        self.profiles: dict[str, DatasetProfile] = {}
        self.generation = 0
        self._postings: dict[str, dict[str, float]] = {}
        self._doc_len: dict[str, float] = {}
        self._numeric: list[_RangeEntry] = []
        self._temporal: list[_RangeEntry] = []
        self._spatial: list[_SpatialEntry] = []
        self._lsh_tables: list[dict[int, list[tuple[str, str]]]] = [
            {} for _ in range(self.lsh_params.bands)
        ]
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self.profiles)

    def has(self, dataset_id: str) -> bool:
        return dataset_id in self.profiles

    def get(self, dataset_id: str) -> DatasetProfile:
        return self.profiles[dataset_id]

    def ids(self) -> list[str]:
        return sorted(self.profiles)

    # --- mutation ---

    def add_dataset(self, profile: DatasetProfile) -> int:
        with self._lock:
            if profile.id in self.profiles:
                self._remove_entries(self.profiles[profile.id])
            self.profiles[profile.id] = profile
            self._add_entries(profile)
            self.generation += 1
            return self.generation

    def remove_dataset(self, dataset_id: str) -> int:
        with self._lock:
            profile = self.profiles.pop(dataset_id, None)
            if profile is not None:
                self._remove_entries(profile)
            self.generation += 1
            return self.generation

    def _keyword_bag(self, profile: DatasetProfile) -> dict[str, float]:
        bag: dict[str, float] = {}
        for text, weight in (
            (profile.name, WEIGHT_NAME),
            (profile.description, WEIGHT_DESCRIPTION),
        ):
            for token in tokenize(text):
                bag[token] = bag.get(token, 0.0) + weight
        for col in profile.columns:
            for token in tokenize(col.name):
                bag[token] = bag.get(token, 0.0) + WEIGHT_COLUMN
        return bag

    def _add_entries(self, profile: DatasetProfile) -> None:
        bag = self._keyword_bag(profile)
        for token, weight in bag.items():
            self._postings.setdefault(token, {})[profile.id] = weight
        self._doc_len[profile.id] = sum(bag.values())

        spatial_lats = {lat for lat, _ in profile.spatial_coverage}
        for col in profile.columns:
            kind = col.effective_type
            summary = col.summary
            if kind is ColumnType.NUMERICAL and isinstance(summary, NumericSummary):
                self._insert_range(self._numeric, profile.id, col.name, summary)
            elif kind is ColumnType.TEMPORAL and isinstance(summary, NumericSummary):
                self._insert_range(self._temporal, profile.id, col.name, summary)
            elif isinstance(summary, CategoricalSketch):
                self._insert_sketch(profile.id, col.name, summary)
            elif (
                isinstance(summary, SpatialSummary)
                and col.name in spatial_lats
            ):
                self._insert_spatial(profile, col.name, summary)

    def _insert_range(
        self, entries: list[_RangeEntry], dataset_id: str, column: str, summary: NumericSummary
    ) -> None:
        env = summary.envelope()
        if env is None:
            return
        insort(entries, _RangeEntry(env[0], env[1], dataset_id, column), key=lambda e: e.lo)

    def _insert_sketch(self, dataset_id: str, column: str, sketch: CategoricalSketch) -> None:
        expected = self.lsh_params.signature_length
        if len(sketch.signature) != expected:
            raise SignatureLengthMismatch(
                f"index is configured for {expected}-position signatures",
                got=len(sketch.signature),
            )
        rows = self.lsh_params.rows
        for band in range(self.lsh_params.bands):
            key = _band_key(band, sketch.signature[band * rows : (band + 1) * rows])
            self._lsh_tables[band].setdefault(key, []).append((dataset_id, column))

    def _insert_spatial(self, profile: DatasetProfile, lat_column: str, summary: SpatialSummary) -> None:
        env = summary.envelope()
        if env is None:
            return
        lon_column = next(
            lon for lat, lon in profile.spatial_coverage if lat == lat_column
        )
        self._spatial.append(
            _SpatialEntry(env[0], env[1], env[2], env[3], profile.id, lat_column, lon_column)
        )

    def _remove_entries(self, profile: DatasetProfile) -> None:
        for token in self._keyword_bag(profile):
            docs = self._postings.get(token)
            if docs is not None:
                docs.pop(profile.id, None)
                if not docs:
                    del self._postings[token]
        self._doc_len.pop(profile.id, None)
        self._numeric = [e for e in self._numeric if e.dataset_id != profile.id]
        self._temporal = [e for e in self._temporal if e.dataset_id != profile.id]
        self._spatial = [e for e in self._spatial if e.dataset_id != profile.id]
        for table in self._lsh_tables:
            empty_keys = []
            for key, bucket in table.items():
                table[key] = [entry for entry in bucket if entry[0] != profile.id]
                if not table[key]:
                    empty_keys.append(key)
            for key in empty_keys:
                del table[key]

    # --- queries ---

    def query_keyword(self, tokens: list[str]) -> list[tuple[str, float]]:
        """BM25 over the weighted keyword bags; ties broken by dataset id."""
        with self._lock:
            n = len(self.profiles)
            if n == 0 or not tokens:
                return []
            avgdl = sum(self._doc_len.values()) / n
            scores: dict[str, float] = {}
            seen: set[str] = set()
            for raw in tokens:
                for token in tokenize(raw):
                    if token in seen:
                        continue
                    seen.add(token)
                    docs = self._postings.get(token)
                    if not docs:
                        continue
                    idf = math.log(1.0 + (n - len(docs) + 0.5) / (len(docs) + 0.5))
                    for dataset_id, tf in docs.items():
                        dl = self._doc_len[dataset_id]
                        denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / max(avgdl, 1e-12))
                        scores[dataset_id] = scores.get(dataset_id, 0.0) + idf * tf * (
                            BM25_K1 + 1.0
                        ) / denom
            return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))

    def _query_ranges(
        self, entries: list[_RangeEntry], lo: float, hi: float
    ) -> list[tuple[str, str, float]]:
        window = NumericSummary([RangeBucket(lo, hi, 1)], 1)
        cutoff = bisect_right(entries, hi, key=lambda e: e.lo)
        hits = []
        for entry in entries[:cutoff]:
            if entry.hi < lo:
                continue
            summary = self.profiles[entry.dataset_id].column(entry.column).summary
            if not isinstance(summary, NumericSummary):
                continue
            if any(r.lo <= hi and lo <= r.hi for r in summary.ranges):
                fraction = estimate_range_overlap(summary, window)
                hits.append((entry.dataset_id, entry.column, fraction))
        hits.sort(key=lambda h: (h[0], h[1]))
        return hits

    def query_temporal(self, start: float, end: float) -> list[tuple[str, str, float]]:
        """Columns whose temporal summary intersects [start, end] (closed),
        with the fraction of the column's records inside the window."""
        with self._lock:
            return self._query_ranges(self._temporal, start, end)

    def query_numeric(self, lo: float, hi: float) -> list[tuple[str, str, float]]:
        with self._lock:
            return self._query_ranges(self._numeric, lo, hi)

    def query_spatial(
        self, lat_min: float, lat_max: float, lon_min: float, lon_max: float
    ) -> list[tuple[str, tuple[str, str], float]]:
        """Spatial pairs with at least one summary box intersecting the query box."""
        from .sketches import BoxBucket

        with self._lock:
            window = SpatialSummary([BoxBucket(lat_min, lat_max, lon_min, lon_max, 1)], 1)
            hits = []
            for entry in self._spatial:
                if entry.lat_min > lat_max or entry.lat_max < lat_min:
                    continue
                if entry.lon_min > lon_max or entry.lon_max < lon_min:
                    continue
                summary = (
                    self.profiles[entry.dataset_id].column(entry.lat_column).summary
                )
                if not isinstance(summary, SpatialSummary):
                    continue
                if any(
                    b.lat_min <= lat_max
                    and lat_min <= b.lat_max
                    and b.lon_min <= lon_max
                    and lon_min <= b.lon_max
                    for b in summary.boxes
                ):
                    fraction = estimate_spatial_overlap(summary, window)
                    hits.append(
                        (entry.dataset_id, (entry.lat_column, entry.lon_column), fraction)
                    )
            hits.sort(key=lambda h: (h[0], h[1]))
            return hits

    def query_lsh(self, sketch: CategoricalSketch) -> list[tuple[str, str]]:
        """Union of band-bucket collisions; scoring happens downstream."""
        expected = self.lsh_params.signature_length
        if len(sketch.signature) != expected:
            raise SignatureLengthMismatch(
                f"index is configured for {expected}-position signatures",
                got=len(sketch.signature),
            )
        with self._lock:
            rows = self.lsh_params.rows
            found: set[tuple[str, str]] = set()
            for band in range(self.lsh_params.bands):
                key = _band_key(band, sketch.signature[band * rows : (band + 1) * rows])
                found.update(self._lsh_tables[band].get(key, ()))
            return sorted(found)

    def stats(self) -> dict:
        """Collection statistics for the UI panel."""
        with self._lock:
            per_source: dict[str, int] = {}
            per_type: dict[str, int] = {}
            for profile in self.profiles.values():
                per_source[profile.source] = per_source.get(profile.source, 0) + 1
                for col in profile.columns:
                    label = col.effective_type.value
                    per_type[label] = per_type.get(label, 0) + 1
            return {
                "dataset_count": len(self.profiles),
                "per_source": dict(sorted(per_source.items())),
                "per_type": dict(sorted(per_type.items())),
                "generation": self.generation,
            }
