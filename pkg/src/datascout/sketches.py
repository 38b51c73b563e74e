"""Column summaries and overlap estimation.

Four summary kinds cover the column types: numeric and temporal columns get
k-means range summaries, spatial pairs get k-means bounding boxes, and
categorical columns get MinHash signatures. Join search relies on the
estimators at the bottom of this module to score candidate pairs without
touching raw data.

The 1-D clustering is solved exactly (dynamic programming over contiguous
partitions of the distinct values) whenever the distinct count is small
enough; above that it falls back to Lloyd iterations seeded at evenly-spaced
quantiles. Both paths are deterministic.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NonFiniteValue, SignatureLengthMismatch
from .timestamps import Resolution

DEFAULT_RANGES_PER_COLUMN = 8
DEFAULT_PERMUTATIONS = 128

# Above this many distinct values the exact DP would be too slow; Lloyd with
# quantile init is used instead.
_EXACT_KMEANS_LIMIT = 1024

_LLOYD_MAX_ITERATIONS = 100

# Global MinHash permutation seed. Fixed for every deployment so any two
# sketches are comparable; changing it invalidates all persisted sketches.
_MINHASH_SEED = 0x5EED_DA7A
_U64 = np.uint64


# --- summary types ---


@dataclass
class RangeBucket:
    lo: float
    hi: float
    member_count: int


@dataclass
class NumericSummary:
    ranges: list[RangeBucket]
    total_count: int

    kind = "numeric"

    def envelope(self) -> tuple[float, float] | None:
        if not self.ranges:
            return None
        return self.ranges[0].lo, max(r.hi for r in self.ranges)


@dataclass
class TemporalSummary(NumericSummary):
    resolution: Resolution = Resolution.DAY

    kind = "temporal"


@dataclass
class BoxBucket:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    member_count: int


@dataclass
class SpatialSummary:
    boxes: list[BoxBucket]
    total_count: int

    kind = "spatial"

    def envelope(self) -> tuple[float, float, float, float] | None:
        if not self.boxes:
            return None
        return (
            min(b.lat_min for b in self.boxes),
            max(b.lat_max for b in self.boxes),
            min(b.lon_min for b in self.boxes),
            max(b.lon_max for b in self.boxes),
        )


@dataclass
class CategoricalSketch:
    signature: list[int] = field(repr=False)
    cardinality: int

    kind = "categorical"


ColumnSummary = NumericSummary | SpatialSummary | CategoricalSketch


# --- 1-D k-means ---


def _weighted_distinct(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    distinct, counts = np.unique(values, return_counts=True)
    return distinct, counts.astype(np.float64)


def _kmeans_1d_exact(x: np.ndarray, w: np.ndarray, k: int) -> list[int]:
    """Optimal contiguous partition of weighted sorted values into k clusters.

    Returns the boundary indices (length k+1, first 0, last len(x)). Optimal
    1-D k-means clusters are contiguous in sorted order, so DP over split
    points finds the global SSE minimum.
    """
    d = len(x)
    pw = np.concatenate(([0.0], np.cumsum(w)))
    ps = np.concatenate(([0.0], np.cumsum(w * x)))
    pq = np.concatenate(([0.0], np.cumsum(w * x * x)))

    def seg_cost(i: np.ndarray, j: int) -> np.ndarray:
        # weighted SSE of x[i..j] for a vector of start indices i
        ww = pw[j + 1] - pw[i]
        ss = ps[j + 1] - ps[i]
        qq = pq[j + 1] - pq[i]
        return qq - ss * ss / ww

    cost = np.full((k, d), np.inf)
    split = np.zeros((k, d), dtype=np.int64)
    cost[0] = pq[1:] - ps[1:] * ps[1:] / pw[1:]
    for m in range(1, k):
        for j in range(m, d):
            starts = np.arange(m, j + 1)
            totals = cost[m - 1][starts - 1] + seg_cost(starts, j)
            best = int(np.argmin(totals))
            cost[m][j] = totals[best]
            split[m][j] = starts[best]
    bounds = [d]
    j = d - 1
    for m in range(k - 1, 0, -1):
        s = int(split[m][j])
        bounds.append(s)
        j = s - 1
    bounds.append(0)
    return bounds[::-1]


def _kmeans_1d_lloyd(x: np.ndarray, w: np.ndarray, k: int) -> list[int]:
    """Lloyd iterations on weighted distinct values, quantile-seeded.

    Returns contiguous cluster boundaries (1-D nearest-center assignment is
    always contiguous over sorted values).
    """
    d = len(x)
    centers = x[np.round(np.arange(k) * (d - 1) / (k - 1)).astype(int)].astype(float)
    assign = None
    for _ in range(_LLOYD_MAX_ITERATIONS):
        dist = np.abs(x[:, None] - centers[None, :])
        new_assign = np.argmin(dist, axis=1)  # ties go to the lower index
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            mask = assign == c
            if mask.any():
                centers[c] = np.average(x[mask], weights=w[mask])
    bounds = [0]
    for i in range(1, d):
        if assign[i] != assign[i - 1]:
            bounds.append(i)
    bounds.append(d)
    return bounds


def _cluster_1d(values: np.ndarray, k: int) -> list[RangeBucket]:
    x, w = _weighted_distinct(values)
    kk = min(k, len(x))
    if kk == 1:
        return [RangeBucket(float(x[0]), float(x[-1]), int(w.sum()))]
    if len(x) <= _EXACT_KMEANS_LIMIT:
        bounds = _kmeans_1d_exact(x, w, kk)
    else:
        bounds = _kmeans_1d_lloyd(x, w, kk)
    buckets = []
    for a, b in zip(bounds, bounds[1:]):
        if a == b:
            continue
        buckets.append(RangeBucket(float(x[a]), float(x[b - 1]), int(w[a:b].sum())))
    return buckets


def build_numeric_summary(values, k: int = DEFAULT_RANGES_PER_COLUMN) -> NumericSummary:
    """Cluster values into at most k ranges, each [min, max] of its members."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return NumericSummary([], 0)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("numeric summary input contains NaN or infinity")
    if k < 1:
        raise ValueError("k must be >= 1")
    return NumericSummary(_cluster_1d(arr, k), int(arr.size))


def build_temporal_summary(
    timestamps, k: int = DEFAULT_RANGES_PER_COLUMN, resolution: Resolution = Resolution.DAY
) -> TemporalSummary:
    base = build_numeric_summary(timestamps, k)
    return TemporalSummary(base.ranges, base.total_count, resolution)


# --- 2-D k-means ---


def build_spatial_summary(points, k: int = DEFAULT_RANGES_PER_COLUMN) -> SpatialSummary:
    """Cluster (lat, lon) points; each cluster becomes its bounding box."""
    pts = np.asarray(list(points), dtype=np.float64).reshape(-1, 2)
    if pts.size == 0:
        return SpatialSummary([], 0)
    if not np.all(np.isfinite(pts)):
        raise NonFiniteValue("spatial summary input contains NaN or infinity")
    if k < 1:
        raise ValueError("k must be >= 1")
    distinct = np.unique(pts, axis=0)
    kk = min(k, len(distinct))
    if kk == 1:
        assign = np.zeros(len(pts), dtype=int)
    else:
        centers = _quantile_grid_centers(distinct, kk)
        assign = None
        for _ in range(_LLOYD_MAX_ITERATIONS):
            d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_assign = np.argmin(d2, axis=1)
            if assign is not None and np.array_equal(new_assign, assign):
                break
            assign = new_assign
            for c in range(kk):
                mask = assign == c
                if mask.any():
                    centers[c] = pts[mask].mean(axis=0)
    boxes = []
    for c in sorted(set(assign.tolist())):
        member = pts[assign == c]
        boxes.append(
            BoxBucket(
                float(member[:, 0].min()),
                float(member[:, 0].max()),
                float(member[:, 1].min()),
                float(member[:, 1].max()),
                int(member.shape[0]),
            )
        )
    boxes.sort(key=lambda b: (b.lat_min, b.lon_min, b.lat_max, b.lon_max))
    return SpatialSummary(boxes, int(pts.shape[0]))


def _quantile_grid_centers(distinct: np.ndarray, k: int) -> np.ndarray:
    """Deterministic init: a g x g grid of per-axis quantiles, thinned to k."""
    g = math.ceil(math.sqrt(k))
    qs = (np.arange(g) + 0.5) / g
    lat_q = np.quantile(distinct[:, 0], qs)
    lon_q = np.quantile(distinct[:, 1], qs)
    grid = np.array([(la, lo) for la in lat_q for lo in lon_q])
    idx = np.round(np.arange(k) * (len(grid) - 1) / max(k - 1, 1)).astype(int)
    return grid[idx].astype(float).copy()


# --- MinHash sketches ---


@lru_cache(maxsize=4)
def _permutations(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Fixed multiply-add permutation parameters; odd multipliers are
    bijections on the 64-bit space, so each (a, b) permutes hash values."""
    rng = np.random.default_rng(_MINHASH_SEED)
    a = rng.integers(0, 2**64, size=n, dtype=_U64) | _U64(1)
    b = rng.integers(0, 2**64, size=n, dtype=_U64)
    return a, b


def normalize_categorical(value: str) -> str:
    """Canonical form hashed into sketches and used as a categorical join key."""
    return value.strip().casefold()


def _base_hash(value: str) -> int:
    return int.from_bytes(
        hashlib.blake2b(value.encode("utf-8"), digest_size=8).digest(), "little"
    )


def build_categorical_sketch(
    values,
    num_permutations: int = DEFAULT_PERMUTATIONS,
    cardinality: int | None = None,
) -> CategoricalSketch:
    """MinHash the distinct normalized values; order and multiplicity do not
    affect the signature."""
    distinct = {normalize_categorical(v) for v in values}
    distinct.discard("")
    a, b = _permutations(num_permutations)
    if not distinct:
        return CategoricalSketch([2**64 - 1] * num_permutations, 0)
    base = np.fromiter(
        (_base_hash(v) for v in distinct), dtype=_U64, count=len(distinct)
    )
    sig = np.full(num_permutations, 2**64 - 1, dtype=_U64)
    for start in range(0, len(base), 4096):
        block = base[start : start + 4096]
        hashed = block[:, None] * a[None, :] + b[None, :]  # wraps mod 2^64
        sig = np.minimum(sig, hashed.min(axis=0))
    card = cardinality if cardinality is not None else len(distinct)
    return CategoricalSketch([int(v) for v in sig], card)


def estimate_cardinality(sketch: CategoricalSketch) -> int:
    """Distinct-count estimate from the signature: each minimum of n uniform
    draws has expectation 1/(n+1)."""
    if not sketch.signature:
        return 0
    mean_min = sum(v / 2**64 for v in sketch.signature) / len(sketch.signature)
    if mean_min <= 0:
        return 0
    return max(0, round(1.0 / mean_min - 1.0))


def estimate_jaccard(s1: CategoricalSketch, s2: CategoricalSketch) -> float:
    """Fraction of matching signature positions."""
    if len(s1.signature) != len(s2.signature):
        raise SignatureLengthMismatch(
            "signature lengths differ",
            left=len(s1.signature),
            right=len(s2.signature),
        )
    matches = sum(1 for a, b in zip(s1.signature, s2.signature) if a == b)
    return matches / len(s1.signature)


def estimate_containment(query: CategoricalSketch, candidate: CategoricalSketch) -> float:
    """|A ∩ B| / |A| with A the query column, via the Jaccard estimate and the
    two known cardinalities: inter = J(|A|+|B|)/(1+J)."""
    if query.cardinality == 0 or candidate.cardinality == 0:
        return 0.0
    j = estimate_jaccard(query, candidate)
    intersection = j * (query.cardinality + candidate.cardinality) / (1.0 + j)
    return min(1.0, max(0.0, intersection / query.cardinality))


# --- range / box overlap ---


def estimate_range_overlap(query: NumericSummary, candidate: NumericSummary) -> float:
    """Weighted fraction of the query summary covered by the candidate's
    ranges. Each query range contributes member_count/total_count times its
    covered length fraction; a point range counts 1 when it lies inside any
    candidate range. Not symmetric.
    """
    if not query.ranges or query.total_count == 0 or not candidate.ranges:
        return 0.0
    total = 0.0
    for r in query.ranges:
        weight = r.member_count / query.total_count
        if r.hi == r.lo:
            covered = any(c.lo <= r.lo <= c.hi for c in candidate.ranges)
            coverage = 1.0 if covered else 0.0
        else:
            overlap = sum(
                max(0.0, min(r.hi, c.hi) - max(r.lo, c.lo)) for c in candidate.ranges
            )
            coverage = min(1.0, overlap / (r.hi - r.lo))
        total += weight * coverage
    return min(1.0, max(0.0, total))


def _box_intersection_area(a: BoxBucket, b: BoxBucket) -> float:
    dlat = min(a.lat_max, b.lat_max) - max(a.lat_min, b.lat_min)
    dlon = min(a.lon_max, b.lon_max) - max(a.lon_min, b.lon_min)
    if dlat < 0 or dlon < 0:
        return 0.0
    return dlat * dlon


def _boxes_touch(a: BoxBucket, b: BoxBucket) -> bool:
    return (
        a.lat_min <= b.lat_max
        and b.lat_min <= a.lat_max
        and a.lon_min <= b.lon_max
        and b.lon_min <= a.lon_max
    )


def estimate_spatial_overlap(query: SpatialSummary, candidate: SpatialSummary) -> float:
    """Box analogue of estimate_range_overlap; zero-area query boxes are
    treated as points (coverage 0 or 1)."""
    if not query.boxes or query.total_count == 0 or not candidate.boxes:
        return 0.0
    total = 0.0
    for box in query.boxes:
        weight = box.member_count / query.total_count
        area = (box.lat_max - box.lat_min) * (box.lon_max - box.lon_min)
        if area == 0.0:
            coverage = 1.0 if any(_boxes_touch(box, c) for c in candidate.boxes) else 0.0
        else:
            covered = sum(_box_intersection_area(box, c) for c in candidate.boxes)
            coverage = min(1.0, covered / area)
        total += weight * coverage
    return min(1.0, max(0.0, total))


# --- JSON encoding (signatures as decimal strings: u64 does not survive
# float-based JSON readers) ---


def summary_to_json(summary: ColumnSummary) -> dict:
    if isinstance(summary, TemporalSummary):
        return {
            "kind": "temporal",
            "ranges": [[r.lo, r.hi, r.member_count] for r in summary.ranges],
            "total_count": summary.total_count,
            "resolution": summary.resolution.label,
        }
    if isinstance(summary, NumericSummary):
        return {
            "kind": "numeric",
            "ranges": [[r.lo, r.hi, r.member_count] for r in summary.ranges],
            "total_count": summary.total_count,
        }
    if isinstance(summary, SpatialSummary):
        return {
            "kind": "spatial",
            "boxes": [
                [b.lat_min, b.lat_max, b.lon_min, b.lon_max, b.member_count]
                for b in summary.boxes
            ],
            "total_count": summary.total_count,
        }
    if isinstance(summary, CategoricalSketch):
        return {
            "kind": "categorical",
            "signature": [str(v) for v in summary.signature],
            "cardinality": summary.cardinality,
        }
    raise TypeError(f"not a summary: {type(summary)!r}")


def summary_from_json(doc: dict) -> ColumnSummary:
    kind = doc.get("kind")
    if kind == "numeric":
        return NumericSummary(
            [RangeBucket(lo, hi, int(n)) for lo, hi, n in doc["ranges"]],
            int(doc["total_count"]),
        )
    if kind == "temporal":
        return TemporalSummary(
            [RangeBucket(lo, hi, int(n)) for lo, hi, n in doc["ranges"]],
            int(doc["total_count"]),
            Resolution.from_label(doc["resolution"]),
        )
    if kind == "spatial":
        return SpatialSummary(
            [
                BoxBucket(lat_min, lat_max, lon_min, lon_max, int(n))
                for lat_min, lat_max, lon_min, lon_max, n in doc["boxes"]
            ],
            int(doc["total_count"]),
        )
    if kind == "categorical":
        return CategoricalSketch(
            [int(v) for v in doc["signature"]], int(doc["cardinality"])
        )
    raise ValueError(f"unknown summary kind: {kind!r}")
