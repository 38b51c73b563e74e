"""Index persistence.

On-disk layout is a directory:

    manifest.json    format marker, generation, SHA-256 per data file
    profiles.jsonl   one profile JSON document per line, sorted by id
    postings.bin     keyword postings + document lengths
    ranges.bin       numeric and temporal interval entries
    spatial.bin      spatial box entries
    lsh.bin          band tables

Binary files are little-endian with a 10-byte header: magic "ADSI1", a
one-byte kind tag, and a u32 format version. Strings are u32-length-prefixed
UTF-8. load(persist(x)) is observationally equivalent to x.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from pathlib import Path

from .errors import ChecksumMismatch, EmptyIndexError, VersionUnsupported
from .indexing import IndexShard, LshParams, _RangeEntry, _SpatialEntry
from .profiler import profile_from_json, profile_to_json

MAGIC = b"ADSI1"
FORMAT_VERSION = 1

_KIND_POSTINGS = 1
_KIND_RANGES = 2
_KIND_SPATIAL = 3
_KIND_LSH = 4

_MANIFEST = "manifest.json"
_PROFILES = "profiles.jsonl"
_DATA_FILES = ("postings.bin", "ranges.bin", "spatial.bin", "lsh.bin")


class _Writer:
    def __init__(self, kind: int) -> None:
        self.buf = io.BytesIO()
        self.buf.write(MAGIC)
        self.buf.write(struct.pack("<BI", kind, FORMAT_VERSION))

    def u32(self, value: int) -> None:
        self.buf.write(struct.pack("<I", value))

    def u64(self, value: int) -> None:
        self.buf.write(struct.pack("<Q", value))

    def f64(self, value: float) -> None:
        self.buf.write(struct.pack("<d", value))

    def string(self, value: str) -> None:
        raw = value.encode("utf-8")
        self.u32(len(raw))
        self.buf.write(raw)

    def bytes(self) -> bytes:
        return self.buf.getvalue()


class _Reader:
    def __init__(self, data: bytes, kind: int, name: str) -> None:
        self.buf = io.BytesIO(data)
        magic = self.buf.read(len(MAGIC))
        tag, version = struct.unpack("<BI", self.buf.read(5))
        if magic != MAGIC or tag != kind:
            raise VersionUnsupported(f"{name}: bad magic or kind tag")
        if version != FORMAT_VERSION:
            raise VersionUnsupported(f"{name}: format version {version} unsupported")

    def u32(self) -> int:
        return struct.unpack("<I", self.buf.read(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.buf.read(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.buf.read(8))[0]

    def string(self) -> str:
        return self.buf.read(self.u32()).decode("utf-8")


def persist(shard: IndexShard, path: str | Path) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    lines = [
        json.dumps(profile_to_json(shard.profiles[ds]), sort_keys=True)
        for ds in sorted(shard.profiles)
    ]
    files = {
        _PROFILES: ("\n".join(lines) + "\n" if lines else "").encode("utf-8"),
        "postings.bin": _encode_postings(shard),
        "ranges.bin": _encode_ranges(shard),
        "spatial.bin": _encode_spatial(shard),
        "lsh.bin": _encode_lsh(shard),
    }
    manifest = {
        "format": MAGIC.decode("ascii"),
        "version": FORMAT_VERSION,
        "generation": shard.generation,
        "lsh": {"bands": shard.lsh_params.bands, "rows": shard.lsh_params.rows},
        "files": {
            name: hashlib.sha256(data).hexdigest() for name, data in files.items()
        },
    }
    for name, data in files.items():
        tmp = root / (name + ".tmp")
        tmp.write_bytes(data)
        tmp.replace(root / name)
    (root / _MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def load(path: str | Path) -> IndexShard:
    root = Path(path)
    manifest_path = root / _MANIFEST
    if not manifest_path.is_file():
        raise EmptyIndexError(f"no index manifest in {root}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != MAGIC.decode("ascii"):
        raise VersionUnsupported("manifest format marker not recognized")
    if manifest.get("version") != FORMAT_VERSION:
        raise VersionUnsupported(
            f"index version {manifest.get('version')!r} unsupported"
        )

    contents: dict[str, bytes] = {}
    for name, expected in manifest["files"].items():
        file_path = root / name
        if not file_path.is_file():
            raise ChecksumMismatch(f"{name} is missing", file=name)
        data = file_path.read_bytes()
        actual = hashlib.sha256(data).hexdigest()
        if actual != expected:
            raise ChecksumMismatch(f"{name} does not match its checksum", file=name)
        contents[name] = data

    lsh = manifest.get("lsh", {})
    shard = IndexShard(LshParams(int(lsh.get("bands", 32)), int(lsh.get("rows", 4))))
    for line in contents[_PROFILES].decode("utf-8").splitlines():
        if not line.strip():
            continue
        profile = profile_from_json(json.loads(line))
        shard.profiles[profile.id] = profile
    _decode_postings(shard, contents["postings.bin"])
    _decode_ranges(shard, contents["ranges.bin"])
    _decode_spatial(shard, contents["spatial.bin"])
    _decode_lsh(shard, contents["lsh.bin"])
    shard.generation = int(manifest.get("generation", 0))
    return shard


def _encode_postings(shard: IndexShard) -> bytes:
    w = _Writer(_KIND_POSTINGS)
    w.u32(len(shard._postings))
    for token in sorted(shard._postings):
        docs = shard._postings[token]
        w.string(token)
        w.u32(len(docs))
        for dataset_id in sorted(docs):
            w.string(dataset_id)
            w.f64(docs[dataset_id])
    w.u32(len(shard._doc_len))
    for dataset_id in sorted(shard._doc_len):
        w.string(dataset_id)
        w.f64(shard._doc_len[dataset_id])
    return w.bytes()


def _decode_postings(shard: IndexShard, data: bytes) -> None:
    r = _Reader(data, _KIND_POSTINGS, "postings.bin")
    for _ in range(r.u32()):
        token = r.string()
        docs = {}
        for _ in range(r.u32()):
            dataset_id = r.string()
            docs[dataset_id] = r.f64()
        shard._postings[token] = docs
    for _ in range(r.u32()):
        dataset_id = r.string()
        shard._doc_len[dataset_id] = r.f64()


def _encode_ranges(shard: IndexShard) -> bytes:
    w = _Writer(_KIND_RANGES)
    for entries in (shard._numeric, shard._temporal):
        w.u32(len(entries))
        for e in entries:
            w.string(e.dataset_id)
            w.string(e.column)
            w.f64(e.lo)
            w.f64(e.hi)
    return w.bytes()


def _decode_ranges(shard: IndexShard, data: bytes) -> None:
    r = _Reader(data, _KIND_RANGES, "ranges.bin")
    for entries in (shard._numeric, shard._temporal):
        for _ in range(r.u32()):
            dataset_id = r.string()
            column = r.string()
            lo = r.f64()
            hi = r.f64()
            entries.append(_RangeEntry(lo, hi, dataset_id, column))


def _encode_spatial(shard: IndexShard) -> bytes:
    w = _Writer(_KIND_SPATIAL)
    w.u32(len(shard._spatial))
    for e in shard._spatial:
        w.string(e.dataset_id)
        w.string(e.lat_column)
        w.string(e.lon_column)
        for value in (e.lat_min, e.lat_max, e.lon_min, e.lon_max):
            w.f64(value)
    return w.bytes()


def _decode_spatial(shard: IndexShard, data: bytes) -> None:
    r = _Reader(data, _KIND_SPATIAL, "spatial.bin")
    for _ in range(r.u32()):
        dataset_id = r.string()
        lat_column = r.string()
        lon_column = r.string()
        lat_min, lat_max, lon_min, lon_max = (r.f64() for _ in range(4))
        shard._spatial.append(
            _SpatialEntry(lat_min, lat_max, lon_min, lon_max, dataset_id, lat_column, lon_column)
        )


def _encode_lsh(shard: IndexShard) -> bytes:
    w = _Writer(_KIND_LSH)
    w.u32(shard.lsh_params.bands)
    w.u32(shard.lsh_params.rows)
    for table in shard._lsh_tables:
        w.u32(len(table))
        for key in sorted(table):
            w.u64(key)
            w.u32(len(table[key]))
            for dataset_id, column in table[key]:
                w.string(dataset_id)
                w.string(column)
    return w.bytes()


def _decode_lsh(shard: IndexShard, data: bytes) -> None:
    r = _Reader(data, _KIND_LSH, "lsh.bin")
    bands = r.u32()
    rows = r.u32()
    if (bands, rows) != (shard.lsh_params.bands, shard.lsh_params.rows):
        raise VersionUnsupported("LSH geometry does not match the manifest")
    for table in shard._lsh_tables:
        for _ in range(r.u32()):
            key = r.u64()
            bucket = []
            for _ in range(r.u32()):
                bucket.append((r.string(), r.string()))
            table[key] = bucket
