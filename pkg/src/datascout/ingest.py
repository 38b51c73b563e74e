"""Dataset acquisition: discovery plugins, content-addressed cache, provenance.

Plugins list and fetch raw dataset bytes from a source (a local directory,
or a Socrata-style HTTP catalog). Every fetched dataset lands in the cache
under its SHA-256 and gets a ProvenanceRecord sufficient to re-fetch and
verify it later. Only CSV payloads are ingested; anything else is skipped
with a logged reason.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import requests

from .errors import HashMismatch, MalformedListing, PluginUnavailable, SourceGone
from .table import TableData, read_csv_bytes

logger = logging.getLogger(__name__)

DEFAULT_CACHE_BYTES = 1 << 30  # 1 GiB
FETCH_WORKERS = 4


@dataclass
class ProvenanceRecord:
    source_plugin: str
    locator: str
    retrieved_at: str  # ISO-8601 UTC
    content_hash: str  # SHA-256 hex of the raw bytes
    bytes_size: int


def provenance_to_json(p: ProvenanceRecord) -> dict:
    return {
        "source_plugin": p.source_plugin,
        "locator": p.locator,
        "retrieved_at": p.retrieved_at,
        "content_hash": p.content_hash,
        "bytes_size": p.bytes_size,
    }


def provenance_from_json(doc: dict) -> ProvenanceRecord:
    return ProvenanceRecord(
        source_plugin=doc["source_plugin"],
        locator=doc["locator"],
        retrieved_at=doc["retrieved_at"],
        content_hash=doc["content_hash"],
        bytes_size=int(doc["bytes_size"]),
    )


@dataclass
class DatasetRef:
    """One entry of a plugin catalog listing."""

    locator: str
    title: str
    description: str = ""


@dataclass
class RawDataset:
    name: str
    description: str
    source: str
    data: bytes
    provenance: ProvenanceRecord


class DiscoveryPlugin:
    """Interface: a named source that can list dataset refs and fetch bytes."""

    name: str

    def list_datasets(self) -> list[DatasetRef]:
        raise NotImplementedError

    def fetch(self, locator: str) -> bytes:
        raise NotImplementedError


class LocalDirectoryPlugin(DiscoveryPlugin):
    """Serves the CSV files of one directory, sorted by filename."""

    def __init__(self, name: str, path: str | Path) -> None:
        self.name = name
        self.path = Path(path)

    def list_datasets(self) -> list[DatasetRef]:
        if not self.path.is_dir():
            raise PluginUnavailable(f"directory does not exist: {self.path}")
        refs = []
        for entry in sorted(self.path.iterdir()):
            if not entry.is_file():
                continue
            if entry.suffix.lower() != ".csv":
                logger.info("skipping %s: not a CSV payload", entry.name)
                continue
            refs.append(DatasetRef(locator=str(entry), title=entry.stem))
        return refs

    def fetch(self, locator: str) -> bytes:
        path = Path(locator)
        if not path.is_file():
            raise SourceGone(f"file no longer exists: {locator}")
        return path.read_bytes()


class SocrataPlugin(DiscoveryPlugin):
    """Client for the Socrata-style discovery API shape.

    Catalog listing: GET {base}/api/catalog/v1?limit=&offset= returning
    ``{"results": [{"resource": {"id", "name", "description"}}],
    "resultSetSize": N}``. Per-resource CSV export:
    GET {base}/resource/{id}.csv. A Retry-After header on a 5xx response is
    honored (capped) before the next attempt.
    """

    def __init__(
        self,
        name: str,
        base_url: str,
        page_size: int = 100,
        session: requests.Session | None = None,
        max_attempts: int = 3,
        retry_wait_cap: float = 5.0,
    ) -> None:
        self.name = name
        self.base_url = base_url.rstrip("/")
        self.page_size = page_size
        self.session = session or requests.Session()
        self.max_attempts = max_attempts
        self.retry_wait_cap = retry_wait_cap

    def list_datasets(self) -> list[DatasetRef]:
        refs: list[DatasetRef] = []
        offset = 0
        while True:
            doc = self._get_json(
                f"{self.base_url}/api/catalog/v1",
                params={"limit": self.page_size, "offset": offset},
            )
            results = doc.get("results")
            if not isinstance(results, list):
                raise MalformedListing("catalog response has no results list")
            for entry in results:
                resource = entry.get("resource") if isinstance(entry, dict) else None
                if not isinstance(resource, dict) or "id" not in resource:
                    raise MalformedListing("catalog entry has no resource id")
                refs.append(
                    DatasetRef(
                        locator=str(resource["id"]),
                        title=str(resource.get("name", resource["id"])),
                        description=str(resource.get("description", "")),
                    )
                )
            total = doc.get("resultSetSize", len(refs))
            offset += self.page_size
            if not results or offset >= int(total):
                return refs

    def fetch(self, locator: str) -> bytes:
        response = self._request(f"{self.base_url}/resource/{locator}.csv")
        if response.status_code == 404:
            raise SourceGone(f"resource {locator} not found", locator=locator)
        return response.content

    def _get_json(self, url: str, params: dict) -> dict:
        response = self._request(url, params=params)
        try:
            doc = response.json()
        except ValueError as exc:
            raise MalformedListing(f"catalog response is not JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise MalformedListing("catalog response is not a JSON object")
        return doc

    def _request(self, url: str, params: dict | None = None) -> requests.Response:
        last_error: str = ""
        for attempt in range(self.max_attempts):
            try:
                response = self.session.get(url, params=params, timeout=30)
            except requests.RequestException as exc:
                raise PluginUnavailable(f"cannot reach {url}: {exc}") from exc
            if response.status_code < 500:
                return response
            last_error = f"HTTP {response.status_code}"
            retry_after = response.headers.get("Retry-After")
            if retry_after and attempt + 1 < self.max_attempts:
                try:
                    wait = min(float(retry_after), self.retry_wait_cap)
                except ValueError:
                    wait = 0.0
                time.sleep(max(wait, 0.0))
        raise PluginUnavailable(f"{url} failing after {self.max_attempts} attempts: {last_error}")


class DatasetCache:
    """Content-addressed byte cache: ``<root>/<first2 hex>/<hash>.csv``.

    Writes are atomic (temp file + rename). Eviction is LRU by file mtime,
    which is refreshed on every hit; byte-identical datasets from different
    plugins share one entry.
    """

    def __init__(self, root: str | Path, max_bytes: int = DEFAULT_CACHE_BYTES) -> None:
        self.root = Path(root)
        self.max_bytes = max_bytes
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, content_hash: str) -> Path:
        return self.root / content_hash[:2] / f"{content_hash}.csv"

    def has(self, content_hash: str) -> bool:
        return self._path(content_hash).is_file()

    def get(self, content_hash: str) -> bytes | None:
        path = self._path(content_hash)
        if not path.is_file():
            return None
        os.utime(path)
        return path.read_bytes()

    def put(self, data: bytes) -> str:
        content_hash = hashlib.sha256(data).hexdigest()
        path = self._path(content_hash)
        if path.is_file():
            os.utime(path)
            return content_hash
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        self._evict()
        return content_hash

    def _evict(self) -> None:
        entries = [p for p in self.root.glob("*/*.csv") if p.is_file()]
        total = sum(p.stat().st_size for p in entries)
        if total <= self.max_bytes:
            return
        entries.sort(key=lambda p: p.stat().st_mtime)
        for path in entries:
            if total <= self.max_bytes:
                break
            total -= path.stat().st_size
            path.unlink(missing_ok=True)
            logger.info("evicted %s from cache", path.name)


def discover(
    plugin: DiscoveryPlugin,
    cache: DatasetCache,
    limit: int | None = None,
) -> list[RawDataset]:
    """Fetch up to ``limit`` CSV datasets from the plugin, caching each."""
    refs = plugin.list_datasets()
    if limit is not None:
        refs = refs[:limit]

    def fetch_one(ref: DatasetRef) -> RawDataset:
        data = plugin.fetch(ref.locator)
        content_hash = cache.put(data)
        provenance = ProvenanceRecord(
            source_plugin=plugin.name,
            locator=ref.locator,
            retrieved_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            content_hash=content_hash,
            bytes_size=len(data),
        )
        return RawDataset(ref.title, ref.description, plugin.name, data, provenance)

    with ThreadPoolExecutor(max_workers=FETCH_WORKERS) as pool:
        return list(pool.map(fetch_one, refs))


def fetch_bytes(
    provenance: ProvenanceRecord,
    cache: DatasetCache,
    plugins: dict[str, DiscoveryPlugin] | None = None,
) -> bytes:
    """Original dataset bytes for a provenance record: cache hit, or re-fetch
    through the recorded plugin with hash verification (a changed source is
    surfaced as HashMismatch, never silently accepted)."""
    data = cache.get(provenance.content_hash)
    if data is not None:
        return data
    plugin = (plugins or {}).get(provenance.source_plugin)
    if plugin is None:
        raise SourceGone(
            f"plugin {provenance.source_plugin!r} is not configured",
            plugin=provenance.source_plugin,
        )
    data = plugin.fetch(provenance.locator)
    actual = hashlib.sha256(data).hexdigest()
    if actual != provenance.content_hash:
        raise HashMismatch(
            "source content changed since it was profiled",
            expected=provenance.content_hash,
            actual=actual,
        )
    cache.put(data)
    return data


def materialize(
    provenance: ProvenanceRecord,
    cache: DatasetCache,
    plugins: dict[str, DiscoveryPlugin] | None = None,
) -> TableData:
    """Rebuild the table for a provenance record (see fetch_bytes)."""
    return read_csv_bytes(fetch_bytes(provenance, cache, plugins))
