"""Ingest-profile-index pipeline shared by the CLI, the service and the demo."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from datetime import datetime, timezone

from .config import EngineConfig
from .indexing import IndexShard
from .ingest import DatasetCache, DiscoveryPlugin, ProvenanceRecord, discover
from .profiler import ColumnType, DatasetProfile, profile_table
from .table import read_csv_bytes

logger = logging.getLogger(__name__)


@dataclass
class RegisterOutcome:
    profile: DatasetProfile
    created: bool  # False: content hash already indexed


def dataset_id_for(data: bytes) -> str:
    return f"ds-{hashlib.sha256(data).hexdigest()[:16]}"


def register_bytes(
    data: bytes,
    shard: IndexShard,
    cache: DatasetCache,
    config: EngineConfig,
    *,
    name: str = "",
    description: str = "",
    source: str = "upload",
    type_overrides: dict[str, ColumnType] | None = None,
    custom_metadata: dict[str, str] | None = None,
    plugin_name: str = "upload",
    locator: str = "",
) -> RegisterOutcome:
    """Cache, profile and index one CSV payload. Re-registering identical
    bytes is a no-op that returns the existing profile, which keeps the
    ingest pipeline idempotent."""
    content_hash = cache.put(data)
    dataset_id = dataset_id_for(data)
    if shard.has(dataset_id):
        return RegisterOutcome(shard.get(dataset_id), created=False)
    table = read_csv_bytes(data)
    provenance = ProvenanceRecord(
        source_plugin=plugin_name,
        locator=locator or f"upload:{content_hash}",
        retrieved_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        content_hash=content_hash,
        bytes_size=len(data),
    )
    profile = profile_table(
        table,
        config.profiler,
        name=name,
        description=description,
        source=source,
        type_overrides=type_overrides,
        content_hash=content_hash,
        custom_metadata=custom_metadata,
        provenance=provenance,
    )
    shard.add_dataset(profile)
    return RegisterOutcome(profile, created=True)


def ingest_plugin(
    plugin: DiscoveryPlugin,
    shard: IndexShard,
    cache: DatasetCache,
    config: EngineConfig,
    limit: int | None = None,
) -> list[tuple[str, str, str]]:
    """Discover and index up to ``limit`` datasets from one plugin.

    Returns (dataset_id, title, status) per dataset, status one of
    ``indexed`` / ``unchanged``.
    """
    out = []
    for raw in discover(plugin, cache, limit):
        dataset_id = f"ds-{raw.provenance.content_hash[:16]}"
        if shard.has(dataset_id):
            out.append((dataset_id, raw.name, "unchanged"))
            continue
        table = read_csv_bytes(raw.data)
        profile = profile_table(
            table,
            config.profiler,
            name=raw.name,
            description=raw.description,
            source=plugin.name,
            content_hash=raw.provenance.content_hash,
            provenance=raw.provenance,
        )
        shard.add_dataset(profile)
        out.append((dataset_id, raw.name, "indexed"))
        logger.info("indexed %s (%s)", raw.name, dataset_id)
    return out
