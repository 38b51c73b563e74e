"""Engine configuration: one YAML file shared by the CLI and the service.

Keys (all optional, defaults shown in DEFAULT_CONFIG_YAML below):

    index_path            directory for the persisted index
    listen_address        host:port for the HTTP service
    ui_path               static UI build to serve at / (optional)
    cache.path            dataset cache directory
    cache.max_bytes       LRU cap for the cache
    profiler.*            k_ranges, permutations, thresholds, null_literals,
                          sample_rows, top_values
    ranking.*             keyword/filter/related merge weights
    plugins               list of {name, type: local|socrata, path|base_url,
                          page_size}
    custom_metadata_fields list of {name, type: string|number|enum,
                          required, enum_values}

ENGINE_INDEX_PATH and ENGINE_LISTEN_ADDRESS environment variables override
their file counterparts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError, MetadataSchemaViolation
from .ingest import (
    DEFAULT_CACHE_BYTES,
    DiscoveryPlugin,
    LocalDirectoryPlugin,
    SocrataPlugin,
)
from .profiler import DEFAULT_NULL_LITERALS, ProfilerConfig

DEFAULT_CONFIG_YAML = """\
index_path: ./engine-index
listen_address: 127.0.0.1:8080
cache:
  path: ./engine-cache
  max_bytes: 1073741824
profiler:
  k_ranges: 8
  permutations: 128
  numeric_threshold: 0.9
  temporal_threshold: 0.9
ranking:
  keyword: 0.5
  filter: 0.2
  related: 0.3
plugins: []
custom_metadata_fields: []
"""


@dataclass
class MetadataFieldSpec:
    name: str
    type: str = "string"  # string | number | enum
    required: bool = False
    enum_values: list[str] = field(default_factory=list)


@dataclass
class PluginSpec:
    name: str
    type: str  # local | socrata
    path: str = ""
    base_url: str = ""
    page_size: int = 100


@dataclass
class EngineConfig:
    index_path: str = "./engine-index"
    listen_address: str = "127.0.0.1:8080"
    ui_path: str = ""
    cache_path: str = "./engine-cache"
    cache_max_bytes: int = DEFAULT_CACHE_BYTES
    profiler: ProfilerConfig = field(default_factory=ProfilerConfig)
    weights: dict[str, float] = field(
        default_factory=lambda: {"keyword": 0.5, "filter": 0.2, "related": 0.3}
    )
    plugins: list[PluginSpec] = field(default_factory=list)
    custom_metadata_fields: list[MetadataFieldSpec] = field(default_factory=list)

    @property
    def listen_host(self) -> str:
        return self.listen_address.rsplit(":", 1)[0]

    @property
    def listen_port(self) -> int:
        return int(self.listen_address.rsplit(":", 1)[1])


def load_config(path: str | Path) -> EngineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    return parse_config(doc, base_dir=path.parent)


def parse_config(doc: dict, base_dir: Path | None = None) -> EngineConfig:
    config = EngineConfig()

    def resolve(raw: str) -> str:
        p = Path(raw)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return str(p)

    if doc.get("index_path"):
        config.index_path = resolve(str(doc["index_path"]))
    if doc.get("listen_address"):
        config.listen_address = str(doc["listen_address"])
    if doc.get("ui_path"):
        config.ui_path = resolve(str(doc["ui_path"]))

    cache = doc.get("cache") or {}
    if cache.get("path"):
        config.cache_path = resolve(str(cache["path"]))
    if cache.get("max_bytes") is not None:
        config.cache_max_bytes = int(cache["max_bytes"])

    prof = doc.get("profiler") or {}
    config.profiler = ProfilerConfig(
        k_ranges=int(prof.get("k_ranges", 8)),
        num_permutations=int(prof.get("permutations", 128)),
        numeric_threshold=float(prof.get("numeric_threshold", 0.9)),
        temporal_threshold=float(prof.get("temporal_threshold", 0.9)),
        null_literals=tuple(prof.get("null_literals", DEFAULT_NULL_LITERALS)),
        sample_rows=int(prof.get("sample_rows", 20)),
        top_values=int(prof.get("top_values", 10)),
    )

    ranking = doc.get("ranking") or {}
    for key in ("keyword", "filter", "related"):
        if key in ranking:
            config.weights[key] = float(ranking[key])
    if any(w < 0 for w in config.weights.values()):
        raise ConfigError("ranking weights must be nonnegative")

    for entry in doc.get("plugins") or []:
        if not isinstance(entry, dict) or "name" not in entry or "type" not in entry:
            raise ConfigError(f"plugin entry needs name and type: {entry!r}")
        spec = PluginSpec(
            name=str(entry["name"]),
            type=str(entry["type"]),
            path=resolve(str(entry["path"])) if entry.get("path") else "",
            base_url=str(entry.get("base_url", "")),
            page_size=int(entry.get("page_size", 100)),
        )
        if spec.type not in ("local", "socrata"):
            raise ConfigError(f"unknown plugin type {spec.type!r}")
        config.plugins.append(spec)

    names = set()
    for entry in doc.get("custom_metadata_fields") or []:
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"metadata field entry needs a name: {entry!r}")
        spec = MetadataFieldSpec(
            name=str(entry["name"]),
            type=str(entry.get("type", "string")),
            required=bool(entry.get("required", False)),
            enum_values=[str(v) for v in entry.get("enum_values", [])],
        )
        if spec.type not in ("string", "number", "enum"):
            raise ConfigError(f"unknown metadata field type {spec.type!r}")
        if spec.type == "enum" and not spec.enum_values:
            raise ConfigError(f"enum field {spec.name!r} needs enum_values")
        if spec.name in names:
            raise ConfigError(f"duplicate metadata field {spec.name!r}")
        names.add(spec.name)
        config.custom_metadata_fields.append(spec)

    if os.environ.get("ENGINE_INDEX_PATH"):
        config.index_path = os.environ["ENGINE_INDEX_PATH"]
    if os.environ.get("ENGINE_LISTEN_ADDRESS"):
        config.listen_address = os.environ["ENGINE_LISTEN_ADDRESS"]
    return config


def build_plugins(config: EngineConfig) -> dict[str, DiscoveryPlugin]:
    plugins: dict[str, DiscoveryPlugin] = {}
    for spec in config.plugins:
        if spec.type == "local":
            plugins[spec.name] = LocalDirectoryPlugin(spec.name, spec.path)
        else:
            plugins[spec.name] = SocrataPlugin(
                spec.name, spec.base_url, page_size=spec.page_size
            )
    return plugins


def validate_custom_metadata(
    fields: list[MetadataFieldSpec], metadata: dict[str, str]
) -> None:
    """Strict validation: unknown keys, missing required fields, bad numbers
    and out-of-enum values all reject."""
    known = {f.name: f for f in fields}
    for key in metadata:
        if key not in known:
            raise MetadataSchemaViolation(f"unknown metadata field {key!r}", field=key)
    for spec in fields:
        if spec.name not in metadata:
            if spec.required:
                raise MetadataSchemaViolation(
                    f"required metadata field {spec.name!r} is missing", field=spec.name
                )
            continue
        value = metadata[spec.name]
        if spec.type == "number":
            try:
                float(value)
            except ValueError:
                raise MetadataSchemaViolation(
                    f"metadata field {spec.name!r} must be a number, got {value!r}",
                    field=spec.name,
                ) from None
        elif spec.type == "enum" and value not in spec.enum_values:
            raise MetadataSchemaViolation(
                f"metadata field {spec.name!r} must be one of {spec.enum_values}",
                field=spec.name,
            )
