"""HTTP API under /api/v1: the contract the UI and programmatic clients use.

Endpoints
---------
POST /api/v1/search          Query JSON (or multipart with a related_file
                             CSV profiled server-side) -> {results, total}
POST /api/v1/upload          multipart CSV + metadata JSON (type overrides,
                             custom metadata) -> {id, profile}
POST /api/v1/augment         {left_id | multipart left file, right_id, spec}
                             -> CSV stream with provenance header
GET  /api/v1/datasets/{id}   full profile JSON
GET  /api/v1/datasets/{id}/download   original cached CSV bytes
GET  /api/v1/stats           collection statistics
GET  /api/v1/config          public deployment config (metadata schema,
                             sources, ranking weights, named areas)
GET  /api/v1/areas/{name}    gazetteer lookup

Errors use the envelope {"code", "message", "details"}. Uploads serialize
through the index writer lock; reads hold no lock beyond the shard's own.
"""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import index_io
from .augment import augment, spec_from_json
from .config import EngineConfig, build_plugins, validate_custom_metadata
from .errors import (
    AggregationOnNonNumeric,
    ConfigError,
    EmptyIndexError,
    EmptyTable,
    EngineError,
    HashMismatch,
    IncompatiblePairKinds,
    InvalidQuery,
    MetadataSchemaViolation,
    MissingAggregation,
    NoPairs,
    PluginUnavailable,
    RaggedRows,
    SourceGone,
    UnknownDataset,
)
from .indexing import IndexShard
from .ingest import DatasetCache, fetch_bytes, materialize
from .pipeline import dataset_id_for, register_bytes
from .profiler import ColumnType, profile_table, profile_to_json
from .search import Gazetteer, execute_query, query_from_json, result_to_json
from .table import read_csv_bytes, write_csv_bytes

logger = logging.getLogger(__name__)

_STATUS_BY_ERROR: list[tuple[type[EngineError], int]] = [
    (InvalidQuery, 400),
    (UnknownDataset, 404),
    (SourceGone, 404),
    (MetadataSchemaViolation, 422),
    (RaggedRows, 422),
    (EmptyTable, 422),
    (IncompatiblePairKinds, 422),
    (AggregationOnNonNumeric, 422),
    (MissingAggregation, 422),
    (NoPairs, 422),
    (HashMismatch, 409),
    (PluginUnavailable, 503),
]


def _status_for(error: EngineError) -> int:
    for kind, status in _STATUS_BY_ERROR:
        if isinstance(error, kind):
            return status
    return 500


class EngineState:
    """Shared state behind the HTTP handlers."""

    def __init__(
        self,
        config: EngineConfig,
        shard: IndexShard | None = None,
        cache: DatasetCache | None = None,
    ) -> None:
        self.config = config
        self.cache = cache or DatasetCache(config.cache_path, config.cache_max_bytes)
        if shard is not None:
            self.shard = shard
        else:
            try:
                self.shard = index_io.load(config.index_path)
            except EmptyIndexError:
                self.shard = IndexShard()
        self.plugins = build_plugins(config)
        self.gazetteer = Gazetteer.bundled()
        self.writer_lock = threading.Lock()

    def persist(self) -> None:
        index_io.persist(self.shard, self.config.index_path)

    def profile_or_404(self, dataset_id: str):
        if not self.shard.has(dataset_id):
            raise UnknownDataset(f"no dataset {dataset_id!r}", dataset_id=dataset_id)
        return self.shard.get(dataset_id)


def create_app(
    config: EngineConfig | None = None,
    shard: IndexShard | None = None,
    cache: DatasetCache | None = None,
    persist_on_write: bool = True,
) -> FastAPI:
    config = config or EngineConfig()
    state = EngineState(config, shard, cache)
    app = FastAPI(title="datascout", version="0.1.0")
    app.state.engine = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, error: EngineError):
        return JSONResponse(
            status_code=_status_for(error),
            content={
                "code": error.code,
                "message": error.message,
                "details": {k: _jsonable(v) for k, v in error.details.items()},
            },
        )

    @app.post("/api/v1/search")
    async def search_endpoint(request: Request):
        content_type = request.headers.get("content-type", "")
        related_override = None
        if content_type.startswith("multipart/"):
            form = await request.form()
            raw_query = form.get("query") or "{}"
            try:
                doc = json.loads(raw_query)
            except json.JSONDecodeError as exc:
                raise InvalidQuery(f"query part is not JSON: {exc}") from exc
            upload = form.get("related_file")
            if upload is not None:
                data = await upload.read()
                table = read_csv_bytes(data)
                related_override = profile_table(
                    table,
                    config.profiler,
                    name=getattr(upload, "filename", "") or "related",
                    content_hash=None,
                )
        else:
            body = await request.body()
            if not body:
                doc = {}  # no constraints at all: EmptyQuery from validation
            else:
                try:
                    doc = json.loads(body)
                except json.JSONDecodeError as exc:
                    raise InvalidQuery(f"body is not JSON: {exc}") from exc

        related_mode = str((doc.get("related") or {}).get("mode", "either"))
        if related_override is not None:
            doc = {k: v for k, v in doc.items() if k != "related"}
        query = query_from_json(doc, resolve_profile=state.profile_or_404)
        if related_override is not None:
            from .search import RelatedInput

            query.related = RelatedInput(related_override, related_mode)
        results, total = execute_query(
            query, state.shard, state.gazetteer, config.weights
        )
        return {"results": [result_to_json(r) for r in results], "total": total}

    @app.post("/api/v1/upload")
    async def upload_endpoint(
        file: UploadFile = File(...), metadata: str = Form("{}")
    ):
        try:
            meta = json.loads(metadata)
        except json.JSONDecodeError as exc:
            raise MetadataSchemaViolation(f"metadata is not JSON: {exc}") from exc
        if not isinstance(meta, dict):
            raise MetadataSchemaViolation("metadata must be a JSON object")
        custom = {str(k): str(v) for k, v in (meta.get("custom_metadata") or {}).items()}
        validate_custom_metadata(config.custom_metadata_fields, custom)
        overrides = {}
        for column, label in (meta.get("type_overrides") or {}).items():
            try:
                overrides[str(column)] = ColumnType.from_label(str(label))
            except ValueError:
                raise MetadataSchemaViolation(
                    f"unknown column type {label!r}", column=column
                ) from None

        data = await file.read()
        dataset_id = dataset_id_for(data)
        with state.writer_lock:
            if state.shard.has(dataset_id):
                return JSONResponse(
                    status_code=409,
                    content={
                        "code": "DuplicateDataset",
                        "message": "identical content is already indexed",
                        "details": {"id": dataset_id},
                        "id": dataset_id,
                    },
                )
            outcome = register_bytes(
                data,
                state.shard,
                state.cache,
                config,
                name=str(meta.get("name", file.filename or "upload")),
                description=str(meta.get("description", "")),
                source=str(meta.get("source", "upload")),
                type_overrides=overrides,
                custom_metadata=custom,
            )
            if persist_on_write:
                state.persist()
        return {"id": outcome.profile.id, "profile": profile_to_json(outcome.profile)}

    @app.post("/api/v1/augment")
    async def augment_endpoint(request: Request):
        content_type = request.headers.get("content-type", "")
        left_file: bytes | None = None
        if content_type.startswith("multipart/"):
            form = await request.form()
            try:
                doc = json.loads(form.get("spec") or "{}")
            except json.JSONDecodeError as exc:
                raise InvalidQuery(f"spec part is not JSON: {exc}") from exc
            body = {
                "left_id": form.get("left_id"),
                "right_id": form.get("right_id"),
                "spec": doc,
            }
            upload = form.get("left_file")
            if upload is not None:
                left_file = await upload.read()
        else:
            try:
                body = json.loads(await request.body() or b"{}")
            except json.JSONDecodeError as exc:
                raise InvalidQuery(f"body is not JSON: {exc}") from exc
        if not isinstance(body, dict) or not body.get("right_id"):
            raise InvalidQuery("augment needs right_id")
        spec = spec_from_json(body.get("spec") or {})
        right_profile = state.profile_or_404(str(body["right_id"]))
        if right_profile.provenance is None:
            raise SourceGone("right dataset has no provenance to materialize")
        right = materialize(right_profile.provenance, state.cache, state.plugins)
        left_id = str(body.get("left_id") or "")
        if left_file is not None:
            left = read_csv_bytes(left_file)
            left_id = left_id or "related-file"
        else:
            if not left_id:
                raise InvalidQuery("augment needs left_id or a left_file part")
            left_profile = state.profile_or_404(left_id)
            if left_profile.provenance is None:
                raise SourceGone("left dataset has no provenance to materialize")
            left = materialize(left_profile.provenance, state.cache, state.plugins)
        result = augment(
            left, right, spec, left_id, right_profile.id, config.profiler
        )
        return Response(
            content=write_csv_bytes(result.table),
            media_type="text/csv; charset=utf-8",
            headers={
                "Content-Disposition": 'attachment; filename="augmented.csv"',
                "X-Augmentation-Provenance": json.dumps(result.provenance),
            },
        )

    @app.get("/api/v1/datasets/{dataset_id}")
    async def dataset_endpoint(dataset_id: str):
        return profile_to_json(state.profile_or_404(dataset_id))

    @app.get("/api/v1/datasets/{dataset_id}/download")
    async def download_endpoint(dataset_id: str):
        profile = state.profile_or_404(dataset_id)
        if profile.provenance is None:
            raise SourceGone("dataset has no provenance to download")
        data = fetch_bytes(profile.provenance, state.cache, state.plugins)
        return Response(
            content=data,
            media_type="text/csv; charset=utf-8",
            headers={
                "Content-Disposition": f'attachment; filename="{dataset_id}.csv"'
            },
        )

    @app.get("/api/v1/stats")
    async def stats_endpoint():
        return state.shard.stats()

    @app.get("/api/v1/config")
    async def config_endpoint():
        return {
            "custom_metadata_fields": [
                {
                    "name": f.name,
                    "type": f.type,
                    "required": f.required,
                    "enum_values": f.enum_values,
                }
                for f in config.custom_metadata_fields
            ],
            "sources": sorted(state.plugins) + ["upload"],
            "ranking_weights": config.weights,
            "areas": state.gazetteer.names(),
        }

    @app.get("/api/v1/areas/{name}")
    async def area_endpoint(name: str):
        box = state.gazetteer.resolve(name)
        return {
            "name": name,
            "box": [[box.lat_min, box.lon_min], [box.lat_max, box.lon_max]],
        }

    ui_dir = Path(config.ui_path) if config.ui_path else None
    if ui_dir and ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _jsonable(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def run(config: EngineConfig) -> None:
    import uvicorn

    app = create_app(config)
    try:
        host, port = config.listen_host, config.listen_port
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad listen_address {config.listen_address!r}") from exc
    uvicorn.run(app, host=host, port=port, log_level="info")
