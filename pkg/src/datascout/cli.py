"""Operator CLI: ingest, profile, search, augment, demo, serve.

Exit codes: 0 success, 2 usage or configuration problems, 3 data errors.
Every command takes --json for machine-parseable stdout.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import index_io
from .augment import augment as run_augment, spec_from_json
from .config import EngineConfig, build_plugins, load_config
from .demo import run_bicycle_demo
from .errors import ConfigError, EmptyIndexError, EngineError
from .indexing import IndexShard
from .ingest import DatasetCache, materialize
from .pipeline import ingest_plugin
from .profiler import profile_table, profile_to_json
from .search import (
    BoundingBox,
    Page,
    Query,
    RelatedInput,
    SpatialFilter,
    TemporalFilter,
    query_from_json,
    result_to_json,
)
from .table import read_csv_bytes, write_csv_text
from .timestamps import parse_timestamp

EXIT_CONFIG = 2
EXIT_DATA = 3


def engine_errors(fn):
    """Map engine errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"error: {exc.message}", err=True)
            sys.exit(EXIT_CONFIG)
        except EngineError as exc:
            click.echo(f"error [{exc.code}]: {exc.message}", err=True)
            sys.exit(EXIT_DATA)

    return wrapper


def _open_state(config_path: str) -> tuple[EngineConfig, IndexShard, DatasetCache]:
    config = load_config(config_path)
    try:
        shard = index_io.load(config.index_path)
    except EmptyIndexError:
        shard = IndexShard()
    cache = DatasetCache(config.cache_path, config.cache_max_bytes)
    return config, shard, cache


@click.group()
def main() -> None:
    """Dataset search engine."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--plugin", "plugin_name", default=None, help="Only this plugin.")
@click.option("--limit", type=int, default=None, help="At most N datasets per plugin.")
@click.option("--json", "as_json", is_flag=True)
@engine_errors
def ingest(config_path: str, plugin_name: str | None, limit: int | None, as_json: bool) -> None:
    """Discover, profile and index datasets from the configured plugins."""
    config, shard, cache = _open_state(config_path)
    plugins = build_plugins(config)
    if plugin_name is not None:
        if plugin_name not in plugins:
            raise ConfigError(f"no plugin named {plugin_name!r} in config")
        plugins = {plugin_name: plugins[plugin_name]}
    statuses = []
    for name, plugin in plugins.items():
        for dataset_id, title, status in ingest_plugin(plugin, shard, cache, config, limit):
            statuses.append(
                {"plugin": name, "id": dataset_id, "title": title, "status": status}
            )
            if not as_json:
                click.echo(f"{status:9s} {dataset_id}  {title}  [{name}]")
    index_io.persist(shard, config.index_path)
    indexed = sum(1 for s in statuses if s["status"] == "indexed")
    if as_json:
        click.echo(json.dumps({"indexed": indexed, "datasets": statuses}))
    else:
        click.echo(f"indexed {indexed}")


@main.command()
@click.argument("csv_path", type=click.Path())
@click.option("--json", "as_json", is_flag=True)
@click.option("--name", default="")
@engine_errors
def profile(csv_path: str, as_json: bool, name: str) -> None:
    """Profile one CSV file."""
    path = Path(csv_path)
    if not path.is_file():
        raise ConfigError(f"no such file: {csv_path}")
    table = read_csv_bytes(path.read_bytes())
    result = profile_table(table, name=name or path.stem)
    doc = profile_to_json(result)
    if as_json:
        click.echo(json.dumps(doc))
        return
    click.echo(f"id:        {result.id}")
    click.echo(f"rows:      {result.row_count}")
    click.echo("columns:")
    for col in result.columns:
        extras = []
        if col.numeric_stats:
            extras.append(
                f"mean={col.numeric_stats.mean:.4g} min={col.numeric_stats.min:.4g} "
                f"max={col.numeric_stats.max:.4g}"
            )
        if col.temporal_resolution:
            extras.append(f"resolution={col.temporal_resolution.label}")
        extras.append(f"distinct~{col.distinct_count_estimate}")
        extras.append(f"nulls={col.null_fraction:.1%}")
        click.echo(f"  {col.name}: {col.effective_type.value}  " + " ".join(extras))
    if result.spatial_coverage:
        click.echo(f"spatial:   {result.spatial_coverage}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--keywords", multiple=True, help="Keyword (repeatable; space-splits).")
@click.option("--after", default=None, help="Temporal window start (ISO-8601).")
@click.option("--before", default=None, help="Temporal window end (ISO-8601).")
@click.option("--bbox", default=None, help="lat_min,lon_min,lat_max,lon_max")
@click.option("--area", default=None, help="Named area (gazetteer).")
@click.option("--source", "sources", multiple=True)
@click.option("--type", "types", multiple=True, help="Required column type (repeatable).")
@click.option("--related", "related_csv", default=None, type=click.Path())
@click.option("--mode", default="either", type=click.Choice(["join", "union", "either"]))
@click.option("--offset", default=0, type=int)
@click.option("--limit", default=20, type=int)
@click.option("--explain", is_flag=True, help="Print the score breakdown.")
@click.option("--json", "as_json", is_flag=True)
@engine_errors
def search(
    config_path: str,
    keywords: tuple[str, ...],
    after: str | None,
    before: str | None,
    bbox: str | None,
    area: str | None,
    sources: tuple[str, ...],
    types: tuple[str, ...],
    related_csv: str | None,
    mode: str,
    offset: int,
    limit: int,
    explain: bool,
    as_json: bool,
) -> None:
    """Run a discovery query against the persisted index."""
    from .errors import InvalidQuery
    from .profiler import ColumnType

    config, shard, _cache = _open_state(config_path)
    query = Query(page=Page(offset, limit))
    query.keywords = [token for kw in keywords for token in kw.split()]
    if after or before:
        start = parse_timestamp(after, name_hint=True) if after else float("-1e18")
        end = parse_timestamp(before, name_hint=True) if before else float("1e18")
        if (after and start is None) or (before and end is None):
            raise InvalidQuery("cannot parse --after/--before timestamp")
        query.temporal = TemporalFilter(start, end)
    if bbox:
        parts = [float(p) for p in bbox.split(",")]
        if len(parts) != 4:
            raise InvalidQuery("--bbox needs lat_min,lon_min,lat_max,lon_max")
        query.spatial = SpatialFilter(box=BoundingBox(parts[0], parts[2], parts[1], parts[3]))
    elif area:
        query.spatial = SpatialFilter(area=area)
    if sources:
        query.sources = set(sources)
    if types:
        query.required_types = {ColumnType.from_label(t) for t in types}
    if related_csv:
        path = Path(related_csv)
        if not path.is_file():
            raise ConfigError(f"no such file: {related_csv}")
        table = read_csv_bytes(path.read_bytes())
        related_profile = profile_table(table, config.profiler, name=path.stem)
        query.related = RelatedInput(related_profile, mode)

    results, total = execute(query, shard, config)
    if as_json:
        click.echo(
            json.dumps({"results": [result_to_json(r) for r in results], "total": total})
        )
        return
    click.echo(f"{total} result(s)")
    for r in results:
        line = f"{r.total_score:8.4f}  {r.dataset_id}  {r.snippet['name']}"
        if r.augmentation is not None:
            doc = result_to_json(r)["augmentation"]
            kind = doc["mode"]
            n = len(doc.get("pairs") or doc.get("column_pairs") or [])
            line += f"  [{kind}: {n} pair(s)]"
        click.echo(line)
        if explain:
            click.echo(f"          breakdown: {json.dumps(r.score_breakdown)}")


def execute(query: Query, shard: IndexShard, config: EngineConfig):
    from .search import execute_query

    return execute_query(query, shard, weights=config.weights)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--left", "left_csv", required=True, type=click.Path())
@click.option("--right-id", "right_id", required=True)
@click.option("--spec", "spec_arg", required=True, help="Spec JSON (inline or @file).")
@click.option("--out", "out_path", default="augmented.csv", type=click.Path())
@click.option("--json", "as_json", is_flag=True)
@engine_errors
def augment(
    config_path: str,
    left_csv: str,
    right_id: str,
    spec_arg: str,
    out_path: str,
    as_json: bool,
) -> None:
    """Materialize a join/union against an indexed dataset; writes the CSV
    and a .provenance.json sidecar."""
    from .errors import UnknownDataset

    config, shard, cache = _open_state(config_path)
    left_path = Path(left_csv)
    if not left_path.is_file():
        raise ConfigError(f"no such file: {left_csv}")
    if spec_arg.startswith("@"):
        spec_text = Path(spec_arg[1:]).read_text(encoding="utf-8")
    else:
        spec_text = spec_arg
    spec = spec_from_json(json.loads(spec_text))
    if not shard.has(right_id):
        raise UnknownDataset(f"no dataset {right_id!r}")
    right_profile = shard.get(right_id)
    right = materialize(right_profile.provenance, cache, build_plugins(config))
    left = read_csv_bytes(left_path.read_bytes())
    result = run_augment(left, right, spec, left_path.stem, right_id, config.profiler)
    Path(out_path).write_text(write_csv_text(result.table), encoding="utf-8")
    sidecar = Path(out_path).with_suffix(Path(out_path).suffix + ".provenance.json")
    sidecar.write_text(json.dumps(result.provenance, indent=2) + "\n", encoding="utf-8")
    if as_json:
        click.echo(json.dumps({"out": out_path, "provenance": result.provenance}))
    else:
        click.echo(f"wrote {out_path} ({result.table.row_count} rows) + {sidecar.name}")


@main.group()
def demo() -> None:
    """Self-contained end-to-end walkthroughs."""


@demo.command()
@click.option("--seed", default=0, type=int)
@click.option("--json", "as_json", is_flag=True)
@engine_errors
def bicycle(seed: int, as_json: bool) -> None:
    """Generate the trips/temperature world, union more months, join
    weather, and report the R² progression."""
    echo = (lambda line: None) if as_json else click.echo
    outcome = run_bicycle_demo(seed, echo)
    if as_json:
        click.echo(json.dumps(outcome))
    else:
        click.echo(
            "r2: {r2_before:.3f} -> {r2_after_union:.3f} (union) -> "
            "{r2_after_join:.3f} (join)".format(**outcome)
        )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@engine_errors
def serve(config_path: str) -> None:
    """Run the HTTP service."""
    from .service import run

    run(load_config(config_path))


if __name__ == "__main__":
    main()
