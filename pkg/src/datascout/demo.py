"""Synthetic bicycle-trips walkthrough: union more months, join weather.

The generated world mirrors a common augmentation story. The user holds one
month of daily bicycle trip counts with temperatures; the portal holds the
remaining months under slightly different column names, a daily rainfall
table, and unrelated decoys. Trips are a linear function of temperature and
rainfall plus noise, so a temperature-only model fitted on one month is
starved of signal; extending the time span (union) and adding rainfall
(join) should each raise the in-sample OLS R².

Everything is seeded; the run reports the three R² values and the search /
augmentation steps it took.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .augment import AugmentationSpec, join as join_tables, union as union_tables
from .config import EngineConfig
from .indexing import IndexShard
from .ingest import DatasetCache, LocalDirectoryPlugin, materialize
from .pipeline import ingest_plugin
from .profiler import profile_table
from .search import Query, RelatedInput, execute_query
from .table import TableData, write_csv_text
from .timestamps import Resolution

_TRIPS_PER_DEGREE = 140.0
_TRIPS_PER_MM_RAIN = -180.0
_BASE_TRIPS = 2000.0
_NOISE_TRIPS = 600.0


def _season_temperature(day_of_year: int, rng: np.random.Generator) -> float:
    mean = 13.0 + 11.0 * math.sin(2 * math.pi * (day_of_year - 105) / 366)
    return mean + rng.normal(0.0, 2.5)


@dataclass
class BicycleWorld:
    april: TableData  # the user's input: April only
    extension: TableData  # May-December, variant column names
    weather: TableData  # full-year daily rainfall
    decoys: dict[str, TableData]


def generate_world(seed: int) -> BicycleWorld:
    rng = np.random.default_rng(seed)
    year_days = [date(2020, 1, 1) + timedelta(days=i) for i in range(366)]
    temps = {d: _season_temperature(d.timetuple().tm_yday, rng) for d in year_days}
    rains = {d: round(float(rng.gamma(0.6, 4.0)), 1) for d in year_days}

    def trips(d: date) -> int:
        value = (
            _BASE_TRIPS
            + _TRIPS_PER_DEGREE * temps[d]
            + _TRIPS_PER_MM_RAIN * rains[d]
            + rng.normal(0.0, _NOISE_TRIPS)
        )
        return max(0, round(value))

    april_days = [d for d in year_days if d.month == 4]
    later_days = [d for d in year_days if d.month > 4]

    april = TableData.from_columns(
        [
            ("date", [d.isoformat() for d in april_days]),
            ("max_temperature", [f"{temps[d]:.1f}" for d in april_days]),
            ("daily_trips", [str(trips(d)) for d in april_days]),
        ]
    )
    extension = TableData.from_columns(
        [
            ("Date", [d.isoformat() for d in later_days]),
            ("max_temp", [f"{temps[d]:.1f}" for d in later_days]),
            ("daily_trips", [str(trips(d)) for d in later_days]),
        ]
    )
    weather = TableData.from_columns(
        [
            ("date", [d.isoformat() for d in year_days]),
            ("rain_mm", [str(rains[d]) for d in year_days]),
        ]
    )
    decoys = {
        "taxi_zones": TableData.from_columns(
            [
                ("zone", [f"zone-{i}" for i in range(40)]),
                ("borough", [("brooklyn", "queens", "manhattan", "bronx")[i % 4] for i in range(40)]),
            ]
        ),
        "air_quality_2019": TableData.from_columns(
            [
                (
                    "date",
                    [(date(2019, 1, 1) + timedelta(days=i)).isoformat() for i in range(120)],
                ),
                ("pm25", [f"{rng.uniform(2, 40):.1f}" for _ in range(120)]),
            ]
        ),
    }
    return BicycleWorld(april, extension, weather, decoys)


def ols_r2(features: list[list[float]], target: list[float]) -> float:
    """In-sample R-squared of a least-squares fit with intercept."""
    x = np.column_stack([np.ones(len(target))] + [np.asarray(f) for f in features])
    y = np.asarray(target)
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    residual = y - x @ coef
    ss_res = float(residual @ residual)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0


def _numeric_column(table: TableData, name: str) -> list[float]:
    return [float(v) for v in table.column(name).values]


def run_bicycle_demo(seed: int = 0, echo=lambda line: None) -> dict:
    """Run the full pipeline on the generated world; returns the R² trio and
    the ids the searches picked."""
    config = EngineConfig()
    world = generate_world(seed)

    with tempfile.TemporaryDirectory(prefix="datascout-demo-") as tmp:
        portal = Path(tmp) / "portal"
        portal.mkdir()
        names = {
            "east_river_trips_extension": world.extension,
            "citywide_daily_rainfall": world.weather,
        }
        names.update(world.decoys)
        for stem, table in names.items():
            (portal / f"{stem}.csv").write_text(write_csv_text(table), encoding="utf-8")

        cache = DatasetCache(Path(tmp) / "cache")
        shard = IndexShard()
        plugin = LocalDirectoryPlugin("demo-portal", portal)
        for dataset_id, title, status in ingest_plugin(plugin, shard, cache, config):
            echo(f"{status} {dataset_id} {title}")

        april_profile = profile_table(world.april, config.profiler, name="my april trips")
        r2_before = ols_r2(
            [_numeric_column(world.april, "max_temperature")],
            _numeric_column(world.april, "daily_trips"),
        )
        echo(f"r2 before augmentation: {r2_before:.3f}")

        # 1) union search: extend the time span; pick the best full-schema match
        results, _ = execute_query(
            Query(related=RelatedInput(april_profile, "union")), shard
        )
        union_pick = None
        for result in results:
            aug = result.augmentation
            if aug is not None and getattr(aug, "matched_fraction", 0) == 1.0:
                union_pick = aug
                break
        if union_pick is None:
            raise RuntimeError("no full-schema union candidate found")
        right_profile = shard.get(union_pick.dataset_id)
        right = materialize(right_profile.provenance, cache)
        unioned = union_tables(
            world.april,
            right,
            AugmentationSpec(
                "union",
                [(p.query_column, p.candidate_column) for p in union_pick.column_pairs],
            ),
        ).table
        echo(f"unioned with {union_pick.dataset_id} -> {unioned.row_count} rows")
        r2_after_union = ols_r2(
            [_numeric_column(unioned, "max_temperature")],
            _numeric_column(unioned, "daily_trips"),
        )
        echo(f"r2 after union: {r2_after_union:.3f}")

        # 2) join search: add a weather feature to the extended table
        unioned_profile = profile_table(unioned, config.profiler, name="extended trips")
        results, _ = execute_query(
            Query(keywords=["rainfall"], related=RelatedInput(unioned_profile, "join")),
            shard,
        )
        if not results or results[0].augmentation is None:
            raise RuntimeError("no join candidate found")
        join_pick = results[0].augmentation
        weather_profile = shard.get(join_pick.dataset_id)
        weather = materialize(weather_profile.provenance, cache)
        temporal_pair = next(p for p in join_pick.pairs if p.kind == "temporal")
        joined = join_tables(
            unioned,
            weather,
            AugmentationSpec(
                "join",
                [(temporal_pair.query_column, temporal_pair.candidate_column)],
                temporal_resolution=Resolution.DAY,
            ),
        ).table
        echo(f"joined with {join_pick.dataset_id} -> columns {joined.column_names}")
        rain_column = next(
            name for name in joined.column_names if name not in unioned.column_names
        )
        rows = [
            (float(t), float(r), float(y))
            for t, r, y in zip(
                joined.column("max_temperature").values,
                joined.column(rain_column).values,
                joined.column("daily_trips").values,
            )
            if r != ""
        ]
        r2_after_join = ols_r2(
            [[t for t, _, _ in rows], [r for _, r, _ in rows]],
            [y for _, _, y in rows],
        )
        echo(f"r2 after join: {r2_after_join:.3f}")

    return {
        "seed": seed,
        "r2_before": r2_before,
        "r2_after_union": r2_after_union,
        "r2_after_join": r2_after_join,
        "union_dataset": union_pick.dataset_id,
        "join_dataset": join_pick.dataset_id,
    }
