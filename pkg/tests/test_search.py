import json
import random
from datetime import date

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import day_strings, make_table, utc
from datascout.errors import EmptyQuery, InvalidQuery, UnknownNamedArea
from datascout.indexing import IndexShard, tokenize
from datascout.profiler import ColumnType, profile_table
from datascout.search import (
    BoundingBox,
    Gazetteer,
    JoinCandidate,
    Page,
    Query,
    RelatedInput,
    SpatialFilter,
    TemporalFilter,
    UnionCandidate,
    execute_query,
    join_search,
    make_snippet,
    name_similarity,
    query_from_json,
    query_to_json,
    result_to_json,
    union_search,
)
from datascout.timestamps import Resolution


def profile_of(name="", description="", source="fixture", overrides=None, **columns):
    return profile_table(
        make_table(**columns),
        name=name,
        description=description,
        source=source,
        type_overrides=overrides,
    )


class TestNameSimilarity:
    def test_case_fold(self):
        assert name_similarity("Date", "date") == 1.0

    def test_temp_temperature(self):
        assert name_similarity("temp", "temperature") == pytest.approx(1 - 7 / 11)

    def test_separator_fold(self):
        assert name_similarity("pickup_time", "pickup time") == 1.0
        assert name_similarity("pickup-time", "Pickup  Time") == 1.0

    def test_both_empty(self):
        assert name_similarity("", " ") == 1.0

    def test_oracle_agreement_on_random_pairs(self):
        # separator-free alphabet: folding reduces to casefold, so the
        # textbook DP checks the distance computation directly
        rng = random.Random(71)
        alphabet = "abcdeXY"
        for _ in range(1000):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
            want_d = oracles.levenshtein_matrix(a.casefold(), b.casefold())
            longest = max(len(a), len(b))
            want = 1.0 if longest == 0 else 1 - want_d / longest
            assert name_similarity(a, b) == pytest.approx(want)

    def test_oracle_agreement_with_separators(self):
        from datascout.search import _fold_name

        rng = random.Random(72)
        alphabet = "ab_- x"
        for _ in range(300):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 10)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 10)))
            fa, fb = _fold_name(a), _fold_name(b)
            want_d = oracles.levenshtein_matrix(fa, fb)
            longest = max(len(fa), len(fb))
            want = 1.0 if longest == 0 else 1 - want_d / longest
            assert name_similarity(a, b) == pytest.approx(want)


class TestJoinSearch:
    def test_exact_copy_column_is_found(self):
        shard = IndexShard()
        keys = [f"key-{i}" for i in range(60)]
        indexed = profile_of(name="right", k=list(keys))
        shard.add_dataset(indexed)
        # extra column: the query table must not be byte-identical, or it
        # would share the indexed dataset's content-hash id (self-match)
        query = profile_of(name="left", k=list(keys), other=["x"] * 60)
        candidates = join_search(query, shard)
        assert [c.dataset_id for c in candidates] == [indexed.id]
        assert candidates[0].join_score >= 0.8
        pair = candidates[0].pairs[0]
        assert (pair.query_column, pair.candidate_column, pair.kind) == ("k", "k", "categorical")

    def test_disjoint_free_text_no_candidates(self):
        shard = IndexShard()
        shard.add_dataset(profile_of(name="right", words=[f"alpha{i}" for i in range(50)]))
        query = profile_of(name="left", words=[f"omega{i}" for i in range(50)])
        assert join_search(query, shard) == []

    def test_disjoint_temporal_no_pair(self):
        shard = IndexShard()
        monthly = profile_of(
            name="right", when=[f"2020-{m:02d}" for m in range(5, 13)]
        )
        shard.add_dataset(monthly)
        query = profile_of(name="left", when=day_strings(date(2020, 4, 1), 30))
        assert join_search(query, shard) == []

    def test_numeric_overlap_scored(self):
        shard = IndexShard()
        wide = profile_of(name="right", v=[str(x) for x in range(0, 101)])
        shard.add_dataset(wide)
        query = profile_of(name="left", v=[str(x) for x in range(40, 61)])
        candidates = join_search(query, shard)
        assert candidates and candidates[0].dataset_id == wide.id
        assert candidates[0].join_score == pytest.approx(1.0)

    def test_spatial_pairs_come_in_axis_pairs(self):
        rng = random.Random(3)
        shard = IndexShard()
        lats = [f"{rng.uniform(40.5, 40.9):.5f}" for _ in range(40)]
        lons = [f"{rng.uniform(-74.2, -73.7):.5f}" for _ in range(40)]
        indexed = profile_of(name="right", latitude=list(lats), longitude=list(lons))
        shard.add_dataset(indexed)
        query = profile_of(name="left", lat=list(lats), lon=list(lons))
        candidates = join_search(query, shard)
        assert candidates[0].dataset_id == indexed.id
        kinds = [(p.query_column, p.candidate_column) for p in candidates[0].pairs]
        assert ("lat", "latitude") in kinds and ("lon", "longitude") in kinds
        assert all(p.kind == "spatial" for p in candidates[0].pairs)

    def test_floor_drops_noise_pairs(self):
        shard = IndexShard()
        wide = profile_of(name="right", v=[str(x) for x in range(0, 10001, 10)])
        shard.add_dataset(wide)
        # query range [0, 10] barely overlaps [0, 10000]: reverse containment
        # is high but query->candidate coverage is ~1, so pair survives;
        # swap roles to get a sub-floor score
        query = profile_of(name="left", v=[str(x) for x in range(0, 10001, 10)])
        narrow = profile_of(name="narrow", v=["0", "5", "10"])
        shard2 = IndexShard()
        shard2.add_dataset(narrow)
        candidates = join_search(query, shard2)
        assert candidates == []  # 10/10000 coverage is under the 0.05 floor


class TestUnionSearch:
    def test_renamed_schema_similarities(self):
        shard = IndexShard()
        indexed = profile_of(
            name="other",
            Date=day_strings(date(2020, 5, 1), 20),
            trips_total=[str(i) for i in range(20)],
        )
        shard.add_dataset(indexed)
        query = profile_of(
            name="mine",
            date=day_strings(date(2020, 4, 1), 20),
            trips=[str(i) for i in range(20)],
        )
        candidates = union_search(query, shard)
        assert len(candidates) == 1
        cand = candidates[0]
        sims = {
            (p.query_column, p.candidate_column): p.name_similarity
            for p in cand.column_pairs
        }
        assert sims[("date", "Date")] == 1.0
        assert sims[("trips", "trips_total")] == pytest.approx(1 - 6 / 11)
        assert cand.matched_fraction == 1.0
        assert cand.union_score == pytest.approx((1.0 + 1 - 6 / 11) / 2)

    def test_same_names_wrong_types_excluded(self):
        shard = IndexShard()
        decoy = profile_of(
            name="decoy",
            when=[f"text{i}" for i in range(10)],  # categorical
            trips=[f"w{i}" for i in range(10)],  # categorical
        )
        shard.add_dataset(decoy)
        query = profile_of(
            name="mine",
            when=day_strings(date(2020, 4, 1), 10),
            trips=[str(i) for i in range(10)],
        )
        assert union_search(query, shard) == []

    def test_identical_schema_scores_one(self):
        shard = IndexShard()
        indexed = profile_of(name="a", d=day_strings(date(2020, 1, 1), 5), n=["1"] * 5)
        shard.add_dataset(indexed)
        query = profile_of(name="b", d=day_strings(date(2021, 1, 1), 5), n=["9"] * 5)
        candidates = union_search(query, shard)
        assert candidates[0].union_score == 1.0
        assert candidates[0].matched_fraction == 1.0

    def test_greedy_matching_is_a_matching(self):
        shard = IndexShard()
        indexed = profile_of(
            name="other",
            value=[str(i) for i in range(5)],
            value_total=[str(i) for i in range(5)],
        )
        shard.add_dataset(indexed)
        query = profile_of(
            name="mine",
            value=[str(i) for i in range(5)],
            value_2=[str(i) for i in range(5)],
        )
        candidates = union_search(query, shard)
        pairs = candidates[0].column_pairs
        assert len({p.query_column for p in pairs}) == len(pairs)
        assert len({p.candidate_column for p in pairs}) == len(pairs)


class TestSnippets:
    def test_temporal_extent_from_summary(self):
        profile = profile_of(name="d", when=day_strings(date(2020, 4, 1), 30))
        snippet = make_snippet(profile)
        assert snippet["temporal_extent"] == ["2020-04-01T00:00:00Z", "2020-04-30T00:00:00Z"]
        assert "spatial_extent" not in snippet

    def test_spatial_extent_hull(self):
        profile = profile_of(name="d", latitude=["40.5", "40.9"], longitude=["-74.2", "-73.8"])
        snippet = make_snippet(profile)
        (lat0, lon0), (lat1, lon1) = snippet["spatial_extent"]
        assert (lat0, lat1) == (40.5, 40.9)
        assert (lon0, lon1) == (-74.2, -73.8)

    def test_snippet_deterministic(self):
        profile = profile_of(name="d", v=["1", "2", "3"])
        a = json.dumps(make_snippet(profile), sort_keys=True)
        b = json.dumps(make_snippet(profile), sort_keys=True)
        assert a == b


def build_fixture_corpus():
    """Three datasets; exactly one mentions taxi AND covers NYC AND 2016-2021."""
    rng = random.Random(5)
    taxi_nyc = profile_of(
        name="NYC Taxi Trips 2019",
        description="Yellow taxi trips",
        source="socrata-mock",
        pickup_date=day_strings(date(2019, 3, 1), 60),
        latitude=[f"{rng.uniform(40.6, 40.8):.5f}" for _ in range(60)],
        longitude=[f"{rng.uniform(-74.0, -73.8):.5f}" for _ in range(60)],
        fare=[f"{rng.uniform(3, 60):.2f}" for _ in range(60)],
    )
    taxi_chicago = profile_of(
        name="Chicago Taxi Trips",
        description="Taxi trips in Chicago",
        source="socrata-mock",
        pickup_date=day_strings(date(2019, 3, 1), 60),
        latitude=[f"{rng.uniform(41.7, 42.0):.5f}" for _ in range(60)],
        longitude=[f"{rng.uniform(-87.9, -87.5):.5f}" for _ in range(60)],
        fare=[f"{rng.uniform(3, 60):.2f}" for _ in range(60)],
    )
    bikes_nyc = profile_of(
        name="NYC Bike Counts",
        description="Bicycle counters",
        source="upload",
        count_date=day_strings(date(2019, 3, 1), 60),
        latitude=[f"{rng.uniform(40.6, 40.8):.5f}" for _ in range(60)],
        longitude=[f"{rng.uniform(-74.0, -73.8):.5f}" for _ in range(60)],
        riders=[str(rng.randint(100, 900)) for _ in range(60)],
    )
    shard = IndexShard()
    for p in (taxi_nyc, taxi_chicago, bikes_nyc):
        shard.add_dataset(p)
    return shard, taxi_nyc, taxi_chicago, bikes_nyc


class TestExecuteQuery:
    def test_taxi_nyc_time_window_single_result(self):
        shard, taxi_nyc, *_ = build_fixture_corpus()
        query = Query(
            keywords=["taxi"],
            temporal=TemporalFilter(utc(2016, 1, 1), utc(2021, 12, 31)),
            spatial=SpatialFilter(area="nyc"),
        )
        results, total = execute_query(query, shard)
        assert total == 1
        assert results[0].dataset_id == taxi_nyc.id
        assert results[0].score_breakdown["keyword"] == 1.0

    def test_source_filter_only(self):
        shard, taxi_nyc, taxi_chicago, bikes = build_fixture_corpus()
        results, total = execute_query(Query(sources={"socrata-mock"}), shard)
        assert {r.dataset_id for r in results} == {taxi_nyc.id, taxi_chicago.id}

    def test_required_types_all_present_semantics(self):
        shard, *_ = build_fixture_corpus()
        results, _ = execute_query(
            Query(required_types={ColumnType.TEMPORAL, ColumnType.SPATIAL_LATITUDE}),
            shard,
        )
        assert len(results) == 3
        results, _ = execute_query(
            Query(required_types={ColumnType.CATEGORICAL}), shard
        )
        assert results == []

    def test_related_join_ranks_planted_target_first(self):
        shard = IndexShard()
        keys = [f"id-{i}" for i in range(80)]
        target = profile_of(name="joinable", k=list(keys), extra=[str(i) for i in range(80)])
        decoy = profile_of(name="partial", k=keys[:20] + [f"other{i}" for i in range(300)])
        shard.add_dataset(target)
        shard.add_dataset(decoy)
        query_profile = profile_of(name="mine", k=list(keys))
        results, _ = execute_query(
            Query(related=RelatedInput(query_profile, "join")), shard
        )
        assert results[0].dataset_id == target.id
        assert isinstance(results[0].augmentation, JoinCandidate)
        assert results[0].augmentation.pairs

    def test_join_ranking_monotone_in_containment(self):
        shard = IndexShard()
        keys = [f"id-{i}" for i in range(100)]
        high = profile_of(name="high", k=list(keys))
        low = profile_of(name="low", k=keys[:55] + [f"z{i}" for i in range(45)])
        shard.add_dataset(high)
        shard.add_dataset(low)
        query_profile = profile_of(name="mine", k=list(keys), extra=["1"] * 100)
        results, _ = execute_query(Query(related=RelatedInput(query_profile, "join")), shard)
        ids = [r.dataset_id for r in results]
        assert ids.index(high.id) < ids.index(low.id)

    def test_mode_either_prefers_better_component(self):
        shard, taxi_nyc, *_ = build_fixture_corpus()
        query_profile = profile_of(
            name="mine",
            pickup_date=day_strings(date(2019, 3, 10), 20),
            fare=[f"{5 + i}" for i in range(20)],
        )
        results, _ = execute_query(
            Query(related=RelatedInput(query_profile, "either")), shard
        )
        assert results
        for r in results:
            assert isinstance(r.augmentation, (JoinCandidate, UnionCandidate))
            assert max(r.score_breakdown["join"], r.score_breakdown["union"]) > 0

    def test_empty_query_rejected(self):
        shard, *_ = build_fixture_corpus()
        with pytest.raises(EmptyQuery):
            execute_query(Query(), shard)

    def test_unknown_named_area(self):
        shard, *_ = build_fixture_corpus()
        with pytest.raises(UnknownNamedArea):
            execute_query(Query(spatial=SpatialFilter(area="atlantis")), shard)

    def test_inverted_window_rejected(self):
        shard, *_ = build_fixture_corpus()
        with pytest.raises(InvalidQuery):
            execute_query(
                Query(temporal=TemporalFilter(utc(2021, 1, 1), utc(2020, 1, 1))), shard
            )

    def test_temporal_resolution_filter_equal_or_finer(self):
        shard = IndexShard()
        daily = profile_of(name="daily", when=day_strings(date(2020, 1, 1), 60))
        monthly = profile_of(name="monthly", when=[f"2020-{m:02d}" for m in range(1, 13)])
        shard.add_dataset(daily)
        shard.add_dataset(monthly)
        window = TemporalFilter(utc(2020, 1, 1), utc(2021, 1, 1), Resolution.DAY)
        results, _ = execute_query(Query(temporal=window), shard)
        assert {r.dataset_id for r in results} == {daily.id}
        window = TemporalFilter(utc(2020, 1, 1), utc(2021, 1, 1), Resolution.MONTH)
        results, _ = execute_query(Query(temporal=window), shard)
        assert {r.dataset_id for r in results} == {daily.id, monthly.id}

    def test_paging_concatenation_equals_unpaged(self):
        shard = IndexShard()
        for i in range(17):
            shard.add_dataset(
                profile_of(name=f"common term {i}", v=[str(i)] * 3)
            )
        unpaged, total = execute_query(
            Query(keywords=["common"], page=Page(0, 100)), shard
        )
        assert total == 17
        paged = []
        for offset in range(0, 17, 5):
            page, page_total = execute_query(
                Query(keywords=["common"], page=Page(offset, 5)), shard
            )
            assert page_total == 17
            paged.extend(page)
        assert [r.dataset_id for r in paged] == [r.dataset_id for r in unpaged]

    def test_ranking_deterministic_with_documented_tie_break(self):
        shard = IndexShard()
        for i in range(6):
            shard.add_dataset(profile_of(name="same name", v=[str(i)]))
        results, _ = execute_query(Query(keywords=["same"]), shard)
        scores = [r.total_score for r in results]
        assert scores == sorted(scores, reverse=True)
        ids = [r.dataset_id for r in results]
        assert ids == sorted(ids)  # equal scores: id ascending

    def test_filter_soundness_small_random_corpus(self):
        rng = random.Random(97)
        shard = IndexShard()
        docs = {}
        for i in range(40):
            kwargs = {
                "when": day_strings(date(2018 + rng.randint(0, 3), 1 + rng.randint(0, 11), 1), 20),
                "v": [str(rng.uniform(0, 100)) for _ in range(20)],
            }
            if rng.random() < 0.5:
                base_lat = rng.uniform(-60, 60)
                base_lon = rng.uniform(-150, 150)
                kwargs["latitude"] = [f"{base_lat + rng.uniform(0, 2):.4f}" for _ in range(20)]
                kwargs["longitude"] = [f"{base_lon + rng.uniform(0, 2):.4f}" for _ in range(20)]
            p = profile_of(
                name=f"dataset {rng.choice(['alpha', 'beta', 'gamma'])} {i}",
                source=rng.choice(["socrata-mock", "upload"]),
                **kwargs,
            )
            shard.add_dataset(p)
            from datascout.profiler import profile_to_json

            docs[p.id] = profile_to_json(p)
        for _ in range(150):
            query = Query()
            query_doc = {}
            if rng.random() < 0.5:
                kw = rng.choice(["alpha", "beta", "gamma", "dataset", "zzz"])
                query.keywords = [kw]
                query_doc["keywords"] = [kw]
            if rng.random() < 0.5:
                t0 = utc(2018, 1, 1) + rng.uniform(0, 4 * 365) * 86400
                t1 = t0 + rng.uniform(0, 400) * 86400
                query.temporal = TemporalFilter(t0, t1)
                query_doc["temporal"] = {"_start": t0, "_end": t1}
            if rng.random() < 0.4:
                lat0 = rng.uniform(-70, 60)
                lon0 = rng.uniform(-160, 140)
                box = BoundingBox(lat0, lat0 + rng.uniform(0, 30), lon0, lon0 + rng.uniform(0, 40))
                query.spatial = SpatialFilter(box=box)
                query_doc["spatial"] = {
                    "box": [[box.lat_min, box.lon_min], [box.lat_max, box.lon_max]]
                }
            if rng.random() < 0.3:
                query.sources = {rng.choice(["socrata-mock", "upload"])}
                query_doc["sources"] = sorted(query.sources)
            if not (query.keywords or query.temporal or query.spatial or query.sources):
                continue
            query.page = Page(0, 10_000)  # soundness compares full result sets
            results, _ = execute_query(Query(**query.__dict__), shard)
            got = {r.dataset_id for r in results}
            want = {
                ds for ds, doc in docs.items()
                if oracles.profile_matches(doc, query_doc, tokenize)
            }
            assert got == want


class TestQueryJson:
    def test_round_trip(self):
        query = Query(
            keywords=["taxi", "trips"],
            temporal=TemporalFilter(utc(2016, 1, 1), utc(2021, 1, 1), Resolution.DAY),
            spatial=SpatialFilter(box=BoundingBox(40.0, 41.0, -74.5, -73.5)),
            sources={"socrata-mock"},
            required_types={ColumnType.TEMPORAL},
            page=Page(10, 5),
        )
        doc = json.loads(json.dumps(query_to_json(query)))
        back = query_from_json(doc)
        assert back.keywords == query.keywords
        assert back.temporal == query.temporal
        assert back.spatial == query.spatial
        assert back.sources == query.sources
        assert back.required_types == query.required_types
        assert back.page == query.page

    def test_named_area_form(self):
        query = Query(spatial=SpatialFilter(area="nyc"))
        doc = query_to_json(query)
        assert doc["spatial"] == {"area": "nyc"}
        assert query_from_json(doc).spatial.area == "nyc"

    def test_related_profile_inline(self):
        from datascout.profiler import profile_to_json

        profile = profile_of(name="mine", v=["1", "2"])
        doc = {"related": {"mode": "join", "profile": profile_to_json(profile)}}
        query = query_from_json(doc)
        assert query.related.mode == "join"
        assert query.related.profile == profile

    def test_bad_required_type_rejected(self):
        with pytest.raises(InvalidQuery):
            query_from_json({"required_types": ["sparkly"]})

    def test_result_json_shape(self):
        shard, taxi_nyc, *_ = build_fixture_corpus()
        results, _ = execute_query(Query(keywords=["taxi"]), shard)
        doc = result_to_json(results[0])
        assert set(doc) == {
            "dataset_id", "total_score", "score_breakdown", "snippet", "augmentation",
        }
        json.dumps(doc)  # serializable


class TestGazetteer:
    def test_bundled_areas_resolve(self):
        gaz = Gazetteer.bundled()
        box = gaz.resolve("NYC")
        assert box.lat_min < 40.7 < box.lat_max
        assert box.lon_min < -74.0 < box.lon_max
        assert "brooklyn" in gaz.names()
        assert len(gaz.names()) >= 50

    def test_case_and_whitespace_insensitive(self):
        gaz = Gazetteer.bundled()
        assert gaz.resolve(" New   York City ") == gaz.resolve("new york city")

    def test_unknown_area_raises(self):
        with pytest.raises(UnknownNamedArea):
            Gazetteer.bundled().resolve("middle earth")
