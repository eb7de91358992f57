"""Compatibility scoring: overlap, schema similarity, key likelihood."""

from __future__ import annotations

import random

import pytest

from joinrank.compatibility import (build_compatibility_graph, compatibility_score,
                                    instance_jaccard, load_score_cache, pair_key,
                                    save_score_cache, schema_similarity)
from joinrank.corpus import (ColumnProfile, GoldConstraintSet, TableCorpus,
                             profile_column, profile_corpus)
from joinrank.embedding import DeterministicFallbackProvider
from joinrank.relevance import CandidatePool

from conftest import StubProvider, make_table, students_pair


def profile_of(values, header="h", table="t", others="", declared="text",
               segments=None) -> ColumnProfile:
    table_obj = make_table(table, [(header, declared, list(values))])
    profile = profile_column(table_obj, 0)
    if segments is not None or others:
        segments = segments or (header, table, others)
        profile = ColumnProfile(profile.distinct_values, profile.uniqueness,
                                profile.row_count, segments,
                                profile.rendered_text, declared)
    return profile


def test_jaccard_definition():
    a = profile_of(["1", "2", "3"])
    b = profile_of(["2", "3", "4"])
    assert instance_jaccard(a, b) == pytest.approx(0.5, abs=1e-12)


def test_jaccard_identity_and_empty():
    a = profile_of(["1", "2"])
    assert instance_jaccard(a, a) == 1.0
    empty = profile_of([])
    assert instance_jaccard(empty, empty) == 0.0


def test_jaccard_on_constant_city_columns():
    # distinct sets are both {bos}: intersection 1, union 1
    roster, assignments = students_pair()
    city_a = profile_column(roster, 1)
    city_b = profile_column(assignments, 2)
    assert instance_jaccard(city_a, city_b) == 1.0


def test_schema_similarity_weighted_sum():
    provider = StubProvider({
        "h1": [1.0, 0.0], "h2": [0.8, 0.6],       # cosine 0.8
        "t1": [0.0, 1.0], "t2": [0.6, 0.8],       # cosine 0.8
        "o1": [1.0, 1.0], "o2": [1.0, 0.0],       # cosine ~0.7071
    })
    value = schema_similarity(provider, ("h1", "t1", "o1"), ("h2", "t2", "o2"),
                              (0.5, 0.25, 0.25))
    expected = 0.5 * 0.8 + 0.25 * 0.8 + 0.25 * (2 ** 0.5 / 2)
    assert value == pytest.approx(expected, abs=1e-6)


def test_schema_similarity_header_only_weights():
    provider = StubProvider({"h1": [1.0, 0.0], "h2": [0.8, 0.6]})
    value = schema_similarity(provider, ("h1", "x", "y"), ("h2", "x", "y"), (1.0, 0.0, 0.0))
    assert value == pytest.approx(0.8, abs=1e-6)


def test_schema_similarity_empty_segment_bounds_result():
    provider = DeterministicFallbackProvider()
    value = schema_similarity(provider, ("id", "loan", ""), ("id", "loan", "a, b"),
                              (0.5, 0.25, 0.25))
    assert value <= 0.75 + 1e-9


def test_schema_similarity_identical_columns():
    provider = DeterministicFallbackProvider()
    segments = ("id", "loan", "amount, rate")
    assert schema_similarity(provider, segments, segments) == pytest.approx(1.0, abs=1e-6)


def test_schema_similarity_rejects_bad_weights():
    provider = DeterministicFallbackProvider()
    with pytest.raises(ValueError):
        schema_similarity(provider, ("a", "b", "c"), ("a", "b", "c"), (0.5, 0.25, 0.1))
    with pytest.raises(ValueError):
        schema_similarity(provider, ("a", "b", "c"), ("a", "b", "c"), (1.5, -0.25, -0.25))


def test_compatibility_formula_arithmetic():
    # designed so schema similarity is 0.8, overlap 0.5, uniqueness (1.0, 0.5):
    # distinct sets {1,2,3} vs {2,3,4} overlap 2/4
    provider = StubProvider({"h1": [1.0, 0.0], "h2": [0.8, 0.6]})
    a = profile_of(["1", "2", "3"], header="h1",
                   segments=("h1", "", ""))
    b = profile_of(["2", "3", "4", "4", "4", "4"], header="h2",
                   segments=("h2", "", ""))
    value = compatibility_score(provider, a, b, (1.0, 0.0, 0.0))
    assert a.uniqueness == 1.0
    assert b.uniqueness == 0.5
    assert value == pytest.approx((0.8 + 0.5) * 1.0, abs=1e-6)
    assert value == pytest.approx(1.3, abs=1e-6)


def test_compatibility_zero_when_both_empty():
    provider = DeterministicFallbackProvider()
    a = profile_of([], header="x")
    b = profile_of([], header="y", table="u")
    assert compatibility_score(provider, a, b) == 0.0


def test_key_factor_on_students_example():
    # city-city: both sides repeat values, factor max(1/2, 1/3) = 1/2 exactly;
    # student_id-student_id: roster side is a key, factor 1.0 exactly.
    roster, assignments = students_pair()
    city = (profile_column(roster, 1), profile_column(assignments, 2))
    ids = (profile_column(roster, 0), profile_column(assignments, 1))
    assert max(city[0].uniqueness, city[1].uniqueness) == 0.5
    assert max(ids[0].uniqueness, ids[1].uniqueness) == 1.0
    # with equal schema+overlap sums, the id join must beat the city join;
    # header-only weights make both sums equal (identical headers, overlap 1)
    provider = DeterministicFallbackProvider()
    weights = (1.0, 0.0, 0.0)
    score_city = compatibility_score(provider, city[0], city[1], weights)
    score_ids = compatibility_score(provider, ids[0], ids[1], weights)
    assert score_city == pytest.approx(0.5 * (1.0 + 1.0), abs=1e-6)
    assert score_ids == pytest.approx(1.0 * (1.0 + 1.0), abs=1e-6)
    assert score_ids > score_city


def test_compatibility_symmetry():
    rng = random.Random(11)
    provider = DeterministicFallbackProvider()
    for i in range(40):
        a = profile_of([str(rng.randint(0, 9)) for _ in range(rng.randint(0, 6))],
                       header=f"h{rng.randint(0, 5)}", table="ta",
                       others="x, y")
        b = profile_of([str(rng.randint(0, 9)) for _ in range(rng.randint(0, 6))],
                       header=f"g{rng.randint(0, 5)}", table="tb",
                       others="z")
        assert compatibility_score(provider, a, b) == \
            pytest.approx(compatibility_score(provider, b, a), abs=1e-12)


def test_compatibility_monotone_in_each_factor():
    provider = StubProvider({"h1": [1.0, 0.0], "h2": [0.8, 0.6], "h3": [1.0, 0.0]})
    base_a = profile_of(["1", "2"], header="h1", segments=("h1", "", ""))
    base_b = profile_of(["2", "3", "3", "4"], header="h2", segments=("h2", "", ""))
    base = compatibility_score(provider, base_a, base_b, (1.0, 0.0, 0.0))
    # raise schema similarity (identical headers)
    better_b = ColumnProfile(base_b.distinct_values, base_b.uniqueness, base_b.row_count,
                             ("h3", "", ""), base_b.rendered_text, "text")
    assert compatibility_score(provider, base_a, better_b, (1.0, 0.0, 0.0)) >= base
    # raise overlap (same values)
    same_values = profile_of(["1", "2", "2", "9"], header="h2", segments=("h2", "", ""))
    assert compatibility_score(provider, base_a, same_values, (1.0, 0.0, 0.0)) >= base
    # raise uniqueness on the weaker side
    unique_b = profile_of(["2", "3", "4", "5"], header="h2", segments=("h2", "", ""))
    assert compatibility_score(provider, base_a, unique_b, (1.0, 0.0, 0.0)) >= base


def test_type_mismatch_drops_overlap_keeps_schema():
    provider = StubProvider({"h1": [1.0, 0.0], "h2": [0.8, 0.6]})
    numeric = profile_of(["1", "2"], header="h1", declared="real", segments=("h1", "", ""))
    dated = profile_of(["1", "2"], header="h2", declared="date", segments=("h2", "", ""))
    value = compatibility_score(provider, numeric, dated, (1.0, 0.0, 0.0))
    # overlap would be 1.0, but the numeric/date clash zeroes it
    assert value == pytest.approx(0.8 * 1.0, abs=1e-6)


def _students_pool_and_profiles():
    roster, assignments = students_pair()
    corpus = TableCorpus.from_tables([roster, assignments])
    pool = CandidatePool.build("q", [(t, 0.5) for t in corpus], 20)
    return corpus, pool, profile_corpus(corpus)


def test_graph_cardinality_and_symmetry():
    corpus, pool, profiles = _students_pool_and_profiles()
    provider = DeterministicFallbackProvider()
    graph = build_compatibility_graph(pool, profiles, provider)
    # 2 x 3 column pairs across the single table pair
    assert len(graph.scores) == 6
    assert graph.score(("roster", 0), ("assignments", 1)) == \
        graph.score(("assignments", 1), ("roster", 0))
    assert all(value >= 0.0 for value in graph.scores.values())


def test_graph_single_table_pool_is_empty():
    roster, _ = students_pair()
    pool = CandidatePool.build("q", [(roster, 0.5)], 20)
    provider = DeterministicFallbackProvider()
    graph = build_compatibility_graph(pool, {("roster", 0): profile_column(roster, 0),
                                             ("roster", 1): profile_column(roster, 1)},
                                      provider)
    assert graph.scores == {}
    assert graph.best_pairs == {}


def test_gold_override_sets_exact_one():
    corpus, pool, profiles = _students_pool_and_profiles()
    provider = DeterministicFallbackProvider()
    gold = GoldConstraintSet(frozenset({
        GoldConstraintSet.canonical(("roster", 1), ("assignments", 0))}))
    graph = build_compatibility_graph(pool, profiles, provider, gold=gold)
    assert graph.score(("roster", 1), ("assignments", 0)) == 1.0
    # non-gold pairs keep their computed value
    plain = build_compatibility_graph(pool, profiles, provider)
    assert graph.score(("roster", 0), ("assignments", 1)) == \
        plain.score(("roster", 0), ("assignments", 1))


def test_best_pair_prefers_lower_indices_on_ties():
    corpus, pool, profiles = _students_pool_and_profiles()
    provider = DeterministicFallbackProvider()
    gold = GoldConstraintSet(frozenset({
        GoldConstraintSet.canonical(("roster", 0), ("assignments", 1)),
        GoldConstraintSet.canonical(("roster", 0), ("assignments", 2)),
    }))
    graph = build_compatibility_graph(pool, profiles, provider, gold=gold)
    best = graph.best_pair("assignments", "roster")
    assert best == (1, 0, 1.0)  # assignment column 1 beats column 2 at equal score
    assert graph.best_pair("roster", "assignments") == (0, 1, 1.0)


def test_graph_build_is_pure():
    corpus, pool, profiles = _students_pool_and_profiles()
    provider = DeterministicFallbackProvider()
    a = build_compatibility_graph(pool, profiles, provider)
    b = build_compatibility_graph(pool, profiles, provider)
    assert a.scores == b.scores
    assert a.best_pairs == b.best_pairs


def test_score_cache_roundtrip(tmp_path):
    corpus, pool, profiles = _students_pool_and_profiles()
    provider = DeterministicFallbackProvider()
    graph = build_compatibility_graph(pool, profiles, provider)
    path = tmp_path / "omega.cache"
    save_score_cache(path, corpus, graph.scores)
    reloaded = load_score_cache(path, corpus)
    assert reloaded == graph.scores
    # cache is dropped when the corpus content changes
    changed = TableCorpus.from_tables([
        make_table("roster", [("student_id", "integer", ["1", "9"]),
                              ("city", "text", ["BOS", "BOS"])]),
        corpus.get("assignments"),
    ])
    assert load_score_cache(path, changed) == {}
