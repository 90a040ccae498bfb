import numpy as np
import pytest

from langfam.errors import (
    EmptyCandidates,
    MissingSeed,
    NoHighResourceLanguages,
    UnknownLanguage,
    ValidationError,
)
from langfam.planner import curriculum_order, rank_pivots, recommend_transfer_source
from langfam.similarity import SimilarityMatrix, similarity_stats
from langfam.taxonomy import default_registry, load_registry

from conftest import paper_means_matrix

# Similarity-to-English ordering used by the curriculum experiments: nearest
# first. Values are arbitrary but strictly decreasing.
CURRICULUM_NEAR_TO_FAR = [
    "AppleScript", "Python", "Swift", "Kotlin", "JavaScript",
    "Go", "Rust", "Java", "C++", "Haskell",
]


def curriculum_matrix():
    names = CURRICULUM_NEAR_TO_FAR + ["English"]
    n = len(names)
    values = np.full((n, n), 0.4)
    np.fill_diagonal(values, 1.0)
    for rank, language in enumerate(CURRICULUM_NEAR_TO_FAR):
        sim = 0.30 - 0.02 * rank
        values[rank, n - 1] = sim
        values[n - 1, rank] = sim
    return SimilarityMatrix(languages=names, values=values)


def transfer_matrix():
    names = ["Java", "Python", "Kotlin", "AppleScript"]
    values = np.array(
        [
            [1.00, 0.50, 0.60, 0.20],
            [0.50, 1.00, 0.45, 0.35],
            [0.60, 0.45, 1.00, 0.25],
            [0.20, 0.35, 0.25, 1.00],
        ]
    )
    return SimilarityMatrix(languages=names, values=values)


# --- transfer ---------------------------------------------------------------


def test_kotlin_prefers_java(registry):
    recommendation = recommend_transfer_source("Kotlin", transfer_matrix(), registry)
    assert recommendation.chosen == "Java"
    ranked = dict(recommendation.ranked_sources)
    assert ranked["Java"] > ranked["Python"]


def test_applescript_prefers_python(registry):
    recommendation = recommend_transfer_source("AppleScript", transfer_matrix(), registry)
    assert recommendation.chosen == "Python"


def test_sources_are_high_tier_only(registry):
    recommendation = recommend_transfer_source("Kotlin", transfer_matrix(), registry)
    for name, _ in recommendation.ranked_sources:
        assert registry.language(name).tier == "high"
    assert "AppleScript" not in dict(recommendation.ranked_sources)


def test_single_high_tier_candidate_is_chosen():
    registry = load_registry({"languages": {"Java": "high", "Kotlin": "low", "Swift": "low"}})
    values = np.array(
        [[1.0, 0.1, 0.2], [0.1, 1.0, 0.9], [0.2, 0.9, 1.0]]
    )
    matrix = SimilarityMatrix(languages=["Java", "Kotlin", "Swift"], values=values)
    recommendation = recommend_transfer_source("Kotlin", matrix, registry)
    assert recommendation.chosen == "Java"
    assert len(recommendation.ranked_sources) == 1


def test_no_high_resource_candidates():
    registry = load_registry({"languages": {"Kotlin": "low", "Swift": "low"}})
    values = np.array([[1.0, 0.5], [0.5, 1.0]])
    matrix = SimilarityMatrix(languages=["Kotlin", "Swift"], values=values)
    with pytest.raises(NoHighResourceLanguages):
        recommend_transfer_source("Kotlin", matrix, registry)


def test_transfer_unknown_target(registry):
    with pytest.raises(UnknownLanguage):
        recommend_transfer_source("COBOL", transfer_matrix(), registry)


def test_chosen_attains_max_similarity(registry):
    matrix = paper_means_matrix()
    recommendation = recommend_transfer_source("Kotlin", matrix, registry)
    best = max(sim for _, sim in recommendation.ranked_sources)
    assert recommendation.ranked_sources[0][1] == best


# --- curriculum ---------------------------------------------------------------


def test_near_to_far_matches_expected_sequence():
    plan = curriculum_order(
        "English", CURRICULUM_NEAR_TO_FAR, curriculum_matrix(), policy="near_to_far"
    )
    assert plan.order == CURRICULUM_NEAR_TO_FAR


def test_far_to_near_is_exact_reverse():
    matrix = curriculum_matrix()
    near = curriculum_order("English", CURRICULUM_NEAR_TO_FAR, matrix, policy="near_to_far")
    far = curriculum_order("English", CURRICULUM_NEAR_TO_FAR, matrix, policy="far_to_near")
    assert far.order == list(reversed(near.order))


def test_near_to_far_similarities_non_increasing():
    plan = curriculum_order(
        "English", CURRICULUM_NEAR_TO_FAR, curriculum_matrix(), policy="near_to_far"
    )
    sims = [stage.similarity_to_base for stage in plan.stages]
    assert all(a >= b for a, b in zip(sims, sims[1:]))


def test_random_policy_reproducible():
    matrix = curriculum_matrix()
    a = curriculum_order("English", CURRICULUM_NEAR_TO_FAR, matrix, policy="random", seed=42)
    b = curriculum_order("English", CURRICULUM_NEAR_TO_FAR, matrix, policy="random", seed=42)
    assert a.order == b.order
    c = curriculum_order("English", CURRICULUM_NEAR_TO_FAR, matrix, policy="random", seed=43)
    assert sorted(c.order) == sorted(a.order)


def test_random_policy_requires_seed():
    with pytest.raises(MissingSeed):
        curriculum_order("English", CURRICULUM_NEAR_TO_FAR, curriculum_matrix(), policy="random")


def test_order_is_permutation_of_request():
    subset = ["Go", "Rust", "Java"]
    plan = curriculum_order("English", subset, curriculum_matrix(), policy="far_to_near")
    assert sorted(plan.order) == sorted(subset)


def test_curriculum_unknown_language():
    with pytest.raises(UnknownLanguage):
        curriculum_order("English", ["Zig"], curriculum_matrix())
    with pytest.raises(UnknownLanguage):
        curriculum_order("Esperanto", ["Go"], curriculum_matrix())


def test_dash_policy_accepted():
    plan = curriculum_order(
        "English", CURRICULUM_NEAR_TO_FAR, curriculum_matrix(), policy="near-to-far"
    )
    assert plan.policy == "near_to_far"


# --- pivots ---------------------------------------------------------------------


def test_centrality_ranks_go_first(registry):
    matrix = paper_means_matrix()
    ranking = rank_pivots("Python", ["Kotlin", "Haskell"], matrix, registry)
    assert ranking.ranked_pivots[0][0] == "Go"


def test_centrality_head_matches_centroid_language(registry):
    matrix = paper_means_matrix()
    stats = similarity_stats(matrix, registry)
    ranking = rank_pivots(
        "Python", [], matrix, registry, scoring="centrality",
        include_source=True, include_targets=True,
    )
    assert ranking.ranked_pivots[0][0] == stats.centroid_language
    scores = dict(ranking.ranked_pivots)
    for name, mean in stats.mean_similarity.items():
        assert scores[name] == pytest.approx(mean, abs=1e-12)


def test_single_candidate_any_scoring():
    registry = load_registry({"languages": {"Go": "high", "Python": "high", "Ruby": "high"}})
    values = np.array([[1.0, 0.5, 0.4], [0.5, 1.0, 0.6], [0.4, 0.6, 1.0]])
    matrix = SimilarityMatrix(languages=["Go", "Python", "Ruby"], values=values)
    for scoring in ("centrality", "target_mean", "betweenness"):
        ranking = rank_pivots("Python", ["Ruby"], matrix, registry, scoring=scoring)
        assert [name for name, _ in ranking.ranked_pivots] == ["Go"]


def test_target_mean_on_source_equals_direct_similarity(registry):
    matrix = paper_means_matrix()
    ranking = rank_pivots(
        "Python", ["Python"], matrix, registry, scoring="target_mean", include_targets=False
    )
    # targets == {source}: each pivot's score is just sim(pivot, source)
    for name, score in ranking.ranked_pivots:
        assert score == pytest.approx(matrix.value(name, "Python"), abs=1e-12)


def test_betweenness_scoring(registry):
    matrix = paper_means_matrix()
    ranking = rank_pivots("Python", ["Haskell"], matrix, registry, scoring="betweenness")
    scores = dict(ranking.ranked_pivots)
    for name in scores:
        expected = min(matrix.value(name, "Python"), matrix.value(name, "Haskell"))
        assert scores[name] == pytest.approx(expected, abs=1e-12)


def test_source_and_targets_excluded_by_default(registry):
    matrix = paper_means_matrix()
    ranking = rank_pivots("Python", ["Kotlin"], matrix, registry)
    names = [name for name, _ in ranking.ranked_pivots]
    assert "Python" not in names and "Kotlin" not in names and "English" not in names


def test_empty_candidates():
    registry = load_registry({"languages": {"Go": "high", "Python": "high"}})
    values = np.array([[1.0, 0.5], [0.5, 1.0]])
    matrix = SimilarityMatrix(languages=["Go", "Python"], values=values)
    with pytest.raises(EmptyCandidates):
        rank_pivots("Python", ["Go"], matrix, registry)


def test_unknown_scoring_rejected(registry):
    with pytest.raises(ValidationError):
        rank_pivots("Python", [], paper_means_matrix(), registry, scoring="magic")
