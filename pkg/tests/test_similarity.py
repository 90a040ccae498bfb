import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from langfam.embedding import LanguageEmbedding
from langfam.errors import (
    DimensionMismatch,
    EmptyInput,
    ReferenceLanguageMissing,
    ZeroVector,
)
from langfam.similarity import (
    SimilarityMatrix,
    build_similarity_matrix,
    normalized_cosine,
    similarity_stats,
)
from langfam.taxonomy import default_registry, load_registry

from conftest import paper_means_matrix, scalar_normalized_cosine


def emb(name, vector):
    return LanguageEmbedding(language=name, feature_centroids={}, aggregate=np.array(vector, dtype=float))


# --- normalized cosine ----------------------------------------------------------


def test_identical_vectors_give_one():
    assert normalized_cosine([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0, abs=1e-12)


def test_antipodal_vectors_give_zero():
    assert normalized_cosine([1.0, -2.0], [-1.0, 2.0]) == pytest.approx(0.0, abs=1e-12)


def test_orthogonal_vectors_give_half():
    assert normalized_cosine([1.0, 0.0], [0.0, 5.0]) == pytest.approx(0.5, abs=1e-12)


def test_zero_vector_rejected():
    with pytest.raises(ZeroVector):
        normalized_cosine([0.0, 0.0], [1.0, 0.0])


def test_dim_mismatch_rejected():
    with pytest.raises(DimensionMismatch):
        normalized_cosine([1.0, 0.0], [1.0, 0.0, 0.0])


finite_vec = st.lists(
    st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_subnormal=False),
    min_size=4,
    max_size=4,
)


def _usable(vec):
    return float(np.linalg.norm(vec)) > 1e-6


@given(finite_vec, finite_vec)
def test_symmetry_property(a, b):
    if not (_usable(a) and _usable(b)):
        return
    assert normalized_cosine(a, b) == pytest.approx(normalized_cosine(b, a), abs=1e-12)


@given(finite_vec, finite_vec, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_scale_invariance_property(a, b, alpha, beta):
    if not (_usable(a) and _usable(b)):
        return
    va, vb = np.array(a), np.array(b)
    base = normalized_cosine(va, vb)
    assert normalized_cosine(alpha * va, beta * vb) == pytest.approx(base, abs=1e-9)


# --- matrix construction ----------------------------------------------------------


def test_identical_embeddings_all_ones():
    matrix = build_similarity_matrix([emb("A", [1, 2]), emb("B", [1, 2])])
    assert np.allclose(matrix.values, 1.0)


def test_orthogonal_embeddings_half_offdiagonal():
    matrix = build_similarity_matrix(
        [emb("A", [1, 0, 0]), emb("B", [0, 1, 0]), emb("C", [0, 0, 1])]
    )
    off = matrix.values[~np.eye(3, dtype=bool)]
    assert np.allclose(off, 0.5)
    assert np.allclose(np.diag(matrix.values), 1.0)


def test_matrix_matches_scalar_oracle():
    rng = np.random.default_rng(11)
    embeddings = [emb(f"L{i}", rng.normal(size=6)) for i in range(5)]
    matrix = build_similarity_matrix(embeddings)
    for i in range(5):
        for j in range(5):
            if i == j:
                continue
            expected = scalar_normalized_cosine(
                embeddings[i].aggregate, embeddings[j].aggregate
            )
            assert matrix.values[i, j] == pytest.approx(expected, abs=1e-12)


def test_matrix_exact_symmetry():
    rng = np.random.default_rng(5)
    embeddings = [emb(f"L{i}", rng.normal(size=4)) for i in range(6)]
    values = build_similarity_matrix(embeddings).values
    assert np.array_equal(values, values.T)


def test_matrix_permutation_equivariance():
    rng = np.random.default_rng(9)
    embeddings = [emb(f"L{i}", rng.normal(size=4)) for i in range(4)]
    forward = build_similarity_matrix(embeddings)
    backward = build_similarity_matrix(list(reversed(embeddings)))
    for a in forward.languages:
        for b in forward.languages:
            assert forward.value(a, b) == backward.value(a, b)


def test_matrix_needs_two_embeddings():
    with pytest.raises(EmptyInput):
        build_similarity_matrix([emb("A", [1.0])])


# --- stats ------------------------------------------------------------------------


def test_paper_means_fixture_recovers_targets(registry):
    matrix = paper_means_matrix()
    stats = similarity_stats(matrix, registry)
    assert stats.mean_similarity["Go"] == pytest.approx(0.39, abs=1e-9)
    assert stats.mean_similarity["Java"] == pytest.approx(0.38, abs=1e-9)
    assert stats.mean_similarity["Haskell"] == pytest.approx(0.17, abs=1e-9)
    assert stats.mean_similarity["Fortran"] == pytest.approx(0.23, abs=1e-9)
    assert stats.centroid_language == "Go"
    assert stats.reference_mean == pytest.approx(0.088, abs=1e-9)
    assert stats.reference_column["Visual Basic"] == pytest.approx(0.22, abs=1e-12)


def test_tie_breaks_by_matrix_order():
    registry = load_registry({"languages": {"A": "high", "B": "high", "C": "low"}})
    values = np.full((3, 3), 0.5)
    np.fill_diagonal(values, 1.0)
    matrix = SimilarityMatrix(languages=["A", "B", "C"], values=values)
    stats = similarity_stats(matrix, registry)
    assert all(v == pytest.approx(0.5) for v in stats.mean_similarity.values())
    assert stats.centroid_language == "A"


def test_mean_unaffected_by_reference_column_edits(registry):
    matrix = paper_means_matrix()
    stats_before = similarity_stats(matrix, registry)
    ref = matrix.index("English")
    edited = matrix.values.copy()
    edited[ref, :-1] = 0.9
    edited[:-1, ref] = 0.9
    stats_after = similarity_stats(
        SimilarityMatrix(matrix.languages, edited), registry
    )
    assert stats_after.mean_similarity == stats_before.mean_similarity


def test_reference_missing_raises_only_when_required():
    registry = load_registry({"languages": {"A": "high", "B": "low"}})
    values = np.array([[1.0, 0.6], [0.6, 1.0]])
    matrix = SimilarityMatrix(languages=["A", "B"], values=values)
    stats = similarity_stats(matrix, registry)
    assert stats.reference_column is None
    with pytest.raises(ReferenceLanguageMissing):
        similarity_stats(matrix, registry, require_reference=True)


# --- serialization ------------------------------------------------------------------


def test_csv_roundtrip_full_precision(tmp_path):
    rng = np.random.default_rng(2)
    embeddings = [emb(f"L{i}", rng.normal(size=5)) for i in range(4)]
    matrix = build_similarity_matrix(embeddings, provider="local-ngram:test")
    path = tmp_path / "matrix.csv"
    matrix.to_csv(path, manifest_digest="abc123")
    loaded = SimilarityMatrix.from_csv(path)
    assert loaded.languages == matrix.languages
    assert np.array_equal(loaded.values, matrix.values)
    assert loaded.provider == matrix.provider
    assert path.read_text().startswith("# manifest: abc123\n")


def test_csv_writes_are_deterministic(tmp_path):
    matrix = paper_means_matrix()
    matrix.to_csv(tmp_path / "a.csv")
    matrix.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
