"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from langfam.clustering import DissimilarityMatrix
from langfam.taxonomy import default_registry


@pytest.fixture(scope="session")
def registry():
    return default_registry()


# --- independent oracles ------------------------------------------------------
#
# These deliberately avoid the code paths they check: plain loops, math.fsum,
# from-scratch recomputation.


def naive_mean_vector(vectors):
    """Per-component summation mean, independent of numpy reductions."""
    dim = len(vectors[0])
    return [math.fsum(float(v[i]) for v in vectors) / len(vectors) for i in range(dim)]


def scalar_normalized_cosine(a, b):
    """Direct formula with plain Python floats."""
    dot = math.fsum(float(x) * float(y) for x, y in zip(a, b))
    norm_a = math.sqrt(math.fsum(float(x) * float(x) for x in a))
    norm_b = math.sqrt(math.fsum(float(y) * float(y) for y in b))
    return 0.5 + 0.5 * dot / (norm_a * norm_b)


def naive_ward_merges(values):
    """From-scratch Ward agglomeration oracle.

    At every step the within-cluster objective ESS(C) = sum of squared
    pairwise dissimilarities / |C| is recomputed from the original matrix for
    every candidate merge; the pair with the smallest increase wins, ties by
    smallest (left, right) node ids. Returns (left, right, height, size)
    tuples under the same node-id convention as the implementation.
    """
    n = len(values)
    d2 = [[float(values[i][j]) ** 2 for j in range(n)] for i in range(n)]

    def ess(members):
        total = math.fsum(
            d2[a][b] for idx, a in enumerate(members) for b in members[idx + 1 :]
        )
        return total / len(members)

    clusters = {i: [i] for i in range(n)}
    merges = []
    next_id = n
    while len(clusters) > 1:
        best = None
        ids = sorted(clusters)
        for pos, i in enumerate(ids):
            for j in ids[pos + 1 :]:
                cost = ess(clusters[i] + clusters[j]) - ess(clusters[i]) - ess(clusters[j])
                if best is None or cost < best[0] - 1e-12:
                    best = (cost, i, j)
        cost, i, j = best
        merged = sorted(clusters[i] + clusters[j])
        clusters[next_id] = merged
        del clusters[i], clusters[j]
        merges.append((i, j, math.sqrt(max(2.0 * cost, 0.0)), len(merged)))
        next_id += 1
    return merges


def naive_ward_objective(values, labels):
    """W for a partition, recomputed from the matrix with plain loops."""
    groups = {}
    for idx, label in enumerate(labels):
        groups.setdefault(label, []).append(idx)
    total = 0.0
    for members in groups.values():
        acc = math.fsum(
            float(values[a][b]) ** 2
            for pos, a in enumerate(members)
            for b in members[pos + 1 :]
        )
        total += acc / len(members)
    return total


# Mean-similarity targets used by the centrality fixtures: Go highest (0.39),
# Java second (0.38), Fortran 0.23, Haskell 0.17 lowest; the rest are filler
# values strictly between the named ones. The builder below constructs a
# symmetric matrix whose row means (self and reference excluded) equal these
# targets exactly.
PAPER_MEAN_TARGETS = {
    "C++": 0.37,
    "Java": 0.38,
    "JavaScript": 0.36,
    "Kotlin": 0.33,
    "Python": 0.30,
    "Rust": 0.34,
    "Haskell": 0.17,
    "C": 0.37,
    "Go": 0.39,
    "Swift": 0.32,
    "AppleScript": 0.25,
    "Fortran": 0.23,
    "Dart": 0.31,
    "Ruby": 0.29,
    "Raku": 0.26,
    "PHP": 0.30,
    "Visual Basic": 0.27,
    "Pascal": 0.24,
    "Scala": 0.28,
}

# Reference-language column: mean exactly 0.088 over the 19 languages, with
# Haskell/Fortran most distant (0.03) and Visual Basic/AppleScript closest.
PAPER_REFERENCE_COLUMN = {
    "Haskell": 0.03,
    "Fortran": 0.03,
    "Visual Basic": 0.22,
    "AppleScript": 0.18,
}


def paper_means_matrix():
    """20x20 similarity fixture encoding the documented mean targets.

    With row-sum targets m_i over n languages, entries S_ij = a_i + a_j with
    a_i = ((n-1) m_i - sum(m)/2) / (n-2) give mean_j(S_ij) = m_i exactly.
    """
    from langfam.similarity import SimilarityMatrix
    from langfam.taxonomy import default_registry

    registry = default_registry()
    names = registry.names()
    prog = [n for n in names if n != "English"]
    m = PAPER_MEAN_TARGETS
    n = len(prog)
    total = math.fsum(m.values())
    a = {name: ((n - 1) * m[name] - total / 2.0) / (n - 2) for name in prog}

    remaining = [name for name in prog if name not in PAPER_REFERENCE_COLUMN]
    fixed_sum = math.fsum(PAPER_REFERENCE_COLUMN.values())
    fill = (0.088 * n - fixed_sum) / len(remaining)
    column = dict(PAPER_REFERENCE_COLUMN)
    column.update({name: fill for name in remaining})

    size = len(names)
    values = np.ones((size, size))
    index = {name: i for i, name in enumerate(names)}
    for i, x in enumerate(prog):
        for y in prog[i + 1 :]:
            s = a[x] + a[y]
            values[index[x], index[y]] = s
            values[index[y], index[x]] = s
    for x in prog:
        values[index[x], index["English"]] = column[x]
        values[index["English"], index[x]] = column[x]
    return SimilarityMatrix(languages=names, values=values)


def random_dissimilarity(rng, n, dim=3):
    """Tie-free random instance: Euclidean distances of random points."""
    points = rng.normal(0.0, 1.0, size=(n, dim))
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist = float(np.linalg.norm(points[i] - points[j]))
            values[i, j] = dist
            values[j, i] = dist
    names = [f"L{i}" for i in range(n)]
    return DissimilarityMatrix(languages=names, values=values, source="euclidean_on_embeddings")
