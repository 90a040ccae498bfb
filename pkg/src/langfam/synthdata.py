"""Synthetic fixtures with planted family structure.

Used by the test suite and handy for demos. Family centers are mutually
orthogonal unit axes; members are rotated away from their center by a bounded
angle, so in the normalized-cosine dissimilarity the families are tight blobs
(intra spread is O(angle^2)) sitting pairwise equidistant near 0.5. With the
default angle the smallest inter-family dissimilarity exceeds the largest
intra-family one by two orders of magnitude, far above the 5x separation the
recovery tests require.
"""

from __future__ import annotations

import random

import numpy as np

from .embedding import LanguageEmbedding
from .errors import ValidationError

# Six planted families over the 19 studied programming languages; mirrors the
# family layout the pipeline is expected to recover on clean geometry.
PLANTED_FAMILIES: tuple[tuple[str, ...], ...] = (
    ("C", "C++", "Java", "Swift"),
    ("Rust", "JavaScript", "Dart", "Go", "Kotlin", "PHP"),
    ("Visual Basic", "Python", "AppleScript"),
    ("Ruby", "Raku"),
    ("Fortran", "Pascal"),
    ("Haskell", "Scala"),
)


def planted_partition(layout: tuple[tuple[str, ...], ...] = PLANTED_FAMILIES) -> dict[str, int]:
    return {name: label for label, family in enumerate(layout) for name in family}


def planted_language_embeddings(
    layout: tuple[tuple[str, ...], ...] = PLANTED_FAMILIES,
    dim: int = 16,
    seed: int = 0,
    max_angle: float = 0.08,
) -> list[LanguageEmbedding]:
    """Aggregate-only language embeddings with planted families.

    Each member is a unit vector at most ``max_angle`` radians from its family
    axis. Keep ``max_angle`` below ~0.1: the elbow margin between "six
    families" and the super-cluster split is structural and modest, so wide
    angular jitter can tip the knee to a smaller k.
    """
    n_families = len(layout)
    if dim < n_families:
        raise ValidationError(f"dim must be >= {n_families} to place the family centers")
    if not 0.0 < max_angle < 0.5:
        raise ValidationError("max_angle must be in (0, 0.5) radians")
    rng = np.random.default_rng(seed)
    embeddings: list[LanguageEmbedding] = []
    for label, family in enumerate(layout):
        axis = np.zeros(dim)
        axis[label] = 1.0
        for name in family:
            direction = rng.normal(0.0, 1.0, size=dim)
            direction -= direction.dot(axis) * axis
            direction /= np.linalg.norm(direction)
            angle = rng.uniform(0.2, 1.0) * max_angle
            vector = np.cos(angle) * axis + np.sin(angle) * direction
            embeddings.append(
                LanguageEmbedding(language=name, feature_centroids={}, aggregate=vector)
            )
    return embeddings


def separation_ratio(
    embeddings: list[LanguageEmbedding], partition: dict[str, int]
) -> float:
    """Smallest inter-family over largest intra-family dissimilarity (1 - s),
    i.e. the margin the clustering actually sees."""
    from .clustering import to_dissimilarity
    from .similarity import build_similarity_matrix

    d = to_dissimilarity(build_similarity_matrix(embeddings))
    intra, inter = [], []
    for i, a in enumerate(d.languages):
        for j in range(i + 1, len(d.languages)):
            b = d.languages[j]
            (intra if partition[a] == partition[b] else inter).append(float(d.values[i, j]))
    if not intra or not inter:
        raise ValidationError("need at least one intra and one inter pair")
    return min(inter) / max(intra)


def planted_corpus_records(
    layout: tuple[tuple[str, ...], ...] = PLANTED_FAMILIES,
    feature_ids: tuple[str, ...] = tuple(f"F{i}" for i in range(1, 22)),
    samples_per_cell: int = 3,
    seed: int = 0,
) -> list[dict]:
    """JSONL-ready corpus records whose trigram statistics carry the planted
    family signal: languages in one family draw from a shared token pool,
    different families from disjoint pools, so the local embedder separates
    the families.
    """
    rng = random.Random(seed)
    records: list[dict] = []
    family_pool = {
        label: [f"fam{label}w{i:02d}" for i in range(64)] for label in range(len(layout))
    }
    for label, family in enumerate(layout):
        for name in family:
            slug = "".join(ch for ch in name.lower() if ch.isalnum())
            for feature in feature_ids:
                for index in range(samples_per_cell):
                    shared = rng.choices(family_pool[label], k=24)
                    own = [f"{slug}q{i}" for i in rng.sample(range(12), k=2)]
                    tokens = shared + own + [f"{slug}{feature.lower()}n{index}"]
                    records.append(
                        {
                            "language": name,
                            "feature": feature,
                            "text": " ".join(tokens),
                            "meta": {"planted_family": label},
                        }
                    )
    return records
