"""Normalized cosine similarity, the pairwise language matrix, and centrality stats."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedding import LanguageEmbedding
from .errors import (
    DimensionMismatch,
    EmptyInput,
    ReferenceLanguageMissing,
    UnknownLanguage,
    ValidationError,
    ZeroVector,
)
from .taxonomy import LanguageRegistry

_DRIFT = 1e-12


def normalized_cosine(a, b) -> float:
    """Similarity in [0, 1]: one half plus half the cosine of the two vectors.

    Clamping guards only against floating-point drift; zero-norm inputs are an
    upstream fault and raise instead of defaulting to 0.5.
    """
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"vector dims differ: {va.shape} vs {vb.shape}")
    norm_a = math.sqrt(float(np.dot(va, va)))
    norm_b = math.sqrt(float(np.dot(vb, vb)))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cannot compute cosine of a zero vector")
    value = 0.5 + 0.5 * (float(np.dot(va, vb)) / (norm_a * norm_b))
    if value < 0.0:
        value = 0.0 if value > -_DRIFT else value
    if value > 1.0:
        value = 1.0 if value < 1.0 + _DRIFT else value
    return value


@dataclass
class SimilarityMatrix:
    """Symmetric matrix of normalized-cosine similarities in registry order."""

    languages: list[str]
    values: np.ndarray
    provider: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n = len(self.languages)
        if self.values.shape != (n, n):
            raise ValidationError(
                f"matrix shape {self.values.shape} does not match {n} languages"
            )
        self._index = {name: i for i, name in enumerate(self.languages)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownLanguage(f"language {name!r} is not in the matrix") from None

    def value(self, a: str, b: str) -> float:
        return float(self.values[self.index(a), self.index(b)])

    def subset(self, names: Sequence[str]) -> "SimilarityMatrix":
        idx = [self.index(name) for name in names]
        return SimilarityMatrix(
            languages=list(names),
            values=self.values[np.ix_(idx, idx)].copy(),
            provider=self.provider,
        )

    # -- serialization --------------------------------------------------

    def to_csv(self, path: str | Path, manifest_digest: str | None = None):
        lines = []
        if manifest_digest:
            lines.append(f"# manifest: {manifest_digest}")
        if self.provider:
            lines.append(f"# provider: {self.provider}")
        lines.append("language," + ",".join(self.languages))
        for i, name in enumerate(self.languages):
            lines.append(name + "," + ",".join(repr(float(v)) for v in self.values[i]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path: str | Path) -> "SimilarityMatrix":
        provider = ""
        rows: list[list[float]] = []
        names: list[str] = []
        header: list[str] | None = None
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# provider:"):
                    provider = line.split(":", 1)[1].strip()
                continue
            cells = line.split(",")
            if header is None:
                header = cells[1:]
                continue
            names.append(cells[0])
            rows.append([float(v) for v in cells[1:]])
        if header is None or not rows:
            raise ValidationError(f"{path} does not contain a similarity matrix")
        if names != header:
            raise ValidationError(f"{path}: row and column language orders differ")
        return cls(languages=names, values=np.asarray(rows), provider=provider)

    def to_json_dict(self, manifest_digest: str | None = None) -> dict:
        payload = {
            "languages": list(self.languages),
            "values": self.values.tolist(),
            "provider": self.provider,
        }
        if manifest_digest:
            payload["manifest_digest"] = manifest_digest
        return payload


def build_similarity_matrix(
    embeddings: Sequence[LanguageEmbedding], provider: str = ""
) -> SimilarityMatrix:
    """Full pairwise matrix over aggregate vectors; computed once and mirrored."""
    if len(embeddings) < 2:
        raise EmptyInput("at least two language embeddings are required")
    n = len(embeddings)
    values = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        values[i, i] = 1.0
        for j in range(i + 1, n):
            s = normalized_cosine(embeddings[i].aggregate, embeddings[j].aggregate)
            values[i, j] = s
            values[j, i] = s
    return SimilarityMatrix(
        languages=[emb.language for emb in embeddings], values=values, provider=provider
    )


@dataclass
class SimilarityStats:
    """Mean-similarity profile: per-language means (reference excluded), the
    reference column, the centroid language, and per-tier pairwise spreads."""

    mean_similarity: dict[str, float]
    centroid_language: str
    reference_column: dict[str, float] | None
    reference_mean: float | None
    overall_mean: float
    overall_std: float
    tier_stats: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "mean_similarity": self.mean_similarity,
            "centroid_language": self.centroid_language,
            "reference_column": self.reference_column,
            "reference_mean": self.reference_mean,
            "overall_mean": self.overall_mean,
            "overall_std": self.overall_std,
            "tier_stats": {
                tier: {"mean": mu, "std": sigma} for tier, (mu, sigma) in self.tier_stats.items()
            },
        }


def _pair_values(matrix: SimilarityMatrix, names: Sequence[str]) -> list[float]:
    idx = [matrix.index(name) for name in names]
    return [float(matrix.values[i, j]) for pos, i in enumerate(idx) for j in idx[pos + 1 :]]


def similarity_stats(
    matrix: SimilarityMatrix,
    registry: LanguageRegistry,
    require_reference: bool = False,
) -> SimilarityStats:
    """Mean similarity per language (self and reference excluded), reference
    column, and the centroid language (ties broken by matrix order)."""
    for name in matrix.languages:
        registry.language(name)  # unknown rows fail fast

    reference = registry.reference
    reference_name = reference.name if reference is not None else None
    if reference_name is not None and reference_name not in matrix._index:
        reference_name = None
    if require_reference and reference_name is None:
        raise ReferenceLanguageMissing(
            "the registry defines no reference language present in the matrix"
        )

    non_reference = [name for name in matrix.languages if name != reference_name]
    if len(non_reference) < 2:
        raise EmptyInput("need at least two non-reference languages for statistics")

    mean_similarity: dict[str, float] = {}
    for name in non_reference:
        i = matrix.index(name)
        others = [matrix.values[i, matrix.index(o)] for o in non_reference if o != name]
        mean_similarity[name] = float(np.mean(others))

    centroid_language = non_reference[0]
    best = mean_similarity[centroid_language]
    for name in non_reference[1:]:
        if mean_similarity[name] > best + _DRIFT:
            centroid_language = name
            best = mean_similarity[name]

    reference_column = None
    reference_mean = None
    if reference_name is not None:
        r = matrix.index(reference_name)
        reference_column = {
            name: float(matrix.values[matrix.index(name), r]) for name in non_reference
        }
        reference_mean = float(np.mean(list(reference_column.values())))

    pair_pool = _pair_values(matrix, non_reference)
    tier_stats: dict[str, tuple[float, float]] = {}
    for tier in ("high", "low"):
        members = [
            name
            for name in non_reference
            if registry.language(name).tier == tier
        ]
        if len(members) >= 2:
            pool = _pair_values(matrix, members)
            tier_stats[tier] = (float(np.mean(pool)), float(np.std(pool)))

    return SimilarityStats(
        mean_similarity=mean_similarity,
        centroid_language=centroid_language,
        reference_column=reference_column,
        reference_mean=reference_mean,
        overall_mean=float(np.mean(pair_pool)),
        overall_std=float(np.std(pair_pool)),
        tier_stats=tier_stats,
    )


def save_matrix_json(
    matrix: SimilarityMatrix,
    path: str | Path,
    stats: SimilarityStats | None = None,
    manifest_digest: str | None = None,
):
    payload = matrix.to_json_dict(manifest_digest=manifest_digest)
    if stats is not None:
        payload["stats"] = stats.to_json_dict()
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
