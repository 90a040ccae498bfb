"""Family-aware training plans: transfer sources, curricula, pivot rankings.

All planners are pure functions of (matrix, registry, parameters); ties are
always broken by registry order so plans are reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .errors import (
    EmptyCandidates,
    MissingSeed,
    NoHighResourceLanguages,
    UnknownLanguage,
    ValidationError,
)
from .similarity import SimilarityMatrix
from .taxonomy import HIGH, LanguageRegistry

CURRICULUM_POLICIES = ("near_to_far", "far_to_near", "random")
PIVOT_SCORINGS = ("centrality", "target_mean", "betweenness")


@dataclass
class TransferRecommendation:
    target: str
    ranked_sources: list[tuple[str, float]]

    @property
    def chosen(self) -> str:
        return self.ranked_sources[0][0]

    def to_json_dict(self) -> dict:
        return {
            "target": self.target,
            "chosen": self.chosen,
            "ranked_sources": [
                {"language": lang, "similarity": sim} for lang, sim in self.ranked_sources
            ],
        }


@dataclass
class CurriculumStage:
    language: str
    similarity_to_base: float
    notes: str = ""  # reserved for the training harness (e.g. optimizer resets)


@dataclass
class CurriculumPlan:
    base: str
    policy: str
    stages: list[CurriculumStage]
    seed: int | None = None

    @property
    def order(self) -> list[str]:
        return [stage.language for stage in self.stages]

    def to_json_dict(self) -> dict:
        return {
            "base": self.base,
            "policy": self.policy,
            "seed": self.seed,
            "stages": [
                {
                    "language": stage.language,
                    "similarity_to_base": stage.similarity_to_base,
                    "notes": stage.notes,
                }
                for stage in self.stages
            ],
        }


@dataclass
class PivotRanking:
    source: str
    targets: list[str]
    scoring: str
    ranked_pivots: list[tuple[str, float]] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "source": self.source,
            "targets": self.targets,
            "scoring": self.scoring,
            "ranked_pivots": [
                {"language": lang, "score": score} for lang, score in self.ranked_pivots
            ],
        }


def _registry_rank(matrix: SimilarityMatrix) -> dict[str, int]:
    return {name: i for i, name in enumerate(matrix.languages)}


def _rank_descending(
    scores: dict[str, float], order: dict[str, int]
) -> list[tuple[str, float]]:
    return sorted(scores.items(), key=lambda item: (-item[1], order[item[0]]))


def recommend_transfer_source(
    target: str, matrix: SimilarityMatrix, registry: LanguageRegistry
) -> TransferRecommendation:
    """Rank high-resource languages by similarity to the target; the head is
    the recommended fine-tuning source."""
    target_lang = registry.language(target)
    matrix.index(target_lang.name)
    candidates = [
        lang.name
        for lang in registry.languages
        if lang.tier == HIGH and lang.name != target_lang.name and lang.name in matrix._index
    ]
    if not candidates:
        raise NoHighResourceLanguages(
            f"no high-resource languages available as sources for {target!r}"
        )
    scores = {name: matrix.value(name, target_lang.name) for name in candidates}
    ranked = _rank_descending(scores, _registry_rank(matrix))
    return TransferRecommendation(target=target_lang.name, ranked_sources=ranked)


def curriculum_order(
    base: str,
    languages: Sequence[str],
    matrix: SimilarityMatrix,
    policy: str = "near_to_far",
    seed: int | None = None,
) -> CurriculumPlan:
    """Order languages for staged fine-tuning relative to a base language.

    ``near_to_far`` sorts by similarity to the base descending (easy first),
    ``far_to_near`` ascending, ``random`` is a seeded shuffle.
    """
    policy = policy.replace("-", "_")
    if policy not in CURRICULUM_POLICIES:
        raise ValidationError(f"unknown curriculum policy {policy!r}")
    base_index = matrix.index(base)
    names = list(languages)
    if not names:
        raise ValidationError("curriculum needs at least one language")
    for name in names:
        matrix.index(name)
    order = _registry_rank(matrix)
    similarity = {name: float(matrix.values[matrix.index(name), base_index]) for name in names}

    if policy == "random":
        if seed is None:
            raise MissingSeed("random curriculum policy requires a seed")
        shuffled = sorted(names, key=lambda name: order[name])
        random.Random(seed).shuffle(shuffled)
        ordered = shuffled
    elif policy == "near_to_far":
        ordered = [name for name, _ in _rank_descending(similarity, order)]
    else:  # far_to_near: exact reverse of near_to_far under distinct similarities
        ordered = sorted(
            names, key=lambda name: (similarity[name], order[name])
        )

    stages = [CurriculumStage(language=name, similarity_to_base=similarity[name]) for name in ordered]
    return CurriculumPlan(base=base, policy=policy, stages=stages, seed=seed)


def rank_pivots(
    source: str,
    targets: Sequence[str],
    matrix: SimilarityMatrix,
    registry: LanguageRegistry,
    scoring: str = "centrality",
    include_source: bool = False,
    include_targets: bool = False,
) -> PivotRanking:
    """Rank candidate intermediary languages for source -> pivot -> target
    translation.

    ``centrality`` scores each pivot by its mean similarity to all other
    non-reference languages; ``target_mean`` by its mean similarity to the
    target set; ``betweenness`` by min(sim(pivot, source), mean sim(pivot,
    targets)), rewarding pivots that sit between the endpoints. The reference
    language is never a candidate; source and targets are excluded unless
    requested.
    """
    scoring = scoring.replace("-", "_")
    if scoring not in PIVOT_SCORINGS:
        raise ValidationError(f"unknown pivot scoring {scoring!r}")
    source_name = registry.language(source).name
    matrix.index(source_name)
    target_names = []
    for target in targets:
        name = registry.language(target).name
        matrix.index(name)
        target_names.append(name)
    if scoring in ("target_mean", "betweenness") and not target_names:
        raise ValidationError(f"scoring {scoring!r} requires a non-empty target set")

    reference = registry.reference
    reference_name = reference.name if reference is not None else None
    excluded = set()
    if not include_source:
        excluded.add(source_name)
    if not include_targets:
        excluded.update(target_names)

    candidates = [
        name
        for name in matrix.languages
        if name != reference_name and name not in excluded
    ]
    if not candidates:
        raise EmptyCandidates("no pivot candidates remain after exclusions")

    non_reference = [name for name in matrix.languages if name != reference_name]
    scores: dict[str, float] = {}
    for name in candidates:
        if scoring == "centrality":
            others = [matrix.value(name, other) for other in non_reference if other != name]
            if not others:
                raise EmptyCandidates("centrality scoring needs at least two languages")
            scores[name] = sum(others) / len(others)
        elif scoring == "target_mean":
            scores[name] = sum(matrix.value(name, t) for t in target_names) / len(target_names)
        else:
            target_mean = sum(matrix.value(name, t) for t in target_names) / len(target_names)
            scores[name] = min(matrix.value(name, source_name), target_mean)

    ranked = _rank_descending(scores, _registry_rank(matrix))
    return PivotRanking(
        source=source_name, targets=target_names, scoring=scoring, ranked_pivots=ranked
    )
