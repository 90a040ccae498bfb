"""Feature-aligned corpus: prompt rendering, JSONL ingestion, validation, stats."""

from __future__ import annotations

import hashlib
import json
import statistics
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import MalformedRecord, UnknownFeature, UnknownLanguage, ValidationError
from .taxonomy import LanguageId, LanguageRegistry, LinguisticFeature, default_registry

DEFAULT_DUPLICATE_THRESHOLD = 0.05

_PROMPT_TEMPLATE = """\
Produce code exemplars for {feature_name} in {language_list}.
# {feature_name}: {feature_description}
# You must strictly adhere to the following rules:
1) Generate {count} code snippets for each language;
2) These {count} code snippets must not only conform to the feature specification but should also be maximally diversified;
3) Ensure semantic consistency across code snippets in different languages, meaning they should implement the same functionality."""

# Variant used for the natural-language reference: same pipeline, the
# instruction asks for plain-text task descriptions instead of code.
_REFERENCE_PROMPT_TEMPLATE = """\
Produce plain {language_list} task descriptions for {feature_name}.
# {feature_name}: {feature_description}
# You must strictly adhere to the following rules:
1) Generate {count} task descriptions for each language;
2) These {count} task descriptions must not only conform to the feature specification but should also be maximally diversified;
3) Ensure semantic consistency with code snippets implementing the same feature in programming languages, meaning they should describe the same functionality."""


def normalize_text(text: str) -> str:
    """NFC-normalize and strip line-ending / trailing-whitespace noise.

    Hashes must be stable across producers: CRLF vs LF and trailing spaces
    never change the hash, any other byte does.
    """
    text = unicodedata.normalize("NFC", text)
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    return "\n".join(line.rstrip() for line in lines).rstrip("\n")


def content_hash(text: str) -> str:
    return hashlib.sha256(normalize_text(text).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CodeSample:
    """One snippet, keyed by (language, feature, sample_index); text is normalized."""

    language: str
    feature: str
    text: str
    sample_index: int
    content_hash: str


@dataclass
class Corpus:
    """Immutable ingested corpus, indexed by (language, feature) cell."""

    samples: list[CodeSample]
    rejected: list[MalformedRecord | UnknownLanguage | UnknownFeature] = field(
        default_factory=list
    )

    def __post_init__(self):
        cells: dict[tuple[str, str], list[CodeSample]] = {}
        for sample in self.samples:
            cells.setdefault((sample.language, sample.feature), []).append(sample)
        self._cells = cells

    def __len__(self) -> int:
        return len(self.samples)

    def cell(self, language: str, feature: str) -> list[CodeSample]:
        return self._cells.get((language, feature), [])

    def cells(self) -> dict[tuple[str, str], list[CodeSample]]:
        return dict(self._cells)

    def languages(self) -> list[str]:
        seen: dict[str, None] = {}
        for sample in self.samples:
            seen.setdefault(sample.language, None)
        return list(seen)

    def digest(self) -> str:
        keys = sorted(
            (s.language, s.feature, s.sample_index, s.content_hash) for s in self.samples
        )
        blob = json.dumps(keys, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass
class CellViolation:
    language: str
    feature: str
    kind: str  # missing | short | overfull | duplicates
    expected: int
    actual: int
    duplicate_rate: float = 0.0

    def __str__(self) -> str:
        if self.kind == "duplicates":
            return (
                f"({self.language}, {self.feature}): duplicate rate "
                f"{self.duplicate_rate:.3f} exceeds threshold"
            )
        return (
            f"({self.language}, {self.feature}): {self.kind}, expected "
            f"{self.expected} samples, found {self.actual}"
        )


@dataclass
class CorpusManifest:
    cells: dict[tuple[str, str], int]
    total: int
    duplicate_rate: float
    cell_duplicate_rates: dict[tuple[str, str], float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "duplicate_rate": self.duplicate_rate,
            "cells": [
                {"language": lang, "feature": feat, "count": count}
                for (lang, feat), count in sorted(self.cells.items())
            ],
        }


@dataclass
class ValidationResult:
    manifest: CorpusManifest
    violations: list[CellViolation]

    @property
    def ok(self) -> bool:
        return not self.violations


def render_generation_prompt(
    feature: LinguisticFeature,
    languages: list[LanguageId | str],
    samples_per_language: int,
    natural_language: bool = False,
) -> str:
    """Render the corpus-generation prompt for one feature.

    ``natural_language`` switches to the reference-language variant that asks
    for plain task descriptions instead of code.
    """
    if samples_per_language < 1:
        raise ValidationError("samples_per_language must be >= 1")
    names = [lang.name if isinstance(lang, LanguageId) else str(lang) for lang in languages]
    if not names:
        raise ValidationError("at least one language is required")
    template = _REFERENCE_PROMPT_TEMPLATE if natural_language else _PROMPT_TEMPLATE
    return template.format(
        feature_name=feature.name,
        feature_description=feature.description,
        language_list=_join_names(names),
        count=samples_per_language,
    )


def _join_names(names: list[str]) -> str:
    if len(names) == 1:
        return names[0]
    if len(names) == 2:
        return f"{names[0]} and {names[1]}"
    return ", ".join(names[:-1]) + f", and {names[-1]}"


def _iter_records(source) -> Iterator[tuple[int, object]]:
    """Yield (line_number, parsed_or_raw) pairs from any supported source."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        with path.open("r", encoding="utf-8") as handle:
            yield from enumerate(handle, start=1)
        return
    for lineno, item in enumerate(source, start=1):
        yield lineno, item


def ingest_corpus(
    source,
    registry: LanguageRegistry | None = None,
    *,
    on_error: str = "raise",
) -> Corpus:
    """Parse, normalize, hash, and index samples from a JSONL record stream.

    ``source`` may be a path, an iterable of JSON lines, or an iterable of
    dicts with ``language``, ``feature`` and ``text`` fields. With
    ``on_error="collect"`` bad records are kept on ``Corpus.rejected`` with
    their line positions instead of aborting the ingest.
    """
    if registry is None:
        registry = default_registry()
    if on_error not in ("raise", "collect"):
        raise ValueError("on_error must be 'raise' or 'collect'")

    samples: list[CodeSample] = []
    rejected: list = []
    cell_counters: dict[tuple[str, str], int] = {}

    def reject(error):
        if on_error == "raise":
            raise error
        rejected.append(error)

    for lineno, item in _iter_records(source):
        if isinstance(item, (str, bytes)):
            line = item.decode("utf-8") if isinstance(item, bytes) else item
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                reject(MalformedRecord(lineno, f"invalid JSON ({exc.msg})"))
                continue
        else:
            record = item
        if not isinstance(record, dict):
            reject(MalformedRecord(lineno, "record is not an object"))
            continue

        missing = [key for key in ("language", "feature", "text") if key not in record]
        if missing:
            reject(MalformedRecord(lineno, f"missing fields: {', '.join(missing)}"))
            continue

        language_name = str(record["language"])
        feature_id = str(record["feature"])
        text = normalize_text(str(record["text"]))
        if not text.strip():
            reject(MalformedRecord(lineno, "empty text after normalization"))
            continue
        try:
            language = registry.language(language_name)
        except UnknownLanguage:
            reject(UnknownLanguage(f"line {lineno}: unknown language {language_name!r}"))
            continue
        try:
            registry.feature(feature_id)
        except UnknownFeature:
            reject(UnknownFeature(f"line {lineno}: unknown feature {feature_id!r}"))
            continue

        cell = (language.name, feature_id)
        index = cell_counters.get(cell, 0)
        cell_counters[cell] = index + 1
        samples.append(
            CodeSample(
                language=language.name,
                feature=feature_id,
                text=text,
                sample_index=index,
                content_hash=hashlib.sha256(text.encode("utf-8")).hexdigest(),
            )
        )

    return Corpus(samples=samples, rejected=rejected)


def _cell_duplicate_rate(samples: list[CodeSample]) -> float:
    if not samples:
        return 0.0
    counts: dict[str, int] = {}
    for sample in samples:
        counts[sample.content_hash] = counts.get(sample.content_hash, 0) + 1
    duplicated = sum(count for count in counts.values() if count > 1)
    return duplicated / len(samples)


def build_manifest(corpus: Corpus) -> CorpusManifest:
    cells = {key: len(samples) for key, samples in corpus.cells().items()}
    rates = {key: _cell_duplicate_rate(samples) for key, samples in corpus.cells().items()}
    total = sum(cells.values())
    duplicated = sum(rates[key] * cells[key] for key in cells)
    return CorpusManifest(
        cells=cells,
        total=total,
        duplicate_rate=(duplicated / total) if total else 0.0,
        cell_duplicate_rates=rates,
    )


def validate_corpus(
    corpus: Corpus,
    registry: LanguageRegistry,
    expected_per_cell: int,
    duplicate_threshold: float = DEFAULT_DUPLICATE_THRESHOLD,
) -> ValidationResult:
    """Check that every (language, feature) cell holds exactly the expected count.

    Shortfalls, overfills and duplicate-rate breaches are returned as
    violations, never raised; re-validating a corpus is idempotent.
    """
    manifest = build_manifest(corpus)
    violations: list[CellViolation] = []
    for language in registry.languages:
        for feature in registry.features:
            key = (language.name, feature.id)
            actual = manifest.cells.get(key, 0)
            if actual != expected_per_cell:
                kind = "missing" if actual == 0 else ("short" if actual < expected_per_cell else "overfull")
                violations.append(
                    CellViolation(language.name, feature.id, kind, expected_per_cell, actual)
                )
            rate = manifest.cell_duplicate_rates.get(key, 0.0)
            if rate > duplicate_threshold:
                violations.append(
                    CellViolation(
                        language.name,
                        feature.id,
                        "duplicates",
                        expected_per_cell,
                        actual,
                        duplicate_rate=rate,
                    )
                )
    return ValidationResult(manifest=manifest, violations=violations)


@dataclass
class CorpusStats:
    total: int
    per_language: dict[str, int]
    per_feature: dict[str, int]
    length_min: int
    length_max: int
    length_mean: float
    length_median: float
    duplicate_rate: float
    cell_duplicate_rates: dict[tuple[str, str], float]

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "per_language": self.per_language,
            "per_feature": self.per_feature,
            "length": {
                "min": self.length_min,
                "max": self.length_max,
                "mean": self.length_mean,
                "median": self.length_median,
            },
            "duplicate_rate": self.duplicate_rate,
            "duplicated_cells": [
                {"language": lang, "feature": feat, "rate": rate}
                for (lang, feat), rate in sorted(self.cell_duplicate_rates.items())
                if rate > 0.0
            ],
        }


def corpus_stats(corpus: Corpus) -> CorpusStats:
    manifest = build_manifest(corpus)
    per_language: dict[str, int] = {}
    per_feature: dict[str, int] = {}
    lengths: list[int] = []
    for sample in corpus.samples:
        per_language[sample.language] = per_language.get(sample.language, 0) + 1
        per_feature[sample.feature] = per_feature.get(sample.feature, 0) + 1
        lengths.append(len(sample.text))
    return CorpusStats(
        total=len(corpus.samples),
        per_language=per_language,
        per_feature=per_feature,
        length_min=min(lengths) if lengths else 0,
        length_max=max(lengths) if lengths else 0,
        length_mean=(sum(lengths) / len(lengths)) if lengths else 0.0,
        length_median=float(statistics.median(lengths)) if lengths else 0.0,
        duplicate_rate=manifest.duplicate_rate,
        cell_duplicate_rates=manifest.cell_duplicate_rates,
    )


def write_corpus(path: str | Path, records: Iterable[dict]) -> int:
    """Write records as JSONL; returns the number written."""
    count = 0
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count
