"""Catalog of the 21 linguistic features and the registry of studied languages."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import yaml

from .errors import (
    DuplicateLanguage,
    MultipleReferenceLanguages,
    UnknownFeature,
    UnknownFeatureId,
    UnknownLanguage,
    ValidationError,
)

HIGH = "high"
LOW = "low"
REFERENCE = "reference"
TIERS = (HIGH, LOW, REFERENCE)


@dataclass(frozen=True)
class LinguisticFeature:
    """One entry of the fixed feature catalog (F1..F21)."""

    id: str
    name: str
    description: str
    group: str


# Ranged catalog entries (loops, operations, data structures, OOP, functional)
# are expanded into one feature per sub-construct so that corpus cells can be
# counted per individual feature.
FEATURES: tuple[LinguisticFeature, ...] = (
    LinguisticFeature(
        "F1",
        "Variable Definition",
        "How the language declares and initializes variables of various types, "
        "including whether typing is static or dynamic.",
        "typing",
    ),
    LinguisticFeature(
        "F2",
        "Conditional Branching",
        "How the language expresses conditions and branches in program control flow.",
        "control-flow",
    ),
    LinguisticFeature(
        "F3",
        "Loop: For",
        "How the language expresses counted iteration with a for-style loop.",
        "control-flow",
    ),
    LinguisticFeature(
        "F4",
        "Loop: While",
        "How the language expresses condition-driven iteration with a while-style loop.",
        "control-flow",
    ),
    LinguisticFeature(
        "F5",
        "System I/O",
        "How the language reads user input from standard input and prints text "
        "to standard output.",
        "io",
    ),
    LinguisticFeature(
        "F6",
        "Operations: Arithmetic",
        "How the language writes arithmetic operations, covering operator syntax "
        "and precedence.",
        "operations",
    ),
    LinguisticFeature(
        "F7",
        "Operations: Logical",
        "How the language writes logical operations, covering operator syntax and "
        "conditional (short-circuit) evaluation.",
        "operations",
    ),
    LinguisticFeature(
        "F8",
        "Operations: Comparison",
        "How the language writes comparison operations between values.",
        "operations",
    ),
    LinguisticFeature(
        "F9",
        "Library Integration",
        "How the language imports and utilizes standard and third-party libraries.",
        "libraries",
    ),
    LinguisticFeature(
        "F10",
        "Parameter Passing",
        "How the language passes arguments in function calls, including "
        "pass-by-value, pass-by-reference, and other strategies.",
        "functions",
    ),
    LinguisticFeature(
        "F11",
        "Function Returns",
        "How the language defines and manages return values from functions, "
        "including multiple return values and return type declarations.",
        "functions",
    ),
    LinguisticFeature(
        "F12",
        "Exception Handling",
        "How the language manages runtime errors, including the syntax of "
        "exception-throwing and catching constructs.",
        "exceptions",
    ),
    LinguisticFeature(
        "F13",
        "Data Structures: Array",
        "How the language provides and typically uses array collections.",
        "data-structures",
    ),
    LinguisticFeature(
        "F14",
        "Data Structures: List",
        "How the language provides and typically uses growable list collections.",
        "data-structures",
    ),
    LinguisticFeature(
        "F15",
        "Data Structures: Set",
        "How the language provides and typically uses set collections of unique "
        "members.",
        "data-structures",
    ),
    LinguisticFeature(
        "F16",
        "Data Structures: Map",
        "How the language provides and typically uses key-value map collections.",
        "data-structures",
    ),
    LinguisticFeature(
        "F17",
        "OOP: Class Definition",
        "How the language defines classes, including fields, methods, and "
        "encapsulation.",
        "oop",
    ),
    LinguisticFeature(
        "F18",
        "OOP: Object Creation",
        "How the language instantiates objects from classes.",
        "oop",
    ),
    LinguisticFeature(
        "F19",
        "OOP: Inheritance",
        "How the language expresses inheritance and polymorphism between classes.",
        "oop",
    ),
    LinguisticFeature(
        "F20",
        "Functional Programming: Map",
        "How the language applies a function across a collection with a map-style "
        "higher-order function over immutable data.",
        "functional",
    ),
    LinguisticFeature(
        "F21",
        "Functional Programming: Filter",
        "How the language selects collection elements with a filter-style "
        "higher-order function over immutable data.",
        "functional",
    ),
)

# Canonical study set: 19 programming languages plus the natural-language
# reference. Order is stable and fixes matrix row/column order.
STUDIED_LANGUAGES: tuple[tuple[str, str], ...] = (
    ("C++", HIGH),
    ("Java", HIGH),
    ("JavaScript", HIGH),
    ("Kotlin", LOW),
    ("Python", HIGH),
    ("Rust", HIGH),
    ("Haskell", LOW),
    ("C", HIGH),
    ("Go", HIGH),
    ("Swift", LOW),
    ("AppleScript", LOW),
    ("Fortran", LOW),
    ("Dart", LOW),
    ("Ruby", HIGH),
    ("Raku", LOW),
    ("PHP", HIGH),
    ("Visual Basic", LOW),
    ("Pascal", LOW),
    ("Scala", LOW),
    ("English", REFERENCE),
)


@dataclass(frozen=True)
class LanguageId:
    """A studied language with its resource tier."""

    name: str
    tier: str = LOW

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ValidationError(f"unknown resource tier {self.tier!r} for {self.name!r}")

    @property
    def is_reference(self) -> bool:
        return self.tier == REFERENCE


@dataclass(frozen=True)
class LanguageRegistry:
    """Ordered language set plus the feature catalog; immutable once built."""

    languages: tuple[LanguageId, ...]
    features: tuple[LinguisticFeature, ...] = FEATURES
    _by_name: dict = field(init=False, repr=False, compare=False, default_factory=dict)
    _features_by_id: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        seen: dict[str, LanguageId] = {}
        references = []
        for lang in self.languages:
            key = lang.name.casefold()
            if key in seen:
                raise DuplicateLanguage(f"language {lang.name!r} listed more than once")
            seen[key] = lang
            if lang.is_reference:
                references.append(lang.name)
        if len(references) > 1:
            raise MultipleReferenceLanguages(
                f"at most one reference language allowed, got {references}"
            )
        object.__setattr__(self, "_by_name", seen)
        object.__setattr__(self, "_features_by_id", {f.id: f for f in self.features})

    # -- lookups --------------------------------------------------------

    def language(self, name: str) -> LanguageId:
        try:
            return self._by_name[name.casefold()]
        except KeyError:
            raise UnknownLanguage(f"language {name!r} is not in the registry") from None

    def __contains__(self, name: str) -> bool:
        return name.casefold() in self._by_name

    def feature(self, feature_id: str) -> LinguisticFeature:
        try:
            return self._features_by_id[feature_id]
        except KeyError:
            raise UnknownFeature(f"feature {feature_id!r} is not in the catalog") from None

    def names(self) -> list[str]:
        return [lang.name for lang in self.languages]

    def feature_ids(self) -> list[str]:
        return [f.id for f in self.features]

    @property
    def reference(self) -> LanguageId | None:
        for lang in self.languages:
            if lang.is_reference:
                return lang
        return None

    def programming_languages(self) -> list[LanguageId]:
        return [lang for lang in self.languages if not lang.is_reference]

    def high_resource(self) -> list[LanguageId]:
        return [lang for lang in self.languages if lang.tier == HIGH]

    def digest(self) -> str:
        payload = {
            "languages": [(lang.name, lang.tier) for lang in self.languages],
            "features": [(f.id, f.name) for f in self.features],
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def default_registry() -> LanguageRegistry:
    """The canonical registry: 19 programming languages + English, 21 features."""
    return LanguageRegistry(
        languages=tuple(LanguageId(name, tier) for name, tier in STUDIED_LANGUAGES)
    )


def _parse_language_entries(raw) -> Iterable[tuple[str, str]]:
    if isinstance(raw, dict):
        for name, tier in raw.items():
            yield str(name), str(tier)
        return
    if isinstance(raw, list):
        for entry in raw:
            if isinstance(entry, dict):
                if "name" not in entry:
                    raise ValidationError(f"language entry missing 'name': {entry!r}")
                yield str(entry["name"]), str(entry.get("tier", LOW))
            else:
                yield str(entry), LOW
        return
    raise ValidationError("'languages' must be a mapping or a list of entries")


def load_registry(document: str | Path | dict) -> LanguageRegistry:
    """Build a registry from a YAML/JSON document (text, path, or parsed mapping).

    Recognized keys: ``languages`` (mapping name->tier, or list of
    ``{name, tier}`` records), optional ``reference`` (language name), and
    optional ``features`` (subset of catalog ids).
    """
    if isinstance(document, Path):
        document = document.read_text(encoding="utf-8")
    if isinstance(document, str):
        try:
            parsed = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise ValidationError(f"registry config is not valid YAML/JSON: {exc}") from exc
    else:
        parsed = document
    if not isinstance(parsed, dict):
        raise ValidationError("registry config must be a mapping")
    if "languages" not in parsed:
        raise ValidationError("registry config must define 'languages'")

    reference_name = parsed.get("reference")
    entries = []
    for name, tier in _parse_language_entries(parsed["languages"]):
        if reference_name is not None and name.casefold() == str(reference_name).casefold():
            tier = REFERENCE
        if tier not in TIERS:
            raise ValidationError(f"unknown resource tier {tier!r} for language {name!r}")
        entries.append(LanguageId(name, tier))
    if reference_name is not None and not any(e.is_reference for e in entries):
        entries.append(LanguageId(str(reference_name), REFERENCE))

    features = FEATURES
    if "features" in parsed and parsed["features"] is not None:
        catalog = {f.id: f for f in FEATURES}
        selected = []
        for fid in parsed["features"]:
            if str(fid) not in catalog:
                raise UnknownFeatureId(f"feature id {fid!r} is not in the catalog")
            selected.append(catalog[str(fid)])
        features = tuple(selected)

    return LanguageRegistry(languages=tuple(entries), features=features)


def feature_sort_key(feature_id: str) -> tuple[int, str]:
    """Stable numeric ordering for ids like F1..F21; falls back to text."""
    if len(feature_id) > 1 and feature_id[0] in "Ff" and feature_id[1:].isdigit():
        return (int(feature_id[1:]), "")
    return (1 << 30, feature_id)
