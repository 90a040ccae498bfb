"""End-to-end orchestration: validate -> embed -> similarity -> cluster -> plans.

Artifacts are staged in a temp directory and promoted by rename on success, so
an interrupted run never leaves partially written final files.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .clustering import ClusterOptions, cluster_languages, normalize_dissimilarity_mode
from .corpus import (
    DEFAULT_DUPLICATE_THRESHOLD,
    ingest_corpus,
    validate_corpus,
)
from .embedding import (
    EmbeddingCache,
    build_language_embeddings,
    make_provider,
    save_language_embeddings,
)
from .errors import LangfamError, PipelineError, ValidationError
from .planner import curriculum_order, rank_pivots, recommend_transfer_source
from .report import emit_dendrogram, emit_heatmap, write_report
from .similarity import build_similarity_matrix, save_matrix_json, similarity_stats
from .taxonomy import LanguageRegistry, default_registry, load_registry


@dataclass
class RunConfig:
    corpus: str
    registry: str | None = None
    expected_per_cell: int | None = None
    duplicate_threshold: float = DEFAULT_DUPLICATE_THRESHOLD
    provider: dict = field(default_factory=lambda: {"type": "local", "dim": 64, "seed": 0})
    cache: str | None = None
    batch_size: int = 32
    aggregation: str = "mean"
    clustering: dict = field(default_factory=dict)
    plans: list[dict] = field(default_factory=list)
    outdir: str = "out"


def load_run_config(path: str | Path) -> RunConfig:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValidationError("run config must be a mapping")
    if "corpus" not in raw:
        raise ValidationError("run config must set 'corpus'")
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown run config keys: {sorted(unknown)}")
    return RunConfig(**raw)


@dataclass
class RunManifest:
    version: str
    registry_digest: str
    corpus_digest: str
    provider: str
    aggregation: str
    clustering: dict
    started_utc: str = ""
    finished_utc: str = ""
    matrix_digest: str = ""
    artifacts: dict = field(default_factory=dict)

    def run_digest(self) -> str:
        """Digest over the run inputs and options; timestamps and output
        digests are excluded so artifacts stay byte-identical across reruns."""
        core = {
            "version": self.version,
            "registry": self.registry_digest,
            "corpus": self.corpus_digest,
            "provider": self.provider,
            "aggregation": self.aggregation,
            "clustering": self.clustering,
        }
        blob = json.dumps(core, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "run_digest": self.run_digest(),
            "registry_digest": self.registry_digest,
            "corpus_digest": self.corpus_digest,
            "provider": self.provider,
            "aggregation": self.aggregation,
            "clustering": self.clustering,
            "matrix_digest": self.matrix_digest,
            "artifacts": self.artifacts,
            "started_utc": self.started_utc,
            "finished_utc": self.finished_utc,
        }


def _utc_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _stage(name):
    """Decorator-free helper: re-raise stage failures with the stage name."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, LangfamError):
                raise PipelineError(name, exc) from exc
            return False

    return _Ctx()


def _resolve_registry(config: RunConfig) -> LanguageRegistry:
    if config.registry:
        return load_registry(Path(config.registry))
    return default_registry()


def run_pipeline(config: RunConfig) -> RunManifest:
    """Execute the full pipeline per config; returns the manifest after all
    artifacts are promoted into the output directory."""
    registry = _resolve_registry(config)
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=outdir))

    try:
        with _stage("corpus"):
            corpus = ingest_corpus(config.corpus, registry)
            if config.expected_per_cell is not None:
                check = validate_corpus(
                    corpus,
                    registry,
                    config.expected_per_cell,
                    duplicate_threshold=config.duplicate_threshold,
                )
                if not check.ok:
                    detail = "; ".join(str(v) for v in check.violations[:10])
                    raise ValidationError(
                        f"corpus failed validation with {len(check.violations)} "
                        f"violations: {detail}"
                    )

        with _stage("embed"):
            provider = make_provider(config.provider)
            cache = (
                EmbeddingCache(config.cache, provider.identity, provider.dim)
                if config.cache
                else None
            )
            embeddings = build_language_embeddings(
                corpus,
                provider,
                registry,
                cache=cache,
                batch_size=config.batch_size,
                aggregation=config.aggregation,
            )

        with _stage("similarity"):
            matrix = build_similarity_matrix(embeddings, provider=provider.identity)
            stats = similarity_stats(matrix, registry)

        manifest = RunManifest(
            version=__version__,
            registry_digest=registry.digest(),
            corpus_digest=corpus.digest(),
            provider=provider.identity,
            aggregation=config.aggregation,
            clustering=dict(config.clustering),
            started_utc=_utc_now(),
        )
        digest = manifest.run_digest()

        with _stage("cluster"):
            # The reference language is excluded from clustering: families are
            # programming-language groupings; the reference column only feeds
            # stats and curricula.
            reference = registry.reference
            cluster_names = [
                name
                for name in matrix.languages
                if reference is None or name != reference.name
            ]
            cluster_matrix = matrix.subset(cluster_names)
            options = ClusterOptions(
                mode=normalize_dissimilarity_mode(
                    config.clustering.get("dissimilarity", "one_minus_similarity")
                ),
                k=config.clustering.get("k"),
                k_min=int(config.clustering.get("k_min", 2)),
                k_max=config.clustering.get("k_max"),
                embeddings=[e for e in embeddings if e.language in cluster_names],
            )
            result, dendrogram = cluster_languages(cluster_matrix, options)

        plans_payload: list[dict] = []
        with _stage("plan"):
            for request in config.plans:
                kind = str(request.get("type", ""))
                if kind == "transfer":
                    plan = recommend_transfer_source(request["target"], matrix, registry)
                    plans_payload.append({"type": "transfer", **plan.to_json_dict()})
                elif kind == "curriculum":
                    languages = request.get("languages") or [
                        name
                        for name in matrix.languages
                        if name != request["base"]
                        and (registry.reference is None or name != registry.reference.name)
                    ]
                    plan = curriculum_order(
                        request["base"],
                        languages,
                        matrix,
                        policy=request.get("policy", "near_to_far"),
                        seed=request.get("seed"),
                    )
                    plans_payload.append({"type": "curriculum", **plan.to_json_dict()})
                elif kind == "pivots":
                    plan = rank_pivots(
                        request["source"],
                        request.get("targets", []),
                        matrix,
                        registry,
                        scoring=request.get("scoring", "centrality"),
                    )
                    plans_payload.append({"type": "pivots", **plan.to_json_dict()})
                else:
                    raise ValidationError(f"unknown plan type {kind!r}")

        with _stage("report"):
            matrix.to_csv(staging / "matrix.csv", manifest_digest=digest)
            save_matrix_json(matrix, staging / "matrix.json", stats=stats, manifest_digest=digest)
            save_language_embeddings(
                staging / "embeddings.json", embeddings, provider.identity
            )
            reference_name = registry.reference.name if registry.reference else None
            emit_heatmap(
                matrix, staging / "heatmap.svg", reference=reference_name, manifest_digest=digest
            )
            emit_dendrogram(
                dendrogram, result.partition, staging / "dendrogram.svg", manifest_digest=digest
            )
            emit_dendrogram(
                dendrogram, result.partition, staging / "dendrogram.txt", manifest_digest=digest
            )
            emit_dendrogram(
                dendrogram, result.partition, staging / "dendrogram.dot", manifest_digest=digest
            )
            (staging / "partition.json").write_text(
                json.dumps(result.to_json_dict(manifest_digest=digest), indent=2) + "\n",
                encoding="utf-8",
            )
            if plans_payload:
                (staging / "plans.json").write_text(
                    json.dumps(
                        {"manifest_digest": digest, "plans": plans_payload}, indent=2
                    )
                    + "\n",
                    encoding="utf-8",
                )
            write_report(
                staging / "report.md",
                matrix,
                stats=stats,
                result=result,
                manifest_digest=digest,
            )

            manifest.matrix_digest = hashlib.sha256(
                (staging / "matrix.csv").read_bytes()
            ).hexdigest()
            manifest.finished_utc = _utc_now()
            manifest.artifacts = {
                entry.name: hashlib.sha256(entry.read_bytes()).hexdigest()
                for entry in sorted(staging.iterdir())
            }
            (staging / "manifest.json").write_text(
                json.dumps(manifest.to_json_dict(), indent=2) + "\n", encoding="utf-8"
            )

        # Promote: per-file atomic renames; nothing partial ever lands.
        for entry in sorted(staging.iterdir()):
            os.replace(entry, outdir / entry.name)
        return manifest
    finally:
        shutil.rmtree(staging, ignore_errors=True)
