"""Command-line entry point.

Exit codes: 0 success, 2 validation failure, 3 provider failure, 4 internal
invariant violation.

Environment: LANGFAM_API_KEY (remote provider credential), LANGFAM_ENDPOINT
(remote provider URL), LANGFAM_CACHE_DIR (default directory for embedding
caches).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import __version__
from .clustering import (
    ClusterOptions,
    cluster_languages,
    normalize_dissimilarity_mode,
)
from .corpus import (
    DEFAULT_DUPLICATE_THRESHOLD,
    corpus_stats,
    ingest_corpus,
    render_generation_prompt,
    validate_corpus,
)
from .embedding import (
    EmbeddingCache,
    build_language_embeddings,
    load_language_embeddings,
    make_provider,
    save_language_embeddings,
)
from .errors import (
    InternalError,
    IoFailure,
    LangfamError,
    PipelineError,
    ProviderError,
    ValidationError,
)
from .pipeline import load_run_config, run_pipeline
from .planner import curriculum_order, rank_pivots, recommend_transfer_source
from .report import emit_dendrogram, emit_heatmap, format_plan_table, write_report
from .similarity import (
    SimilarityMatrix,
    build_similarity_matrix,
    save_matrix_json,
    similarity_stats,
)
from .taxonomy import default_registry, load_registry


def _exit_code(error: LangfamError) -> int:
    cause = error.cause if isinstance(error, PipelineError) else error
    if isinstance(cause, InternalError):
        return 4
    if isinstance(cause, ProviderError):
        return 3
    return 2


def _fail(error: LangfamError):
    click.echo(f"error: {error}", err=True)
    sys.exit(_exit_code(error))


def _registry_from(path: str | None):
    return load_registry(Path(path)) if path else default_registry()


def _cache_path(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get("LANGFAM_CACHE_DIR")
    candidate = Path(path)
    if base and not candidate.is_absolute():
        return str(Path(base) / candidate)
    return str(candidate)


_ENV_HELP = """\b
Environment variables:
  LANGFAM_API_KEY    credential for the remote embedding provider
  LANGFAM_ENDPOINT   remote embedding endpoint URL
  LANGFAM_CACHE_DIR  base directory for relative --cache paths
"""


@click.group(epilog=_ENV_HELP)
@click.version_option(version=__version__, prog_name="langfam")
def main():
    """Discover programming-language families and plan family-aware training.

    Exit codes: 0 success, 2 validation failure, 3 provider failure,
    4 internal invariant violation.
    """


# --- corpus -------------------------------------------------------------


@main.group()
def corpus():
    """Prompt rendering, corpus validation, and statistics."""


@corpus.command("render-prompts")
@click.option("--feature", "feature_id", default="all", show_default=True,
              help="Feature id (F1..F21) or 'all'.")
@click.option("--per-cell", "per_cell", type=int, default=100, show_default=True,
              help="Snippets requested per (language, feature) cell.")
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Write one prompt file per feature instead of stdout.")
def corpus_render_prompts(feature_id, per_cell, registry_path, out_dir):
    """Render generation prompts for the feature-aligned corpus."""
    try:
        registry = _registry_from(registry_path)
        features = (
            list(registry.features)
            if feature_id == "all"
            else [registry.feature(feature_id)]
        )
        programming = registry.programming_languages()
        reference = registry.reference
        outputs = []
        for feature in features:
            prompt = render_generation_prompt(feature, programming, per_cell)
            if reference is not None:
                prompt += "\n\n" + render_generation_prompt(
                    feature, [reference], per_cell, natural_language=True
                )
            outputs.append((feature, prompt))
        if out_dir:
            directory = Path(out_dir)
            directory.mkdir(parents=True, exist_ok=True)
            for feature, prompt in outputs:
                (directory / f"prompt_{feature.id}.txt").write_text(
                    prompt + "\n", encoding="utf-8"
                )
            click.echo(f"wrote {len(outputs)} prompt files to {directory}")
        else:
            for feature, prompt in outputs:
                click.echo(f"--- {feature.id}: {feature.name} ---")
                click.echo(prompt)
                click.echo()
    except LangfamError as error:
        _fail(error)


@corpus.command("validate")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--expect", "expected", type=int, required=True,
              help="Expected samples per (language, feature) cell.")
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
@click.option("--duplicate-threshold", type=float, default=DEFAULT_DUPLICATE_THRESHOLD,
              show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit the manifest as JSON.")
def corpus_validate(corpus_path, expected, registry_path, duplicate_threshold, as_json):
    """Validate corpus coverage and shape against the registry."""
    try:
        registry = _registry_from(registry_path)
        ingested = ingest_corpus(corpus_path, registry, on_error="collect")
        for issue in ingested.rejected[:20]:
            click.echo(f"rejected: {issue}", err=True)
        result = validate_corpus(
            ingested, registry, expected, duplicate_threshold=duplicate_threshold
        )
        if as_json:
            payload = result.manifest.to_json_dict()
            payload["violations"] = [str(v) for v in result.violations]
            payload["rejected_records"] = len(ingested.rejected)
            click.echo(json.dumps(payload, indent=2))
        else:
            click.echo(
                f"{result.manifest.total} samples in {len(result.manifest.cells)} cells; "
                f"duplicate rate {result.manifest.duplicate_rate:.3f}"
            )
            for violation in result.violations:
                click.echo(f"violation: {violation}")
        if result.violations or ingested.rejected:
            sys.exit(2)
        click.echo("corpus OK")
    except LangfamError as error:
        _fail(error)


@corpus.command("stats")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True)
def corpus_stats_cmd(corpus_path, registry_path, as_json):
    """Summarize an ingested corpus."""
    try:
        registry = _registry_from(registry_path)
        ingested = ingest_corpus(corpus_path, registry, on_error="collect")
        stats = corpus_stats(ingested)
        if as_json:
            click.echo(json.dumps(stats.to_json_dict(), indent=2))
            return
        click.echo(f"total samples: {stats.total}")
        click.echo(
            "snippet length: "
            f"min {stats.length_min}, median {stats.length_median:.0f}, "
            f"mean {stats.length_mean:.1f}, max {stats.length_max}"
        )
        click.echo(f"duplicate rate: {stats.duplicate_rate:.3f}")
        for language, count in sorted(stats.per_language.items()):
            click.echo(f"  {language}: {count}")
    except LangfamError as error:
        _fail(error)


# --- embed / similarity ---------------------------------------------------


@main.command("embed")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--provider", "provider_name", default="local", show_default=True,
              type=click.Choice(["local", "http"]))
@click.option("--cache", "cache_path", type=click.Path(), default=None,
              help="Embedding cache file (relative paths resolve under LANGFAM_CACHE_DIR).")
@click.option("--out", "out_path", type=click.Path(), default="embeddings.json",
              show_default=True)
@click.option("--dim", type=int, default=None, help="Vector dimension.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for the local embedder.")
@click.option("--model", default=None, help="Remote model identifier.")
@click.option("--endpoint", default=None, help="Remote endpoint URL.")
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
@click.option("--aggregation", type=click.Choice(["mean", "concat"]), default="mean",
              show_default=True)
def embed_cmd(corpus_path, provider_name, cache_path, out_path, dim, seed, model,
              endpoint, batch_size, registry_path, aggregation):
    """Embed a corpus into per-language embeddings."""
    try:
        registry = _registry_from(registry_path)
        config = {"type": provider_name, "seed": seed}
        if dim is not None:
            config["dim"] = dim
        if model:
            config["model"] = model
        if endpoint:
            config["endpoint"] = endpoint
        provider = make_provider(config)
        cache = None
        resolved = _cache_path(cache_path)
        if resolved:
            cache = EmbeddingCache(resolved, provider.identity, provider.dim)
        ingested = ingest_corpus(corpus_path, registry)
        embeddings = build_language_embeddings(
            ingested, provider, registry, cache=cache,
            batch_size=batch_size, aggregation=aggregation,
        )
        save_language_embeddings(out_path, embeddings, provider.identity)
        click.echo(f"embedded {len(embeddings)} languages -> {out_path}")
    except LangfamError as error:
        _fail(error)


@main.command("similarity")
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True), required=True,
              help="Language embeddings JSON produced by 'langfam embed'.")
@click.option("--out", "out_path", type=click.Path(), default="matrix.csv", show_default=True)
@click.option("--json-out", "json_path", type=click.Path(), default=None,
              help="Also write the JSON variant with the stats block.")
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
def similarity_cmd(embeddings_path, out_path, json_path, registry_path):
    """Build the pairwise normalized-cosine similarity matrix."""
    try:
        registry = _registry_from(registry_path)
        embeddings, provider_identity = load_language_embeddings(embeddings_path)
        matrix = build_similarity_matrix(embeddings, provider=provider_identity)
        matrix.to_csv(out_path)
        stats = None
        known = all(name in registry for name in matrix.languages)
        if known:
            stats = similarity_stats(matrix, registry)
            click.echo(f"centroid language: {stats.centroid_language}")
        if json_path:
            save_matrix_json(matrix, json_path, stats=stats)
        click.echo(f"wrote {len(matrix.languages)}x{len(matrix.languages)} matrix -> {out_path}")
    except LangfamError as error:
        _fail(error)


# --- cluster ----------------------------------------------------------------


@main.command("cluster")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, default=None, help="Force the cluster count.")
@click.option("--elbow", nargs=2, type=int, default=None, metavar="KMIN KMAX",
              help="Elbow search range (default 2 to n-1).")
@click.option("--dissim", default="one-minus-sim", show_default=True,
              type=click.Choice(["one-minus-sim", "euclidean"]),
              help="Dissimilarity transform; euclidean needs --embeddings.")
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), default="partition.json",
              show_default=True)
@click.option("--tree-out", "tree_path", type=click.Path(), default=None,
              help="Also write the dendrogram (tree-text).")
@click.option("--exclude-reference/--include-reference", default=True, show_default=True)
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
def cluster_cmd(matrix_path, k, elbow, dissim, embeddings_path, out_path, tree_path,
                exclude_reference, registry_path):
    """Cluster languages into families from a similarity matrix."""
    try:
        registry = _registry_from(registry_path)
        matrix = SimilarityMatrix.from_csv(matrix_path)
        if exclude_reference and registry.reference is not None:
            names = [n for n in matrix.languages if n != registry.reference.name]
            if len(names) >= 2:
                matrix = matrix.subset(names)
        embeddings = None
        if embeddings_path:
            embeddings, _ = load_language_embeddings(embeddings_path)
            embeddings = [e for e in embeddings if e.language in set(matrix.languages)]
        options = ClusterOptions(
            mode=normalize_dissimilarity_mode(dissim),
            k=k,
            k_min=elbow[0] if elbow else 2,
            k_max=elbow[1] if elbow else None,
            embeddings=embeddings,
        )
        result, dendrogram = cluster_languages(matrix, options)
        Path(out_path).write_text(
            json.dumps(result.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )
        if tree_path:
            emit_dendrogram(dendrogram, result.partition, tree_path, fmt="tree-text")
        silhouette = "n/a" if result.silhouette is None else f"{result.silhouette:.3f}"
        click.echo(f"k={result.k}, silhouette={silhouette}")
        for label in sorted(result.per_cluster):
            click.echo(f"  cluster {label}: {', '.join(result.per_cluster[label])}")
    except LangfamError as error:
        _fail(error)


# --- plan -------------------------------------------------------------------


@main.group()
def plan():
    """Transfer, curriculum, and pivot planning."""


@plan.command("transfer")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True), required=True)
@click.option("--target", required=True, help="Low-resource target language.")
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True)
def plan_transfer(matrix_path, target, registry_path, as_json):
    """Recommend the fine-tuning source for a low-resource target."""
    try:
        registry = _registry_from(registry_path)
        matrix = SimilarityMatrix.from_csv(matrix_path)
        recommendation = recommend_transfer_source(target, matrix, registry)
        if as_json:
            click.echo(json.dumps(recommendation.to_json_dict(), indent=2))
            return
        click.echo(f"target: {recommendation.target}")
        click.echo(f"chosen source: {recommendation.chosen}")
        click.echo(
            format_plan_table(
                [(lang, f"{sim:.4f}") for lang, sim in recommendation.ranked_sources],
                ("source", "similarity"),
            )
        )
    except LangfamError as error:
        _fail(error)


@plan.command("curriculum")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True), required=True)
@click.option("--base", required=True, help="Base language (usually the reference).")
@click.option("--languages", "languages_csv", default=None,
              help="Comma-separated language subset (default: all others).")
@click.option("--policy", default="near-to-far", show_default=True,
              type=click.Choice(["near-to-far", "far-to-near", "random"]))
@click.option("--seed", type=int, default=None, help="Seed (required for random).")
@click.option("--count", type=int, default=1, show_default=True,
              help="With random policy: emit this many orders, seeds seed..seed+count-1.")
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True)
def plan_curriculum(matrix_path, base, languages_csv, policy, seed, count,
                    registry_path, as_json):
    """Order languages for staged multilingual fine-tuning."""
    try:
        registry = _registry_from(registry_path)
        matrix = SimilarityMatrix.from_csv(matrix_path)
        if languages_csv:
            languages = [name.strip() for name in languages_csv.split(",") if name.strip()]
        else:
            reference = registry.reference.name if registry.reference else None
            languages = [
                name for name in matrix.languages if name != base and name != reference
            ]
        seeds = [None]
        if policy == "random":
            if seed is None:
                raise ValidationError("random curriculum policy requires --seed")
            seeds = [seed + i for i in range(max(count, 1))]
        plans = [
            curriculum_order(base, languages, matrix, policy=policy, seed=s)
            for s in seeds
        ]
        if as_json:
            click.echo(json.dumps([p.to_json_dict() for p in plans], indent=2))
            return
        for current in plans:
            tag = f" (seed {current.seed})" if current.seed is not None else ""
            click.echo(f"policy {current.policy}{tag}: " + " -> ".join(current.order))
            click.echo(
                format_plan_table(
                    [
                        (i + 1, stage.language, f"{stage.similarity_to_base:.4f}")
                        for i, stage in enumerate(current.stages)
                    ],
                    ("stage", "language", "sim-to-base"),
                )
            )
    except LangfamError as error:
        _fail(error)


@plan.command("pivots")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True), required=True)
@click.option("--source", required=True)
@click.option("--targets", "targets_csv", default="",
              help="Comma-separated target languages.")
@click.option("--scoring", default="centrality", show_default=True,
              type=click.Choice(["centrality", "target-mean", "betweenness"]))
@click.option("--include-source", is_flag=True, default=False)
@click.option("--include-targets", is_flag=True, default=False)
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True)
def plan_pivots(matrix_path, source, targets_csv, scoring, include_source,
                include_targets, registry_path, as_json):
    """Rank intermediary languages for source -> pivot -> target translation."""
    try:
        registry = _registry_from(registry_path)
        matrix = SimilarityMatrix.from_csv(matrix_path)
        targets = [name.strip() for name in targets_csv.split(",") if name.strip()]
        ranking = rank_pivots(
            source, targets, matrix, registry, scoring=scoring,
            include_source=include_source, include_targets=include_targets,
        )
        if as_json:
            click.echo(json.dumps(ranking.to_json_dict(), indent=2))
            return
        click.echo(f"source: {ranking.source}; targets: {', '.join(ranking.targets) or '-'}")
        click.echo(
            format_plan_table(
                [(lang, f"{score:.4f}") for lang, score in ranking.ranked_pivots],
                ("pivot", f"score ({ranking.scoring})"),
            )
        )
    except LangfamError as error:
        _fail(error)


# --- run / report -------------------------------------------------------------


@main.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--corpus", "corpus_override", type=click.Path(exists=True), default=None)
@click.option("--outdir", "outdir_override", type=click.Path(), default=None)
@click.option("--k", type=int, default=None, help="Force the cluster count.")
def run_cmd(config_path, corpus_override, outdir_override, k):
    """Run the full pipeline (validate, embed, similarity, cluster, plans)."""
    try:
        config = load_run_config(config_path)
        if corpus_override:
            config.corpus = corpus_override
        if outdir_override:
            config.outdir = outdir_override
        if k is not None:
            config.clustering["k"] = k
        manifest = run_pipeline(config)
        click.echo(f"run complete: {config.outdir} (digest {manifest.run_digest()[:12]})")
    except PipelineError as error:
        click.echo(f"error in stage '{error.stage}': {error.cause}", err=True)
        sys.exit(_exit_code(error))
    except LangfamError as error:
        _fail(error)


@main.command("report")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True), required=True)
@click.option("--dendrogram", "dendrogram_path", type=click.Path(exists=True), default=None,
              help="Dendrogram tree-text to re-render.")
@click.option("--partition", "partition_path", type=click.Path(exists=True), default=None)
@click.option("--outdir", type=click.Path(), default="report", show_default=True)
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None)
def report_cmd(matrix_path, dendrogram_path, partition_path, outdir, registry_path):
    """Render heatmap, dendrogram, and a markdown summary from saved artifacts."""
    try:
        from .clustering import from_tree_text

        registry = _registry_from(registry_path)
        matrix = SimilarityMatrix.from_csv(matrix_path)
        directory = Path(outdir)
        directory.mkdir(parents=True, exist_ok=True)
        reference = registry.reference.name if registry.reference else None
        emit_heatmap(matrix, directory / "heatmap.svg", reference=reference)
        stats = None
        if all(name in registry for name in matrix.languages):
            stats = similarity_stats(matrix, registry)
        result = None
        if dendrogram_path:
            text = Path(dendrogram_path).read_text(encoding="utf-8")
            body = "\n".join(
                line for line in text.splitlines() if not line.startswith("#")
            )
            dendrogram = from_tree_text(body)
            partition = None
            if partition_path:
                payload = json.loads(Path(partition_path).read_text(encoding="utf-8"))
                partition = {k: int(v) for k, v in payload.get("partition", {}).items()}
            emit_dendrogram(dendrogram, partition, directory / "dendrogram.svg")
        write_report(directory / "report.md", matrix, stats=stats, result=result)
        click.echo(f"report written to {directory}")
    except LangfamError as error:
        _fail(error)


if __name__ == "__main__":
    main()
