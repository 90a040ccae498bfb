import json
from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner

from langfam.cli import main
from langfam.clustering import adjusted_rand_index
from langfam.corpus import write_corpus
from langfam.pipeline import RunConfig, load_run_config, run_pipeline
from langfam.synthdata import planted_corpus_records, planted_partition


@pytest.fixture(scope="module")
def planted_corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "planted.jsonl"
    write_corpus(path, planted_corpus_records(samples_per_cell=2, seed=0))
    return path


@pytest.fixture(scope="module")
def programming_registry_path(tmp_path_factory):
    """Registry config covering the 19 programming languages (no reference);
    the planted corpus has no English cells."""
    from langfam.taxonomy import default_registry

    tiers = {
        lang.name: lang.tier for lang in default_registry().programming_languages()
    }
    path = tmp_path_factory.mktemp("registry") / "registry.yaml"
    path.write_text(yaml.safe_dump({"languages": tiers}))
    return path


@pytest.fixture()
def runner():
    return CliRunner()


def run_config(corpus_path, outdir, registry_path, **overrides):
    config = {
        "corpus": str(corpus_path),
        "registry": str(registry_path),
        "expected_per_cell": 2,
        "provider": {"type": "local", "dim": 64, "seed": 0},
        "outdir": str(outdir),
        "plans": [
            {"type": "transfer", "target": "Kotlin"},
            {"type": "pivots", "source": "Python", "targets": ["Kotlin", "Haskell"]},
        ],
    }
    config.update(overrides)
    return config


ARTIFACTS = [
    "matrix.csv",
    "matrix.json",
    "embeddings.json",
    "heatmap.svg",
    "dendrogram.svg",
    "dendrogram.txt",
    "dendrogram.dot",
    "partition.json",
    "plans.json",
    "report.md",
    "manifest.json",
]


def test_run_pipeline_end_to_end(planted_corpus_path, programming_registry_path, tmp_path):
    outdir = tmp_path / "out"
    manifest = run_pipeline(RunConfig(**run_config(planted_corpus_path, outdir, programming_registry_path)))
    for name in ARTIFACTS:
        assert (outdir / name).exists(), name

    partition_payload = json.loads((outdir / "partition.json").read_text())
    assert partition_payload["k"] == 6
    partition = {k: int(v) for k, v in partition_payload["partition"].items()}
    assert adjusted_rand_index(partition, planted_partition()) == 1.0
    assert "English" not in partition  # reference never clustered

    report = (outdir / "report.md").read_text()
    assert "k=6" in report
    assert manifest.run_digest() in report

    manifest_payload = json.loads((outdir / "manifest.json").read_text())
    assert manifest_payload["run_digest"] == manifest.run_digest()
    assert (outdir / "matrix.csv").read_text().startswith(
        f"# manifest: {manifest.run_digest()}"
    )
    plans = json.loads((outdir / "plans.json").read_text())["plans"]
    assert {plan["type"] for plan in plans} == {"transfer", "pivots"}


def test_rerun_is_byte_identical(planted_corpus_path, programming_registry_path, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    run_pipeline(RunConfig(**run_config(planted_corpus_path, out_a, programming_registry_path)))
    run_pipeline(RunConfig(**run_config(planted_corpus_path, out_b, programming_registry_path)))
    for name in ARTIFACTS:
        if name == "manifest.json":
            continue  # timestamps live here, everything else is pinned
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
    a = json.loads((out_a / "manifest.json").read_text())
    b = json.loads((out_b / "manifest.json").read_text())
    for key in ("run_digest", "matrix_digest", "artifacts"):
        assert a[key] == b[key]


def test_validation_failure_aborts_with_cells(planted_corpus_path, programming_registry_path, tmp_path):
    config = RunConfig(
        **run_config(planted_corpus_path, tmp_path / "bad", programming_registry_path, expected_per_cell=3)
    )
    from langfam.errors import PipelineError

    with pytest.raises(PipelineError) as excinfo:
        run_pipeline(config)
    assert excinfo.value.stage == "corpus"
    assert "F1" in str(excinfo.value)
    assert not (tmp_path / "bad" / "matrix.csv").exists()  # nothing promoted


def test_load_run_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("corpus: x.jsonl\nbogus: 1\n")
    from langfam.errors import ValidationError

    with pytest.raises(ValidationError):
        load_run_config(path)


# --- CLI ------------------------------------------------------------------------


def test_cli_run_and_exit_codes(planted_corpus_path, programming_registry_path, tmp_path, runner):
    config_path = tmp_path / "run.yaml"
    outdir = tmp_path / "cli-out"
    config_path.write_text(yaml.safe_dump(run_config(planted_corpus_path, outdir, programming_registry_path)))
    result = runner.invoke(main, ["run", "--config", str(config_path)])
    assert result.exit_code == 0, result.output
    assert (outdir / "matrix.csv").exists()


def test_cli_run_validation_failure_exit_2(planted_corpus_path, programming_registry_path, tmp_path, runner):
    config_path = tmp_path / "run.yaml"
    config = run_config(planted_corpus_path, tmp_path / "x", programming_registry_path, expected_per_cell=9)
    config_path.write_text(yaml.safe_dump(config))
    result = runner.invoke(main, ["run", "--config", str(config_path)])
    assert result.exit_code == 2
    assert "corpus" in result.output or "corpus" in (result.stderr or "")


def test_cli_render_prompts(runner):
    result = runner.invoke(
        main, ["corpus", "render-prompts", "--feature", "F1", "--per-cell", "100"]
    )
    assert result.exit_code == 0
    assert "Variable Definition" in result.output
    assert "Generate 100 code snippets" in result.output


def test_cli_render_prompts_unknown_feature(runner):
    result = runner.invoke(main, ["corpus", "render-prompts", "--feature", "F99"])
    assert result.exit_code == 2


def test_cli_corpus_validate_and_stats(planted_corpus_path, programming_registry_path, runner):
    result = runner.invoke(
        main,
        ["corpus", "validate", str(planted_corpus_path), "--expect", "2",
         "--registry", str(programming_registry_path)],
    )
    assert result.exit_code == 0, result.output
    assert "corpus OK" in result.output

    short = runner.invoke(
        main,
        ["corpus", "validate", str(planted_corpus_path), "--expect", "3",
         "--registry", str(programming_registry_path)],
    )
    assert short.exit_code == 2
    assert "violation" in short.output

    stats = runner.invoke(main, ["corpus", "stats", str(planted_corpus_path), "--json"])
    assert stats.exit_code == 0
    payload = json.loads(stats.output)
    assert payload["total"] == 19 * 21 * 2
    assert payload["per_language"]["Go"] == 42


def test_cli_embed_similarity_cluster_chain(planted_corpus_path, tmp_path, runner):
    embeddings_path = tmp_path / "embeddings.json"
    matrix_path = tmp_path / "matrix.csv"
    partition_path = tmp_path / "partition.json"
    tree_path = tmp_path / "dendrogram.txt"
    cache_path = tmp_path / "cache.bin"

    result = runner.invoke(
        main,
        [
            "embed", str(planted_corpus_path),
            "--provider", "local", "--dim", "64",
            "--cache", str(cache_path),
            "--out", str(embeddings_path),
        ],
    )
    assert result.exit_code == 0, result.output
    assert cache_path.exists()

    result = runner.invoke(
        main,
        ["similarity", "--embeddings", str(embeddings_path), "--out", str(matrix_path),
         "--json-out", str(tmp_path / "matrix.json")],
    )
    assert result.exit_code == 0, result.output
    assert matrix_path.exists()

    result = runner.invoke(
        main,
        ["cluster", "--matrix", str(matrix_path), "--out", str(partition_path),
         "--tree-out", str(tree_path)],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(partition_path.read_text())
    assert payload["k"] == 6
    partition = {k: int(v) for k, v in payload["partition"].items()}
    assert adjusted_rand_index(partition, planted_partition()) == 1.0

    forced = runner.invoke(
        main, ["cluster", "--matrix", str(matrix_path), "--k", "3",
               "--out", str(tmp_path / "p3.json")],
    )
    assert forced.exit_code == 0
    assert json.loads((tmp_path / "p3.json").read_text())["k"] == 3


def test_cli_plan_commands(tmp_path, runner):
    from conftest import paper_means_matrix

    matrix_path = tmp_path / "matrix.csv"
    paper_means_matrix().to_csv(matrix_path)

    transfer = runner.invoke(
        main, ["plan", "transfer", "--matrix", str(matrix_path), "--target", "Kotlin", "--json"]
    )
    assert transfer.exit_code == 0, transfer.output
    assert json.loads(transfer.output)["chosen"]

    curriculum = runner.invoke(
        main,
        ["plan", "curriculum", "--matrix", str(matrix_path), "--base", "English",
         "--policy", "near-to-far"],
    )
    assert curriculum.exit_code == 0, curriculum.output
    assert "->" in curriculum.output

    randoms = runner.invoke(
        main,
        ["plan", "curriculum", "--matrix", str(matrix_path), "--base", "English",
         "--policy", "random", "--seed", "1", "--count", "3", "--json"],
    )
    assert randoms.exit_code == 0
    payload = json.loads(randoms.output)
    assert [plan["seed"] for plan in payload] == [1, 2, 3]

    missing_seed = runner.invoke(
        main,
        ["plan", "curriculum", "--matrix", str(matrix_path), "--base", "English",
         "--policy", "random"],
    )
    assert missing_seed.exit_code == 2

    pivots = runner.invoke(
        main,
        ["plan", "pivots", "--matrix", str(matrix_path), "--source", "Python",
         "--targets", "Kotlin,Haskell", "--scoring", "centrality", "--json"],
    )
    assert pivots.exit_code == 0, pivots.output
    ranked = json.loads(pivots.output)["ranked_pivots"]
    assert ranked[0]["language"] == "Go"


def test_cli_report_from_artifacts(planted_corpus_path, programming_registry_path, tmp_path, runner):
    outdir = tmp_path / "run-out"
    config_path = tmp_path / "run.yaml"
    config_path.write_text(yaml.safe_dump(run_config(planted_corpus_path, outdir, programming_registry_path)))
    assert runner.invoke(main, ["run", "--config", str(config_path)]).exit_code == 0

    report_dir = tmp_path / "fresh-report"
    result = runner.invoke(
        main,
        ["report", "--matrix", str(outdir / "matrix.csv"),
         "--dendrogram", str(outdir / "dendrogram.txt"),
         "--partition", str(outdir / "partition.json"),
         "--outdir", str(report_dir)],
    )
    assert result.exit_code == 0, result.output
    assert (report_dir / "heatmap.svg").exists()
    assert (report_dir / "dendrogram.svg").exists()
    assert (report_dir / "report.md").exists()


def test_cli_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "langfam" in result.output
