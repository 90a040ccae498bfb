"""Figure and report emitters: similarity heatmap, dendrogram, run summary."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .clustering import ClusteringResult, Dendrogram, to_dot, to_tree_text
from .errors import IoFailure, UnknownFormat
from .similarity import SimilarityMatrix, SimilarityStats

# Fixed hash salt keeps matplotlib SVG ids stable, so reruns are byte-identical.
_SVG_RC = {"svg.hashsalt": "langfam", "svg.fonttype": "none"}
_FIGURE_SUFFIXES = (".svg", ".png", ".pdf")


def _checked_path(path: str | Path) -> Path:
    if not str(path):
        raise IoFailure("output path is empty")
    out = Path(path)
    if out.parent and not out.parent.exists():
        raise IoFailure(f"output directory {out.parent} does not exist")
    return out


def _save_figure(fig, path: Path):
    metadata = {"Date": None} if path.suffix == ".svg" else None
    try:
        fig.savefig(path, metadata=metadata, bbox_inches="tight")
    except OSError as exc:
        raise IoFailure(f"could not write {path}: {exc}") from exc
    finally:
        plt.close(fig)


def heatmap_grid(
    matrix: SimilarityMatrix, reference: str | None = None
) -> tuple[list[str], list[str], np.ndarray]:
    """Layout for the heatmap: (row names, column names, value grid).

    Rows are the programming languages; the reference column (if any) goes
    last. The extra bottom row holds each column language's mean similarity to
    the other programming languages (self and reference excluded); under the
    reference column it is the reference's mean to all of them.
    """
    if reference is not None and reference not in matrix.languages:
        reference = None
    rows = [name for name in matrix.languages if name != reference]
    cols = rows + ([reference] if reference else [])
    grid = np.zeros((len(rows) + 1, len(cols)))
    for i, row_name in enumerate(rows):
        for j, col_name in enumerate(cols):
            grid[i, j] = matrix.value(row_name, col_name)
    for j, col_name in enumerate(cols):
        others = [matrix.value(col_name, other) for other in rows if other != col_name]
        grid[-1, j] = float(np.mean(others))
    return rows, cols, grid


def emit_heatmap(
    matrix: SimilarityMatrix,
    path: str | Path,
    reference: str | None = None,
    manifest_digest: str | None = None,
) -> Path:
    """Render the pairwise similarity heatmap with 2-decimal cell labels;
    deeper red means more similar."""
    out = _checked_path(path)
    if reference is not None and reference not in matrix.languages:
        reference = None
    rows, cols, grid = heatmap_grid(matrix, reference)

    with plt.rc_context(_SVG_RC):
        cell = 0.45
        fig, ax = plt.subplots(
            figsize=(max(4.0, cell * len(cols) + 2.2), max(3.2, cell * (len(rows) + 1) + 1.6))
        )
        ax.imshow(grid, cmap="Reds", vmin=0.0, vmax=1.0, aspect="equal")
        for i in range(grid.shape[0]):
            for j in range(grid.shape[1]):
                shade = "white" if grid[i, j] > 0.65 else "black"
                ax.text(
                    j, i, f"{grid[i, j]:.2f}", ha="center", va="center",
                    fontsize=7, color=shade,
                )
        ax.set_xticks(range(len(cols)))
        ax.set_xticklabels(cols, rotation=90, fontsize=8)
        ax.set_yticks(range(len(rows) + 1))
        ax.set_yticklabels(rows + ["mean"], fontsize=8)
        ax.axhline(len(rows) - 0.5, color="black", linewidth=1.2)
        if reference:
            ax.axvline(len(cols) - 1.5, color="black", linewidth=1.2)
        title = "Pairwise language similarity"
        if manifest_digest:
            title += f"  [{manifest_digest[:12]}]"
        ax.set_title(title, fontsize=10)
        _save_figure(fig, out)
    return out


def _leaf_order(dendrogram: Dendrogram) -> list[int]:
    if not dendrogram.merges:
        return list(range(dendrogram.n_leaves))
    n = dendrogram.n_leaves
    order: list[int] = []
    stack = [n + len(dendrogram.merges) - 1]
    while stack:
        node = stack.pop()
        if node < n:
            order.append(node)
        else:
            merge = dendrogram.merges[node - n]
            stack.append(merge.right)
            stack.append(merge.left)
    return order


def emit_dendrogram(
    dendrogram: Dendrogram,
    partition: Mapping[str, int] | None,
    path: str | Path,
    fmt: str | None = None,
    manifest_digest: str | None = None,
) -> Path:
    """Write the merge tree in one of: figure (svg/png/pdf), tree-text, dot.

    The figure puts merge heights on the vertical axis and colors leaf labels
    by cluster membership when a partition is given.
    """
    out = _checked_path(path)
    if fmt is None:
        fmt = {".txt": "tree-text", ".tree": "tree-text", ".dot": "dot"}.get(
            out.suffix, out.suffix.lstrip(".") or "svg"
        )
    if fmt in ("tree-text", "text"):
        header = f"# manifest: {manifest_digest}\n" if manifest_digest else ""
        try:
            out.write_text(header + to_tree_text(dendrogram) + "\n", encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"could not write {out}: {exc}") from exc
        return out
    if fmt == "dot":
        header = f"// manifest: {manifest_digest}\n" if manifest_digest else ""
        try:
            out.write_text(header + to_dot(dendrogram, partition), encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"could not write {out}: {exc}") from exc
        return out
    if f".{fmt}" not in _FIGURE_SUFFIXES:
        raise UnknownFormat(f"unknown dendrogram format {fmt!r}")

    n = dendrogram.n_leaves
    order = _leaf_order(dendrogram)
    x_of = {leaf: float(pos) for pos, leaf in enumerate(order)}
    palette = plt.get_cmap("tab10").colors

    def leaf_color(name: str):
        if partition is None or name not in partition:
            return "black"
        return palette[partition[name] % len(palette)]

    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.55 * n), 4.5))
        heights: dict[int, float] = {leaf: 0.0 for leaf in range(n)}
        for idx, merge in enumerate(dendrogram.merges):
            node = n + idx
            lx, rx = x_of[merge.left], x_of[merge.right]
            ly, ry = heights[merge.left], heights[merge.right]
            members = [dendrogram.leaves[i] for i in dendrogram.members(node)]
            labels = {partition[m] for m in members} if partition else set()
            color = (
                palette[labels.pop() % len(palette)]
                if partition is not None and len(labels) == 1
                else "steelblue"
            )
            ax.plot([lx, lx], [ly, merge.height], color=color, linewidth=1.4)
            ax.plot([rx, rx], [ry, merge.height], color=color, linewidth=1.4)
            ax.plot([lx, rx], [merge.height, merge.height], color=color, linewidth=1.4)
            x_of[node] = (lx + rx) / 2.0
            heights[node] = merge.height
        ax.set_xticks([x_of[leaf] for leaf in order])
        ax.set_xticklabels(
            [dendrogram.leaves[leaf] for leaf in order], rotation=90, fontsize=8
        )
        for tick, leaf in zip(ax.get_xticklabels(), order):
            tick.set_color(leaf_color(dendrogram.leaves[leaf]))
        ax.set_ylabel("merge height")
        title = "Hierarchical clustering of languages"
        if manifest_digest:
            title += f"  [{manifest_digest[:12]}]"
        ax.set_title(title, fontsize=10)
        ax.spines[["top", "right"]].set_visible(False)
        _save_figure(fig, out)
    return out


def format_plan_table(rows: list[tuple], headers: tuple) -> str:
    """Small fixed-width table for CLI output."""
    widths = [len(str(h)) for h in headers]
    rendered = [[str(cell) for cell in row] for row in rows]
    for row in rendered:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(row):
        return "  ".join(str(cell).ljust(widths[i]) for i, cell in enumerate(row))
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rendered)
    return "\n".join(lines)


def write_report(
    path: str | Path,
    matrix: SimilarityMatrix,
    stats: SimilarityStats | None = None,
    result: ClusteringResult | None = None,
    manifest_digest: str | None = None,
) -> Path:
    """Markdown run summary. Values are rounded for display only; full
    precision lives in the CSV/JSON artifacts."""
    out = _checked_path(path)
    lines = ["# Language family report", ""]
    if manifest_digest:
        lines += [f"Manifest digest: `{manifest_digest}`", ""]
    lines += [f"Languages: {len(matrix.languages)}", ""]
    if stats is not None:
        lines += [
            "## Mean similarity (reference excluded)",
            "",
            "| language | mean |",
            "|---|---|",
        ]
        ranked = sorted(stats.mean_similarity.items(), key=lambda kv: -kv[1])
        lines += [f"| {name} | {value:.2f} |" for name, value in ranked]
        lines += ["", f"Centroid language: **{stats.centroid_language}**", ""]
        if stats.reference_column is not None:
            lines += [
                f"Reference-language column mean: {stats.reference_mean:.3f}",
                "",
            ]
    if result is not None:
        lines += [f"## Clusters (k={result.k})", ""]
        if result.silhouette is not None:
            lines += [f"Overall silhouette: {result.silhouette:.2f}", ""]
        for label in sorted(result.per_cluster):
            members = ", ".join(result.per_cluster[label])
            lines += [f"- cluster {label}: {members}"]
        lines += [""]
    try:
        out.write_text("\n".join(lines), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"could not write {out}: {exc}") from exc
    return out
