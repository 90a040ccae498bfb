"""Ward agglomeration over language dissimilarities: dendrogram, elbow K,
partition extraction, silhouette validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .embedding import LanguageEmbedding
from .errors import (
    DegenerateInput,
    DimensionMismatch,
    InternalError,
    InvalidK,
    RangeTooNarrow,
    SingleCluster,
    ValidationError,
)
from .similarity import SimilarityMatrix

_TIE_EPS = 1e-12

DISSIMILARITY_MODES = ("one_minus_similarity", "euclidean_on_embeddings")

_MODE_ALIASES = {
    "one_minus_similarity": "one_minus_similarity",
    "one_minus_sim": "one_minus_similarity",
    "euclidean": "euclidean_on_embeddings",
    "euclidean_on_embeddings": "euclidean_on_embeddings",
}


def normalize_dissimilarity_mode(mode: str) -> str:
    key = str(mode).replace("-", "_")
    if key not in _MODE_ALIASES:
        raise ValidationError(f"unknown dissimilarity mode {mode!r}")
    return _MODE_ALIASES[key]


@dataclass
class DissimilarityMatrix:
    languages: list[str]
    values: np.ndarray
    source: str = "one_minus_similarity"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n = len(self.languages)
        if self.values.shape != (n, n):
            raise ValidationError(
                f"matrix shape {self.values.shape} does not match {n} languages"
            )


def to_dissimilarity(
    matrix: SimilarityMatrix | None,
    mode: str = "one_minus_similarity",
    embeddings: Sequence[LanguageEmbedding] | None = None,
) -> DissimilarityMatrix:
    """Bridge similarities to a Ward input: ``d = 1 - s`` by default, or
    pairwise Euclidean distances over aggregate vectors."""
    if mode == "one_minus_similarity":
        if matrix is None:
            raise ValidationError("one_minus_similarity mode requires a similarity matrix")
        values = 1.0 - matrix.values
        np.fill_diagonal(values, 0.0)
        return DissimilarityMatrix(list(matrix.languages), values, source=mode)
    if mode == "euclidean_on_embeddings":
        if not embeddings:
            raise ValidationError("euclidean_on_embeddings mode requires embeddings")
        dims = {emb.aggregate.shape for emb in embeddings}
        if len(dims) > 1:
            raise DimensionMismatch(f"aggregate dims differ: {sorted(dims)}")
        n = len(embeddings)
        values = np.zeros((n, n), dtype=np.float64)
        for i in range(n):
            for j in range(i + 1, n):
                d = float(np.linalg.norm(embeddings[i].aggregate - embeddings[j].aggregate))
                values[i, j] = d
                values[j, i] = d
        return DissimilarityMatrix([emb.language for emb in embeddings], values, source=mode)
    raise ValidationError(f"unknown dissimilarity mode {mode!r}")


@dataclass(frozen=True)
class Merge:
    """One agglomeration step. Node ids follow the usual convention: leaves are
    0..n-1, the merge created at step t gets id n+t."""

    left: int
    right: int
    height: float
    size: int


@dataclass
class Dendrogram:
    leaves: list[str]
    merges: list[Merge]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    def members(self, node: int) -> list[int]:
        """Leaf indices under a node id."""
        n = self.n_leaves
        stack = [node]
        out: list[int] = []
        while stack:
            current = stack.pop()
            if current < n:
                out.append(current)
            else:
                merge = self.merges[current - n]
                stack.extend((merge.right, merge.left))
        return sorted(out)

    def structure(self) -> list[tuple[frozenset, float, int]]:
        """Order-independent description of the merge list, for comparisons:
        each entry pairs the two merged leaf-name sets with height and size."""
        out = []
        for merge in self.merges:
            left_names = frozenset(self.leaves[i] for i in self.members(merge.left))
            right_names = frozenset(self.leaves[i] for i in self.members(merge.right))
            out.append((frozenset((left_names, right_names)), merge.height, merge.size))
        return sorted(out, key=lambda item: (item[1], sorted(sorted(s) for s in item[0])))


def ward_linkage(d: DissimilarityMatrix) -> Dendrogram:
    """Agglomerate by Ward's minimum-variance criterion.

    Inter-cluster distances are maintained with the Lance-Williams recurrence
    on squared dissimilarities; ties are broken toward the smallest
    (left, right) node-id pair so merge sequences are reproducible.
    """
    n = len(d.languages)
    if n < 2:
        raise DegenerateInput("need at least two leaves to cluster")
    total = 2 * n - 1
    d2 = np.zeros((total, total), dtype=np.float64)
    d2[:n, :n] = d.values.astype(np.float64) ** 2
    sizes = np.ones(total, dtype=np.int64)
    active: list[int] = list(range(n))
    merges: list[Merge] = []
    last_height = 0.0

    for step in range(n - 1):
        best_value = math.inf
        best_pair = (-1, -1)
        for ai in range(len(active)):
            i = active[ai]
            for bi in range(ai + 1, len(active)):
                j = active[bi]
                value = d2[i, j]
                if value < best_value - _TIE_EPS:
                    best_value = value
                    best_pair = (i, j)
        i, j = best_pair
        new = n + step
        height = math.sqrt(max(best_value, 0.0))
        if height < last_height - _TIE_EPS:
            raise InternalError(
                f"merge heights decreased: {height} after {last_height}"
            )
        height = max(height, last_height)
        last_height = height

        si, sj = sizes[i], sizes[j]
        sizes[new] = si + sj
        for k in active:
            if k == i or k == j:
                continue
            sk = sizes[k]
            updated = (
                (si + sk) * d2[i, k] + (sj + sk) * d2[j, k] - sk * d2[i, j]
            ) / (si + sj + sk)
            d2[new, k] = updated
            d2[k, new] = updated
        active.remove(i)
        active.remove(j)
        active.append(new)
        merges.append(Merge(left=i, right=j, height=height, size=int(sizes[new])))

    return Dendrogram(leaves=list(d.languages), merges=merges)


def cut_dendrogram(dendrogram: Dendrogram, k: int) -> dict[str, int]:
    """Undo the last k-1 merges; clusters are labeled 0..k-1 in order of their
    smallest leaf index."""
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for idx, merge in enumerate(dendrogram.merges[: n - k]):
        new = n + idx
        parent[find(merge.left)] = new
        parent[find(merge.right)] = new

    groups: dict[int, list[int]] = {}
    for leaf in range(n):
        groups.setdefault(find(leaf), []).append(leaf)
    ordered = sorted(groups.values(), key=lambda leaves: leaves[0])
    partition: dict[str, int] = {}
    for label, leaves in enumerate(ordered):
        for leaf in leaves:
            partition[dendrogram.leaves[leaf]] = label
    return partition


def dispersion_curve(dendrogram: Dendrogram, k_values: Sequence[int]) -> dict[int, float]:
    """W(k) for each requested k: the Ward objective of the cut partition.

    Merge costs telescope, so W(k) is the cumulative sum of squared heights / 2
    over the merges still applied at that cut.
    """
    n = dendrogram.n_leaves
    costs = [merge.height**2 / 2.0 for merge in dendrogram.merges]
    prefix = [0.0]
    for cost in costs:
        prefix.append(prefix[-1] + cost)
    out: dict[int, float] = {}
    for k in k_values:
        if not 1 <= k <= n:
            raise InvalidK(f"k must be in [1, {n}], got {k}")
        out[k] = prefix[n - k]
    return out


def ward_objective(d: DissimilarityMatrix, partition: Mapping[str, int]) -> float:
    """Within-cluster sum of squared dissimilarities over cluster size,
    recomputed directly from the matrix (independent of the dendrogram)."""
    index = {name: i for i, name in enumerate(d.languages)}
    clusters: dict[int, list[int]] = {}
    for name, label in partition.items():
        clusters.setdefault(label, []).append(index[name])
    total = 0.0
    for members in clusters.values():
        acc = 0.0
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                acc += float(d.values[members[a], members[b]]) ** 2
        total += acc / len(members)
    return total


def elbow_k(dendrogram: Dendrogram, k_min: int, k_max: int) -> int:
    """Pick k in [k_min, k_max] maximizing the discrete second difference of
    the dispersion curve, W(k-1) - 2 W(k) + W(k+1); ties go to the smaller k.

    The curvature needs both neighbors, so k=1 is never selectable; the
    effective lower bound is max(k_min, 2).
    """
    n = dendrogram.n_leaves
    if not (1 <= k_min < k_max <= n - 1):
        raise RangeTooNarrow(
            f"need 1 <= k_min < k_max <= {n - 1}, got k_min={k_min}, k_max={k_max}"
        )
    candidates = [k for k in range(max(k_min, 2), k_max + 1)]
    if not candidates:
        raise RangeTooNarrow(f"no k in [{k_min}, {k_max}] has a defined curvature")
    needed = range(candidates[0] - 1, min(candidates[-1] + 1, n) + 1)
    curve = dispersion_curve(dendrogram, list(needed))
    best_k = candidates[0]
    best_curvature = -math.inf
    for k in candidates:
        curvature = curve[k - 1] - 2.0 * curve[k] + curve[k + 1]
        if curvature > best_curvature + _TIE_EPS:
            best_curvature = curvature
            best_k = k
    return best_k


def silhouette_score(
    d: DissimilarityMatrix, partition: Mapping[str, int]
) -> tuple[float, dict[str, float]]:
    """Mean silhouette plus per-language values; singleton clusters score 0."""
    missing = [name for name in d.languages if name not in partition]
    if missing:
        raise ValidationError(f"partition does not cover: {missing}")
    labels = [partition[name] for name in d.languages]
    distinct = sorted(set(labels))
    if len(distinct) < 2:
        raise SingleCluster("silhouette requires at least two clusters")

    members: dict[int, list[int]] = {}
    for i, label in enumerate(labels):
        members.setdefault(label, []).append(i)

    per_language: dict[str, float] = {}
    for i, name in enumerate(d.languages):
        own = members[labels[i]]
        if len(own) == 1:
            per_language[name] = 0.0
            continue
        a = sum(float(d.values[i, j]) for j in own if j != i) / (len(own) - 1)
        b = math.inf
        for label in distinct:
            if label == labels[i]:
                continue
            other = members[label]
            mean_other = sum(float(d.values[i, j]) for j in other) / len(other)
            b = min(b, mean_other)
        denom = max(a, b)
        per_language[name] = 0.0 if denom == 0.0 else (b - a) / denom
    overall = sum(per_language.values()) / len(per_language)
    return overall, per_language


@dataclass
class ClusterOptions:
    mode: str = "one_minus_similarity"
    k: int | None = None
    k_min: int = 2
    k_max: int | None = None
    embeddings: Sequence[LanguageEmbedding] | None = None


@dataclass
class ClusteringResult:
    k: int
    partition: dict[str, int]
    silhouette: float | None
    per_language_silhouette: dict[str, float] = field(default_factory=dict)
    per_cluster: dict[int, list[str]] = field(default_factory=dict)

    def to_json_dict(self, manifest_digest: str | None = None) -> dict:
        payload = {
            "k": self.k,
            "silhouette": self.silhouette,
            "partition": self.partition,
            "clusters": {str(label): members for label, members in sorted(self.per_cluster.items())},
        }
        if manifest_digest:
            payload["manifest_digest"] = manifest_digest
        return payload


def cluster_languages(
    matrix: SimilarityMatrix, options: ClusterOptions | None = None
) -> tuple[ClusteringResult, Dendrogram]:
    """similarity -> dissimilarity -> Ward -> (elbow unless k forced) -> cut
    -> silhouette."""
    options = options or ClusterOptions()
    d = to_dissimilarity(matrix, mode=options.mode, embeddings=options.embeddings)
    dendrogram = ward_linkage(d)
    n = dendrogram.n_leaves
    if options.k is not None:
        k = options.k
        if not 1 <= k <= n:
            raise InvalidK(f"k must be in [1, {n}], got {k}")
    else:
        k_max = options.k_max if options.k_max is not None else n - 1
        k = elbow_k(dendrogram, options.k_min, k_max)
    partition = cut_dendrogram(dendrogram, k)
    if k >= 2:
        overall, per_language = silhouette_score(d, partition)
    else:
        overall, per_language = None, {}
    per_cluster: dict[int, list[str]] = {}
    for name in d.languages:
        per_cluster.setdefault(partition[name], []).append(name)
    result = ClusteringResult(
        k=k,
        partition=partition,
        silhouette=overall,
        per_language_silhouette=per_language,
        per_cluster=per_cluster,
    )
    return result, dendrogram


def adjusted_rand_index(a: Mapping[str, int], b: Mapping[str, int]) -> float:
    """Chance-corrected agreement between two partitions of the same keys."""
    keys = sorted(a)
    if sorted(b) != keys:
        raise ValidationError("partitions cover different language sets")
    n = len(keys)
    if n == 0:
        raise ValidationError("partitions are empty")
    labels_a = sorted({a[key] for key in keys})
    labels_b = sorted({b[key] for key in keys})
    table = np.zeros((len(labels_a), len(labels_b)), dtype=np.int64)
    index_a = {label: i for i, label in enumerate(labels_a)}
    index_b = {label: i for i, label in enumerate(labels_b)}
    for key in keys:
        table[index_a[a[key]], index_b[b[key]]] += 1

    def comb2(x) -> float:
        return float(x) * (float(x) - 1.0) / 2.0

    sum_cells = float(sum(comb2(v) for v in table.flat))
    sum_rows = float(sum(comb2(v) for v in table.sum(axis=1)))
    sum_cols = float(sum(comb2(v) for v in table.sum(axis=0)))
    expected = sum_rows * sum_cols / comb2(n)
    maximum = (sum_rows + sum_cols) / 2.0
    if maximum == expected:
        return 1.0
    return (sum_cells - expected) / (maximum - expected)


# --- text serialization ------------------------------------------------------


def _quote(name: str) -> str:
    return "'" + name.replace("'", "''") + "'"


def to_tree_text(dendrogram: Dendrogram) -> str:
    """Nested-parenthesis rendering with node heights, e.g.
    ``(('A','B'):0.1,'C'):0.4;``. Heights use repr so they parse back exactly."""
    n = dendrogram.n_leaves
    nodes: list[str] = [_quote(name) for name in dendrogram.leaves]
    for merge in dendrogram.merges:
        nodes.append(f"({nodes[merge.left]},{nodes[merge.right]}):{merge.height!r}")
    return nodes[-1] + ";" if dendrogram.merges else nodes[0] + ";"


class _TreeParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        raise ValidationError(f"tree text at position {self.pos}: {message}")

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str):
        if self.peek() != char:
            self.error(f"expected {char!r}")
        self.pos += 1

    def parse_name(self) -> str:
        self.expect("'")
        out = []
        while True:
            if self.pos >= len(self.text):
                self.error("unterminated name")
            char = self.text[self.pos]
            self.pos += 1
            if char == "'":
                if self.peek() == "'":
                    self.pos += 1
                    out.append("'")
                else:
                    return "".join(out)
            else:
                out.append(char)

    def parse_number(self) -> float:
        start = self.pos
        while self.peek() and self.peek() in "+-0123456789.eE":
            self.pos += 1
        if start == self.pos:
            self.error("expected a number")
        return float(self.text[start : self.pos])

    def parse_node(self):
        if self.peek() == "(":
            self.pos += 1
            left = self.parse_node()
            self.expect(",")
            right = self.parse_node()
            self.expect(")")
            self.expect(":")
            height = self.parse_number()
            return ("node", left, right, height)
        return ("leaf", self.parse_name())


def from_tree_text(text: str) -> Dendrogram:
    """Parse the nested-parenthesis format back into a dendrogram.

    Leaves are numbered in traversal order; merges are rebuilt in height
    order, so tie-free trees round-trip to an equal merge structure.
    """
    parser = _TreeParser(text.strip().rstrip(";"))
    root = parser.parse_node()
    if parser.pos != len(parser.text):
        parser.error("trailing characters")

    leaves: list[str] = []
    internals: list[tuple] = []

    def walk(node) -> tuple:
        if node[0] == "leaf":
            leaves.append(node[1])
            return ("leaf", len(leaves) - 1)
        left = walk(node[1])
        right = walk(node[2])
        entry = ("node", left, right, node[3], len(internals))
        internals.append(entry)
        return entry

    root_entry = walk(root)
    if root_entry[0] == "leaf":
        return Dendrogram(leaves=leaves, merges=[])

    n = len(leaves)
    order = sorted(internals, key=lambda entry: (entry[3], entry[4]))
    ids: dict[int, int] = {}
    merges: list[Merge] = []
    sizes: dict[int, int] = {}

    def node_id(entry) -> int:
        if entry[0] == "leaf":
            return entry[1]
        return ids[entry[4]]

    def node_size(identifier: int) -> int:
        return 1 if identifier < n else sizes[identifier]

    for position, entry in enumerate(order):
        left_id = node_id(entry[1])
        right_id = node_id(entry[2])
        if left_id > right_id:
            left_id, right_id = right_id, left_id
        new = n + position
        ids[entry[4]] = new
        sizes[new] = node_size(left_id) + node_size(right_id)
        merges.append(Merge(left=left_id, right=right_id, height=entry[3], size=sizes[new]))
    return Dendrogram(leaves=leaves, merges=merges)


def to_dot(dendrogram: Dendrogram, partition: Mapping[str, int] | None = None) -> str:
    """Graph-description rendering for graphviz-style tooling."""
    n = dendrogram.n_leaves
    lines = ["digraph dendrogram {", "  rankdir=BT;", "  node [shape=box];"]
    for i, name in enumerate(dendrogram.leaves):
        label = name.replace('"', '\\"')
        if partition is not None and name in partition:
            label = f"{label}\\ncluster {partition[name]}"
        lines.append(f'  n{i} [label="{label}"];')
    for idx, merge in enumerate(dendrogram.merges):
        node = n + idx
        lines.append(f'  n{node} [label="h={merge.height:.6g}" shape=point];')
        lines.append(f"  n{merge.left} -> n{node};")
        lines.append(f"  n{merge.right} -> n{node};")
    lines.append("}")
    return "\n".join(lines) + "\n"
