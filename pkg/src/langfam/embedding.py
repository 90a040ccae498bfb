"""Sample embedding: pluggable providers, a binary vector cache, centroid math."""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .corpus import Corpus
from .errors import (
    DimensionMismatch,
    EmptyInput,
    PartialFailure,
    ProviderMismatch,
    ProviderUnavailable,
    ValidationError,
)
from .taxonomy import LanguageRegistry, feature_sort_key

AGGREGATION_MODES = ("mean", "concat")


class EmbeddingProvider(Protocol):
    """Anything that maps a batch of texts to fixed-dimension vectors."""

    dim: int

    @property
    def identity(self) -> str: ...

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class LocalNgramEmbedder:
    """Deterministic offline embedder: hashed character-trigram bag.

    Each trigram is hashed into one of ``dim`` signed buckets; the bag is
    L2-normalized. Identical texts map to identical vectors, byte-for-byte,
    on every platform.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise ValidationError("embedding dim must be >= 1")
        self.dim = dim
        self.seed = seed
        self._salt = struct.pack("<q", seed)

    @property
    def identity(self) -> str:
        return f"local-ngram:seed={self.seed}:dim={self.dim}"

    def _vector(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        padded = f"\x02{text}\x03"
        for i in range(len(padded) - 2):
            digest = hashlib.blake2b(
                padded[i : i + 3].encode("utf-8"), digest_size=9, salt=self._salt
            ).digest()
            bucket = int.from_bytes(digest[:8], "little") % self.dim
            sign = 1.0 if digest[8] & 1 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._vector(text) for text in texts]


class HttpEmbeddingProvider:
    """Reference remote adapter: OpenAI-style ``/embeddings`` POST endpoint.

    Request: ``{"model": ..., "input": [texts]}`` with a bearer credential;
    response: ``{"data": [{"embedding": [...]}, ...]}`` in input order.
    Transient failures (connection errors, 429, 5xx) are retried with
    exponential backoff before raising ProviderUnavailable.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        dim: int,
        api_key: str | None = None,
        timeout: float = 30.0,
        max_retries: int = 3,
        backoff: float = 0.5,
        session=None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.dim = dim
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    @property
    def identity(self) -> str:
        return f"http:{self.model}:dim={self.dim}"

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {"model": self.model, "input": list(texts)}
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self._session.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = ProviderUnavailable(
                    f"provider returned HTTP {response.status_code}"
                )
                continue
            if response.status_code != 200:
                raise ProviderUnavailable(
                    f"provider returned HTTP {response.status_code}: {response.text[:200]}"
                )
            try:
                data = response.json()["data"]
                vectors = [np.asarray(item["embedding"], dtype=np.float64) for item in data]
            except (KeyError, TypeError, ValueError) as exc:
                raise ProviderUnavailable(f"malformed provider response: {exc}") from exc
            if len(vectors) != len(texts):
                raise ProviderUnavailable(
                    f"provider returned {len(vectors)} vectors for {len(texts)} inputs"
                )
            return vectors
        raise ProviderUnavailable(f"provider unreachable after retries: {last_error}")


_CACHE_MAGIC = b"LFEMCACH"
_CACHE_VERSION = 1
_HEADER_FMT = "<8sHIQI"  # magic, version, dim, count, identity length
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)


class EmbeddingCache:
    """Append-safe binary cache keyed by content hash.

    Layout: fixed header (magic, version, dim, count, provider identity)
    followed by fixed-size records of raw sha256 bytes plus ``dim``
    little-endian float64 components. Round-trips are bit-exact.
    """

    def __init__(self, path: str | Path, provider_identity: str, dim: int):
        self.path = Path(path)
        self.identity = provider_identity
        self.dim = dim
        self._vectors: dict[str, np.ndarray] = {}
        self._record_size = 32 + 8 * dim
        if self.path.exists() and self.path.stat().st_size > 0:
            self._load()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._write_header()

    def _write_header(self):
        identity_bytes = self.identity.encode("utf-8")
        with self.path.open("wb") as handle:
            handle.write(
                struct.pack(
                    _HEADER_FMT,
                    _CACHE_MAGIC,
                    _CACHE_VERSION,
                    self.dim,
                    0,
                    len(identity_bytes),
                )
            )
            handle.write(identity_bytes)

    def _load(self):
        with self.path.open("rb") as handle:
            header = handle.read(_HEADER_SIZE)
            if len(header) < _HEADER_SIZE:
                raise ProviderMismatch(f"cache file {self.path} is truncated")
            magic, version, dim, count, identity_len = struct.unpack(_HEADER_FMT, header)
            if magic != _CACHE_MAGIC or version != _CACHE_VERSION:
                raise ProviderMismatch(f"{self.path} is not a langfam embedding cache")
            identity = handle.read(identity_len).decode("utf-8")
            if identity != self.identity:
                raise ProviderMismatch(
                    f"cache was written by {identity!r}, current provider is "
                    f"{self.identity!r}; mixing providers is not allowed"
                )
            if dim != self.dim:
                raise DimensionMismatch(f"cache dim {dim} != provider dim {self.dim}")
            for _ in range(count):
                record = handle.read(self._record_size)
                if len(record) < self._record_size:
                    break  # ignore a trailing partial record from an interrupted append
                digest = record[:32].hex()
                self._vectors[digest] = np.frombuffer(record[32:], dtype="<f8").copy()

    def __contains__(self, digest: str) -> bool:
        return digest in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def get(self, digest: str) -> np.ndarray | None:
        return self._vectors.get(digest)

    def put(self, digest: str, vector: np.ndarray):
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise DimensionMismatch(
                f"vector of shape {vector.shape} does not match cache dim {self.dim}"
            )
        if digest in self._vectors:
            return
        self._vectors[digest] = vector
        with self.path.open("r+b") as handle:
            handle.seek(0, 2)
            handle.write(bytes.fromhex(digest))
            handle.write(vector.astype("<f8").tobytes())
            handle.seek(struct.calcsize("<8sHI"))
            handle.write(struct.pack("<Q", len(self._vectors)))


@dataclass
class LanguageEmbedding:
    """Per-feature centroids plus the aggregated language vector."""

    language: str
    feature_centroids: dict[str, np.ndarray]
    aggregate: np.ndarray


def _as_matrix(vectors: Sequence[np.ndarray]) -> np.ndarray:
    if len(vectors) == 0:
        raise EmptyInput("at least one vector is required")
    arrays = [np.asarray(v, dtype=np.float64) for v in vectors]
    dim = arrays[0].shape
    for arr in arrays[1:]:
        if arr.shape != dim:
            raise DimensionMismatch(f"mixed dimensions {dim} and {arr.shape}")
    return np.stack(arrays)


def feature_centroid(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Component-wise arithmetic mean of equal-dimension vectors."""
    matrix = _as_matrix(vectors)
    return np.add.reduce(matrix, axis=0) / matrix.shape[0]


def aggregate_language_embedding(
    centroids: Mapping[str, np.ndarray], mode: str = "mean"
) -> np.ndarray:
    """Combine feature centroids into one language vector.

    ``mean`` (default) keeps the dimension fixed and weights every feature
    equally; ``concat`` joins the centroids in feature-id order. Both are
    invariant to the mapping's iteration order.
    """
    if not centroids:
        raise EmptyInput("at least one feature centroid is required")
    if mode not in AGGREGATION_MODES:
        raise ValidationError(f"unknown aggregation mode {mode!r}")
    ordered = [
        np.asarray(centroids[fid], dtype=np.float64)
        for fid in sorted(centroids, key=feature_sort_key)
    ]
    if mode == "concat":
        return np.concatenate(ordered)
    return feature_centroid(ordered)


def embed_samples(
    provider: EmbeddingProvider,
    samples: Sequence,
    batch_size: int = 32,
    cache: EmbeddingCache | None = None,
) -> dict[str, np.ndarray]:
    """Embed samples (anything with ``text`` and ``content_hash``) by content hash.

    Cache hits are never re-requested, duplicate texts are embedded once, and
    the result is independent of ``batch_size``. If some batches succeed and a
    later one does not, the completed vectors stay cached and PartialFailure
    lists what is missing.
    """
    if batch_size < 1:
        raise ValidationError("batch_size must be >= 1")
    ordered_hashes: list[str] = []
    texts_by_hash: dict[str, str] = {}
    for sample in samples:
        digest = sample.content_hash
        if digest not in texts_by_hash:
            ordered_hashes.append(digest)
            texts_by_hash[digest] = sample.text

    result: dict[str, np.ndarray] = {}
    pending: list[str] = []
    for digest in ordered_hashes:
        cached = cache.get(digest) if cache is not None else None
        if cached is not None:
            result[digest] = cached
        else:
            pending.append(digest)

    failed: list[str] = []
    provider_error: Exception | None = None
    for start in range(0, len(pending), batch_size):
        batch = pending[start : start + batch_size]
        if provider_error is not None:
            failed.extend(batch)
            continue
        try:
            vectors = provider.embed([texts_by_hash[d] for d in batch])
        except ProviderUnavailable as exc:
            provider_error = exc
            failed.extend(batch)
            continue
        for digest, vector in zip(batch, vectors):
            vector = np.asarray(vector, dtype=np.float64)
            if vector.shape != (provider.dim,):
                raise DimensionMismatch(
                    f"provider returned dim {vector.shape} but declared {provider.dim}"
                )
            if not np.all(np.isfinite(vector)):
                raise ProviderUnavailable(
                    f"provider returned non-finite components for sample {digest[:12]}"
                )
            result[digest] = vector
            if cache is not None:
                cache.put(digest, vector)

    if failed:
        if not result:
            raise provider_error  # nothing succeeded: plain availability failure
        raise PartialFailure(failed)
    return result


def build_language_embeddings(
    corpus: Corpus,
    provider: EmbeddingProvider,
    registry: LanguageRegistry,
    cache: EmbeddingCache | None = None,
    batch_size: int = 32,
    aggregation: str = "mean",
) -> list[LanguageEmbedding]:
    """One LanguageEmbedding per registry language that has samples.

    A language's missing (language, feature) cells are simply absent from its
    centroid map; aggregation averages over the present features only.
    """
    vectors = embed_samples(provider, corpus.samples, batch_size=batch_size, cache=cache)
    embeddings: list[LanguageEmbedding] = []
    for language in registry.languages:
        centroids: dict[str, np.ndarray] = {}
        for feature in registry.features:
            cell = corpus.cell(language.name, feature.id)
            if not cell:
                continue
            centroids[feature.id] = feature_centroid(
                [vectors[sample.content_hash] for sample in cell]
            )
        if not centroids:
            continue
        embeddings.append(
            LanguageEmbedding(
                language=language.name,
                feature_centroids=centroids,
                aggregate=aggregate_language_embedding(centroids, mode=aggregation),
            )
        )
    return embeddings


def save_language_embeddings(
    path: str | Path, embeddings: Sequence[LanguageEmbedding], provider_identity: str
):
    """JSON export; float64 components survive the round-trip exactly."""
    payload = {
        "provider": provider_identity,
        "languages": [
            {
                "language": emb.language,
                "aggregate": emb.aggregate.tolist(),
                "feature_centroids": {
                    fid: emb.feature_centroids[fid].tolist()
                    for fid in sorted(emb.feature_centroids, key=feature_sort_key)
                },
            }
            for emb in embeddings
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_language_embeddings(path: str | Path) -> tuple[list[LanguageEmbedding], str]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    embeddings = [
        LanguageEmbedding(
            language=entry["language"],
            feature_centroids={
                fid: np.asarray(values, dtype=np.float64)
                for fid, values in entry["feature_centroids"].items()
            },
            aggregate=np.asarray(entry["aggregate"], dtype=np.float64),
        )
        for entry in payload["languages"]
    ]
    return embeddings, payload.get("provider", "")


def make_provider(config: Mapping) -> EmbeddingProvider:
    """Build a provider from a config mapping ({"type": "local"|"http", ...})."""
    kind = str(config.get("type", "local"))
    if kind == "local":
        return LocalNgramEmbedder(
            dim=int(config.get("dim", 64)), seed=int(config.get("seed", 0))
        )
    if kind == "http":
        import os

        endpoint = config.get("endpoint") or os.environ.get("LANGFAM_ENDPOINT")
        if not endpoint:
            raise ValidationError(
                "http provider needs 'endpoint' in config or LANGFAM_ENDPOINT set"
            )
        return HttpEmbeddingProvider(
            endpoint=str(endpoint),
            model=str(config.get("model", "text-embedding")),
            dim=int(config.get("dim", 1536)),
            api_key=config.get("api_key") or os.environ.get("LANGFAM_API_KEY"),
            timeout=float(config.get("timeout", 30.0)),
            max_retries=int(config.get("max_retries", 3)),
        )
    raise ValidationError(f"unknown provider type {kind!r}")
