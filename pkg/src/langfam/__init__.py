"""langfam: discover programming-language families from feature-aligned code
corpora and turn the similarity geometry into training plans."""

__version__ = "0.1.0"

from .clustering import (
    ClusterOptions,
    ClusteringResult,
    Dendrogram,
    DissimilarityMatrix,
    adjusted_rand_index,
    cluster_languages,
    cut_dendrogram,
    elbow_k,
    silhouette_score,
    to_dissimilarity,
    ward_linkage,
)
from .corpus import (
    CodeSample,
    Corpus,
    CorpusManifest,
    corpus_stats,
    ingest_corpus,
    render_generation_prompt,
    validate_corpus,
)
from .embedding import (
    EmbeddingCache,
    HttpEmbeddingProvider,
    LanguageEmbedding,
    LocalNgramEmbedder,
    aggregate_language_embedding,
    build_language_embeddings,
    embed_samples,
    feature_centroid,
)
from .planner import (
    CurriculumPlan,
    PivotRanking,
    TransferRecommendation,
    curriculum_order,
    rank_pivots,
    recommend_transfer_source,
)
from .similarity import (
    SimilarityMatrix,
    SimilarityStats,
    build_similarity_matrix,
    normalized_cosine,
    similarity_stats,
)
from .taxonomy import (
    FEATURES,
    LanguageId,
    LanguageRegistry,
    LinguisticFeature,
    default_registry,
    load_registry,
)

__all__ = [
    "__version__",
    "ClusterOptions",
    "ClusteringResult",
    "CodeSample",
    "Corpus",
    "CorpusManifest",
    "CurriculumPlan",
    "Dendrogram",
    "DissimilarityMatrix",
    "EmbeddingCache",
    "FEATURES",
    "HttpEmbeddingProvider",
    "LanguageEmbedding",
    "LanguageId",
    "LanguageRegistry",
    "LinguisticFeature",
    "LocalNgramEmbedder",
    "PivotRanking",
    "SimilarityMatrix",
    "SimilarityStats",
    "TransferRecommendation",
    "adjusted_rand_index",
    "aggregate_language_embedding",
    "build_language_embeddings",
    "build_similarity_matrix",
    "cluster_languages",
    "corpus_stats",
    "curriculum_order",
    "cut_dendrogram",
    "default_registry",
    "elbow_k",
    "embed_samples",
    "feature_centroid",
    "ingest_corpus",
    "load_registry",
    "normalized_cosine",
    "rank_pivots",
    "recommend_transfer_source",
    "render_generation_prompt",
    "silhouette_score",
    "similarity_stats",
    "to_dissimilarity",
    "validate_corpus",
    "ward_linkage",
]
