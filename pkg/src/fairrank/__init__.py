"""Fairness-aware re-ranking of keyword image-search results."""

from .corpus import (
    GenderLabel,
    GroupDistribution,
    GroupPolicy,
    ImageRecord,
    ObjectLabel,
    QueryCorpus,
    group_distribution,
    parse_corpus,
    serialize_corpus,
)
from .costs import CostBreakdown, Weights, combined_cost, fairness_cost, kl_divergence, relevance_cost
from .embeddings import EmbeddingTable, cosine_distance, load_embeddings, mean_embedding
from .metrics import MetricsReport, bucket_of, bucket_relevance, evaluate, ndkl
from .reranker import (
    FairnessAwareReranker,
    Method,
    RandomReranker,
    Ranking,
    RelevanceReranker,
    rerank_greedy,
    rerank_random,
    rerank_relevance_only,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "CostBreakdown", "EmbeddingTable", "FairnessAwareReranker", "GenderLabel",
    "GroupDistribution", "GroupPolicy", "ImageRecord", "Method", "MetricsReport",
    "ObjectLabel", "QueryCorpus", "RandomReranker", "Ranking", "RelevanceReranker",
    "Weights", "bucket_of", "bucket_relevance", "combined_cost", "cosine_distance",
    "evaluate", "fairness_cost", "group_distribution", "kl_divergence",
    "load_embeddings", "mean_embedding", "ndkl", "parse_corpus", "relevance_cost",
    "rerank_greedy", "rerank_random", "rerank_relevance_only", "serialize_corpus", "sweep",
]
