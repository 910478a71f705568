"""Relevance, fairness and combined costs for adding an image to a ranking.

All logarithms are base 2, so fairness costs (and NDKL downstream) are in
bits.
"""

import math
from dataclasses import dataclass

from .corpus import GroupPolicy, distribution_from_counts, group_counts
from .embeddings import cosine_distance, mean_embedding, tokenize
from .exceptions import AbsoluteContinuityError, NoCoverageError, ValidationError

#: Relevance cost for images whose labels are empty or all out of vocabulary.
FALLBACK_RELEVANCE_COST = 1.0

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class Weights:
    """Trade-off between relevance (``w_r``) and fairness (``w_g``)."""

    w_r: float
    w_g: float

    def __post_init__(self):
        for name in ("w_r", "w_g"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ValidationError(f"{name} must be a finite number, got {val!r}")
            if not (0.0 <= val <= 1.0):
                raise ValidationError(f"{name}={val} outside [0, 1]")
        if abs(self.w_r + self.w_g - 1.0) > _WEIGHT_TOL:
            raise ValidationError(f"weights must sum to 1, got {self.w_r} + {self.w_g}")

    @classmethod
    def from_relevance(cls, w_r):
        return cls(float(w_r), 1.0 - float(w_r))


@dataclass(frozen=True)
class CostBreakdown:
    relevance: float
    fairness: float
    combined: float

    def to_dict(self):
        return {"relevance": self.relevance, "fairness": self.fairness, "combined": self.combined}


def query_vector(table, query):
    """Mean embedding of the query tokens.

    Raises
    ------
    NoCoverageError
        No query token is in the vocabulary.
    """
    vec, _ = mean_embedding(table, tokenize(query))
    return vec


def relevance_cost(table, query, record, query_vec=None):
    """Cosine distance between a record's mean label vector and the query's.

    Records with no labels, or only out-of-vocabulary labels, get
    :data:`FALLBACK_RELEVANCE_COST`.  An uncovered query raises
    :class:`NoCoverageError` because no record can be scored.
    """
    if query_vec is None:
        query_vec = query_vector(table, query)
    terms = record.terms
    if not any(tokenize(t) for t in terms):
        return FALLBACK_RELEVANCE_COST
    try:
        label_vec, _ = mean_embedding(table, terms)
    except NoCoverageError:
        return FALLBACK_RELEVANCE_COST
    return cosine_distance(label_vec, query_vec)


def kl_divergence(p, q):
    """``sum_g p(g) * log2(p(g) / q(g))`` with ``0 * log(0/q) = 0``.

    Parameters
    ----------
    p, q : GroupDistribution or mapping of group to probability
        Must share the same group keys.

    Raises
    ------
    AbsoluteContinuityError
        ``p(g) > 0`` where ``q(g) == 0``.
    """
    p = getattr(p, "probabilities", p)
    q = getattr(q, "probabilities", q)
    if set(p) != set(q):
        raise ValidationError("distributions are over different group sets")
    terms = []
    for g, pg in p.items():
        if pg == 0.0:
            continue
        qg = q[g]
        if qg == 0.0:
            raise AbsoluteContinuityError(f"p({g}) = {pg} but reference has q({g}) = 0")
        terms.append(pg * math.log2(pg / qg))
    # fsum is order-independent, so group-symmetric inputs tie exactly; the
    # clamp only removes rounding below zero
    return max(math.fsum(terms), 0.0)


def fairness_from_counts(counts, corpus_dist):
    """KL of the distribution given by ``counts`` against ``corpus_dist``.

    Zero when ``counts`` is empty (possible under the binary policy).
    """
    if sum(counts.values()) == 0:
        return 0.0
    return kl_divergence(distribution_from_counts(counts), corpus_dist)


def fairness_cost(prefix, candidate, corpus_dist, policy=GroupPolicy.ALL_FOUR):
    """KL divergence of ``prefix + [candidate]`` against the corpus distribution."""
    counts = group_counts(list(prefix) + [candidate], policy)
    return fairness_from_counts(counts, corpus_dist)


def combined_cost(weights, relevance, fairness):
    return weights.w_r * relevance + weights.w_g * fairness


def cost_breakdown(weights, relevance, fairness):
    return CostBreakdown(relevance, fairness, combined_cost(weights, relevance, fairness))
