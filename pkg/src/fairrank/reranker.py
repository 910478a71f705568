"""Rankers for a retrieved image set.

Three estimators share a scikit-learn style interface: ``fit`` learns the
reference group distribution (and query vector) from the retrieved corpus,
``transform`` returns a :class:`Ranking` of a corpus.

* :class:`FairnessAwareReranker` greedily appends the record with minimum
  combined relevance + fairness cost.
* :class:`RelevanceReranker` sorts by relevance cost alone.
* :class:`RandomReranker` draws a seeded uniform permutation.
"""

import enum
import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import GroupPolicy, group_counts
from .costs import (
    CostBreakdown,
    Weights,
    cost_breakdown,
    fairness_from_counts,
    query_vector,
    relevance_cost,
)
from .exceptions import FairRankError, ValidationError
from .metrics import DEFAULT_BUCKET_SIZE, evaluate
from .validation import check_corpus, check_permutation, check_seed, check_weights

logger = logging.getLogger(__name__)

DEFAULT_WEIGHT_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)


class Method(str, enum.Enum):
    GREEDY = "greedy"
    RANDOM = "random"
    RELEVANCE_ONLY = "relevance"


@dataclass
class Ranking:
    query: str
    ordered_ids: list
    method: Method
    weights: Optional[Weights] = None
    seed: Optional[int] = None
    step_costs: list = field(default_factory=list)

    def __post_init__(self):
        self.method = Method(self.method)
        self.ordered_ids = list(self.ordered_ids)

    def to_dict(self):
        return {
            "query": self.query,
            "method": self.method.value,
            "weights": None if self.weights is None
            else {"w_r": self.weights.w_r, "w_g": self.weights.w_g},
            "seed": self.seed,
            "ordered_ids": list(self.ordered_ids),
            "step_costs": [c.to_dict() for c in self.step_costs],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, obj):
        try:
            weights = obj.get("weights")
            return cls(
                query=obj["query"],
                ordered_ids=obj["ordered_ids"],
                method=Method(obj["method"]),
                weights=None if weights is None else Weights(weights["w_r"], weights["w_g"]),
                seed=obj.get("seed"),
                step_costs=[CostBreakdown(c["relevance"], c["fairness"], c["combined"])
                            for c in obj.get("step_costs") or []],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed ranking: {exc}") from None

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON ({exc.msg})") from None
        return cls.from_dict(obj)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def _tie_key(record):
    return (record.original_rank, record.id)


def relevance_costs(corpus, table):
    """Relevance cost of every record, keyed by id.  The query is embedded once."""
    qvec = query_vector(table, corpus.query)
    return {r.id: relevance_cost(table, corpus.query, r, query_vec=qvec) for r in corpus}


class _CorpusRanker(BaseEstimator):
    """Shared ``fit``/``fit_transform`` plumbing."""

    def fit(self, corpus, y=None):
        corpus = check_corpus(corpus)
        self.query_ = corpus.query
        self.n_records_ = len(corpus)
        return self

    def fit_transform(self, corpus, y=None):
        return self.fit(corpus).transform(corpus)

    def _check_query(self, corpus):
        if corpus.query != self.query_:
            raise ValidationError(
                f"ranker was fitted for query {self.query_!r}, got {corpus.query!r}"
            )


class RelevanceReranker(_CorpusRanker):
    """Order records by ascending relevance cost.

    Ties go to the lower original rank, then the lexicographically smaller id.

    Parameters
    ----------
    embeddings : EmbeddingTable
    """

    def __init__(self, embeddings=None):
        self.embeddings = embeddings

    def fit(self, corpus, y=None):
        super().fit(corpus)
        if self.embeddings is None:
            raise ValidationError("RelevanceReranker needs an embedding table")
        self.query_vector_ = query_vector(self.embeddings, corpus.query)
        return self

    def transform(self, corpus):
        check_is_fitted(self, "query_vector_")
        corpus = check_corpus(corpus)
        self._check_query(corpus)
        costs = {r.id: relevance_cost(self.embeddings, corpus.query, r, self.query_vector_)
                 for r in corpus}
        order = sorted(corpus, key=lambda r: (costs[r.id],) + _tie_key(r))
        return Ranking(corpus.query, [r.id for r in order], Method.RELEVANCE_ONLY)


class FairnessAwareReranker(_CorpusRanker):
    """Greedy re-ranker trading off query relevance against group fairness.

    Starting from an empty list, each step appends the remaining record
    minimizing ``w_r * relevance + w_g * KL(prefix + record || reference)``,
    where the reference is the group distribution of the fitted corpus.

    Parameters
    ----------
    embeddings : EmbeddingTable
        Word vectors used for the relevance cost.
    w_r : float, default=0.5
        Relevance weight in [0, 1].
    w_g : float, optional
        Fairness weight; defaults to ``1 - w_r``.
    policy : {"all4", "binary"}, default="all4"
        Group set used for distributions.
    top_k : int, optional
        Stop the greedy search after ``top_k`` picks and append the rest in
        original-rank order.  ``None`` re-ranks everything.

    Attributes
    ----------
    reference_distribution_ : GroupDistribution
    query_vector_ : ndarray
    weights_ : Weights
    """

    def __init__(self, embeddings=None, w_r=0.5, w_g=None, policy="all4", top_k=None):
        self.embeddings = embeddings
        self.w_r = w_r
        self.w_g = w_g
        self.policy = policy
        self.top_k = top_k

    def fit(self, corpus, y=None):
        super().fit(corpus)
        if self.embeddings is None:
            raise ValidationError("FairnessAwareReranker needs an embedding table")
        if self.top_k is not None and (not isinstance(self.top_k, int) or self.top_k < 1):
            raise ValidationError(f"top_k must be a positive integer or None, got {self.top_k!r}")
        self.weights_ = check_weights(self.w_r, self.w_g)
        self.policy_ = GroupPolicy.parse(self.policy)
        self.reference_distribution_ = corpus.distribution(self.policy_)
        self.query_vector_ = query_vector(self.embeddings, corpus.query)
        return self

    def transform(self, corpus):
        check_is_fitted(self, "reference_distribution_")
        corpus = check_corpus(corpus)
        self._check_query(corpus)
        rel = {r.id: relevance_cost(self.embeddings, corpus.query, r, self.query_vector_)
               for r in corpus}
        return self._greedy(corpus, rel)

    def _greedy(self, corpus, rel):
        weights = self.weights_
        reference = self.reference_distribution_
        counts = group_counts([], self.policy_)
        remaining = sorted(corpus, key=_tie_key)
        n_steps = len(remaining) if self.top_k is None else min(self.top_k, len(remaining))
        ordered, steps = [], []
        # the fairness term depends only on the candidate's group, so evaluate it
        # once per group per step from the running counts
        for _ in range(n_steps):
            fair_by_group = {}
            best = None
            for rec in remaining:
                g = rec.gender
                if g not in fair_by_group:
                    if g in counts:
                        trial = dict(counts)
                        trial[g] += 1
                        fair_by_group[g] = fairness_from_counts(trial, reference)
                    else:
                        fair_by_group[g] = fairness_from_counts(counts, reference)
                br = cost_breakdown(weights, rel[rec.id], fair_by_group[g])
                key = (br.combined,) + _tie_key(rec)
                if best is None or key < best[0]:
                    best = (key, rec, br)
            _, rec, br = best
            remaining.remove(rec)
            ordered.append(rec.id)
            steps.append(br)
            if rec.gender in counts:
                counts[rec.gender] += 1
        ordered.extend(r.id for r in remaining)
        return Ranking(corpus.query, ordered, Method.GREEDY, weights=weights, step_costs=steps)


class RandomReranker(_CorpusRanker):
    """Uniform random permutation from a seeded PCG64 stream.

    See :func:`seeded_permutation` for the exact algorithm.
    """

    def __init__(self, seed=0):
        self.seed = seed

    def fit(self, corpus, y=None):
        super().fit(corpus)
        self.seed_ = check_seed(self.seed)
        return self

    def transform(self, corpus):
        check_is_fitted(self, "seed_")
        corpus = check_corpus(corpus)
        ids = corpus.ids
        perm = seeded_permutation(len(ids), self.seed_)
        return Ranking(corpus.query, [ids[i] for i in perm], Method.RANDOM, seed=self.seed_)


_U64 = 1 << 64


def _bounded(bitgen, bound):
    # unbiased draw from [0, bound) by rejecting the top partial block
    limit = _U64 - (_U64 % bound)
    while True:
        x = int(bitgen.random_raw())
        if x < limit:
            return x % bound


def seeded_permutation(n, seed):
    """Permutation of ``range(n)`` reproducible across platforms.

    Fisher-Yates (Durstenfeld, descending ``i``) driven by raw 64-bit
    outputs of numpy's ``PCG64`` bit generator seeded with ``seed``;
    bounded indices use modulo with rejection.  Only the bit generator's
    stream is relied on, which numpy keeps stable for a given seed.
    """
    bitgen = np.random.PCG64(seed)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = _bounded(bitgen, i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


# ---------------------------------------------------------------------------
# functional entry points


def rerank_greedy(corpus, table, weights, policy=None, top_k=None):
    weights = check_weights(weights)
    est = FairnessAwareReranker(table, w_r=weights.w_r, w_g=weights.w_g,
                                policy=policy or corpus.group_policy, top_k=top_k)
    return est.fit_transform(corpus)


def rerank_relevance_only(corpus, table):
    return RelevanceReranker(table).fit_transform(corpus)


def rerank_random(corpus, seed):
    return RandomReranker(seed).fit_transform(corpus)


@dataclass
class RunSpec:
    method: Method
    w_r: Optional[float] = None
    seed: Optional[int] = None

    @property
    def name(self):
        if self.method is Method.GREEDY:
            return f"greedy_wr{self.w_r:g}"
        if self.method is Method.RANDOM:
            return f"random_seed{self.seed}"
        return "relevance"


@dataclass
class SweepEntry:
    spec: RunSpec
    ranking: Optional[Ranking]
    report: Optional[object]
    error: Optional[str] = None


class SweepError(FairRankError):
    """A sweep configuration failed; the original error is ``__cause__``."""

    def __init__(self, spec, exc):
        self.spec = spec
        super().__init__(f"{spec.name}: {exc}")


def sweep(corpus, table, weight_list=DEFAULT_WEIGHT_GRID, random_seeds=(),
          bucket_size=DEFAULT_BUCKET_SIZE, policy=None, errors="raise"):
    """Run the greedy ranker per weight, relevance-only once and random per seed.

    Parameters
    ----------
    weight_list : sequence of float or Weights
        Bare floats are ``w_r`` with ``w_g = 1 - w_r``.
    random_seeds : sequence of int
    errors : {"raise", "record"}
        ``"raise"`` wraps the first failure in :class:`SweepError`;
        ``"record"`` stores the message on the entry and continues.

    Returns
    -------
    list of SweepEntry
        Greedy entries in ``weight_list`` order, then relevance-only, then
        random entries in seed order.
    """
    if errors not in ("raise", "record"):
        raise ValueError(f"errors must be 'raise' or 'record', got {errors!r}")
    weight_list = list(weight_list)
    if not weight_list:
        raise ValidationError("weight_list must not be empty")
    policy = GroupPolicy.parse(policy or corpus.group_policy)

    jobs = []
    for w in weight_list:
        weights = check_weights(w)
        jobs.append((RunSpec(Method.GREEDY, w_r=weights.w_r),
                     lambda wt=weights: rerank_greedy(corpus, table, wt, policy=policy)))
    jobs.append((RunSpec(Method.RELEVANCE_ONLY), lambda: rerank_relevance_only(corpus, table)))
    for s in random_seeds:
        jobs.append((RunSpec(Method.RANDOM, seed=s), lambda s=s: rerank_random(corpus, s)))

    out = []
    for spec, run in jobs:
        try:
            ranking = run()
            check_permutation(ranking.ordered_ids, corpus)
            report = evaluate(ranking, corpus, bucket_size, policy)
        except FairRankError as exc:
            if errors == "raise":
                raise SweepError(spec, exc) from exc
            logger.error("sweep run %s failed: %s", spec.name, exc)
            out.append(SweepEntry(spec, None, None, error=str(exc)))
            continue
        out.append(SweepEntry(spec, ranking, report))
    return out
