"""Ranking evaluation: bucket relevance accuracy and NDKL unfairness.

NDKL is reported raw, so lower means fairer.
"""

import json
import math
from dataclasses import dataclass, field

from .corpus import GenderLabel, GroupPolicy, group_counts
from .costs import fairness_from_counts
from .validation import check_bucket_size, check_permutation

DEFAULT_BUCKET_SIZE = 30


def bucket_of(rank, bucket_size=DEFAULT_BUCKET_SIZE):
    """0-based bucket index of a 1-based rank.  The last bucket may be partial."""
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    return (rank - 1) // bucket_size


def _ordered_ids(ranking):
    return list(getattr(ranking, "ordered_ids", ranking))


def bucket_relevance(ranking, corpus, bucket_size=DEFAULT_BUCKET_SIZE):
    """Fraction of records whose predicted bucket equals their original one.

    Parameters
    ----------
    ranking : Ranking or sequence of str
        Predicted order of record ids.
    corpus : QueryCorpus
        Supplies the ground-truth ``original_rank`` of every record.
    bucket_size : int, default=30
    """
    bucket_size = check_bucket_size(bucket_size)
    ids = check_permutation(_ordered_ids(ranking), corpus)
    matched = sum(
        bucket_of(pos, bucket_size) == bucket_of(corpus.record(rid).original_rank, bucket_size)
        for pos, rid in enumerate(ids, start=1)
    )
    return matched / len(ids)


def discount(position):
    return 1.0 / math.log2(position + 1)


def normalizer(n):
    """``Z(n) = sum_{i=1..n} 1 / log2(i + 1)``."""
    return sum(discount(i) for i in range(1, n + 1))


def prefix_divergences(ranking, corpus, policy=None):
    """KL of each prefix distribution against the corpus distribution.

    Returns a list of ``(depth, kl)`` for depths 1..N.  Prefixes with no
    member in the policy's group set contribute 0.
    """
    policy = GroupPolicy.parse(policy or corpus.group_policy)
    ids = check_permutation(_ordered_ids(ranking), corpus)
    reference = corpus.distribution(policy)
    counts = {g: 0 for g in policy.groups}
    out = []
    for depth, rid in enumerate(ids, start=1):
        g = corpus.record(rid).gender
        if g in counts:
            counts[g] += 1
        out.append((depth, fairness_from_counts(counts, reference)))
    return out


def ndkl_from_divergences(divergences):
    z = normalizer(len(divergences))
    return sum(discount(depth) * kl for depth, kl in divergences) / z


def ndkl(ranking, corpus, policy=None):
    """Normalized discounted KL divergence of ``ranking`` (in bits)."""
    return ndkl_from_divergences(prefix_divergences(ranking, corpus, policy))


@dataclass
class MetricsReport:
    relevance_accuracy: float
    ndkl: float
    bucket_size: int
    prefix_divergences: list
    group_counts: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "relevance_accuracy": self.relevance_accuracy,
            "ndkl": self.ndkl,
            "bucket_size": self.bucket_size,
            "prefix_divergences": [[d, kl] for d, kl in self.prefix_divergences],
            "group_counts": {g.value: c for g, c in self.group_counts.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, obj):
        return cls(
            relevance_accuracy=obj["relevance_accuracy"],
            ndkl=obj["ndkl"],
            bucket_size=obj["bucket_size"],
            prefix_divergences=[(int(d), float(kl)) for d, kl in obj["prefix_divergences"]],
            group_counts={GenderLabel.parse(g): c for g, c in obj["group_counts"].items()},
        )


def evaluate(ranking, corpus, bucket_size=DEFAULT_BUCKET_SIZE, policy=None):
    """Compute every metric for one ranking.

    ``group_counts`` tallies all four gender labels over the first
    ``bucket_size`` ranked records (the first result page).
    """
    bucket_size = check_bucket_size(bucket_size)
    ids = check_permutation(_ordered_ids(ranking), corpus)
    divs = prefix_divergences(ids, corpus, policy)
    top = [corpus.record(rid) for rid in ids[:bucket_size]]
    return MetricsReport(
        relevance_accuracy=bucket_relevance(ids, corpus, bucket_size),
        ndkl=ndkl_from_divergences(divs),
        bucket_size=bucket_size,
        prefix_divergences=divs,
        group_counts=group_counts(top, GroupPolicy.ALL_FOUR),
    )


CSV_FIELDS = ("query", "method", "w_r", "seed", "relevance_accuracy", "ndkl")


def csv_row(ranking, report):
    """Flat row for plotting tools; see :data:`CSV_FIELDS`."""
    return {
        "query": ranking.query,
        "method": ranking.method.value,
        "w_r": "" if ranking.weights is None else repr(ranking.weights.w_r),
        "seed": "" if ranking.seed is None else ranking.seed,
        "relevance_accuracy": repr(report.relevance_accuracy),
        "ndkl": repr(report.ndkl),
    }
