"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

import numbers
from collections import Counter

from .corpus import QueryCorpus
from .costs import Weights
from .exceptions import PermutationError, ValidationError


def check_corpus(corpus):
    if not isinstance(corpus, QueryCorpus):
        raise ValidationError(f"expected a QueryCorpus, got {type(corpus).__name__}")
    if len(corpus) == 0:
        raise ValidationError("corpus is empty")
    return corpus


def check_weights(w_r, w_g=None):
    """Build a :class:`Weights` from ``w_r`` and optionally ``w_g``.

    ``w_g`` defaults to ``1 - w_r``.  A ``Weights`` instance passes through.
    """
    if isinstance(w_r, Weights):
        return w_r
    if isinstance(w_r, bool) or not isinstance(w_r, numbers.Real):
        raise ValidationError(f"w_r must be a real number, got {w_r!r}")
    if w_g is None:
        return Weights.from_relevance(w_r)
    return Weights(float(w_r), float(w_g))


def check_bucket_size(bucket_size):
    if isinstance(bucket_size, bool) or not isinstance(bucket_size, numbers.Integral) \
            or bucket_size < 1:
        raise ValidationError(f"bucket_size must be a positive integer, got {bucket_size!r}")
    return int(bucket_size)


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral) or seed < 0:
        raise ValidationError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def check_permutation(ordered_ids, corpus):
    """Raise :class:`PermutationError` unless ``ordered_ids`` is a bijection on corpus ids."""
    ids = list(ordered_ids)
    dupes = sorted(i for i, c in Counter(ids).items() if c > 1)
    if dupes:
        raise PermutationError(f"ranking repeats ids: {dupes}")
    expected = set(corpus.ids)
    unknown = sorted(set(ids) - expected)
    if unknown:
        raise PermutationError(f"ranking contains ids not in corpus: {unknown}")
    missing = sorted(expected - set(ids))
    if missing:
        raise PermutationError(f"ranking is missing corpus ids: {missing}")
    return ids
