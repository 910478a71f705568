"""Brute-force reference computations, written without the package's math.

Only plain Python (``math``, ``re``) is used so these stay independent of
the numpy code paths they check.  Inputs are plain lists/dicts.
"""

import math
import re

GROUPS_ALL = ("male", "female", "both", "uncertain")
GROUPS_BINARY = ("male", "female")


def tokens_of(texts):
    out = []
    for t in texts:
        out.extend(x for x in re.split(r"[\s\-]+", t.lower()) if x)
    return out


def mean_vec(vectors_by_token, tokens):
    found = [vectors_by_token[t] for t in tokens if t in vectors_by_token]
    if not found:
        return None
    d = len(found[0])
    return [math.fsum(v[k] for v in found) / len(found) for k in range(d)]


def cosine_dist(u, v):
    dot = math.fsum(a * b for a, b in zip(u, v))
    nu = math.sqrt(math.fsum(a * a for a in u))
    nv = math.sqrt(math.fsum(b * b for b in v))
    return 1.0 - dot / (nu * nv)


def relevance(vectors_by_token, query, terms):
    qv = mean_vec(vectors_by_token, tokens_of([query]))
    lv = mean_vec(vectors_by_token, tokens_of(terms))
    if lv is None:
        return 1.0
    return cosine_dist(lv, qv)


def distribution(genders, groups):
    kept = [g for g in genders if g in groups]
    if not kept:
        return None
    return {g: kept.count(g) / len(kept) for g in groups}


def kl(p, q):
    total = 0.0
    for g in p:
        if p[g] > 0:
            total += p[g] * math.log(p[g] / q[g]) / math.log(2)
    return total


def fairness(prefix_genders, cand_gender, ref, groups):
    dist = distribution(prefix_genders + [cand_gender], groups)
    return 0.0 if dist is None else kl(dist, ref)


def ndkl(genders_in_rank_order, groups):
    """NDKL rebuilt from scratch at every depth."""
    ref = distribution(genders_in_rank_order, groups)
    n = len(genders_in_rank_order)
    z = sum(1.0 / math.log2(i + 1) for i in range(1, n + 1))
    acc = 0.0
    for i in range(1, n + 1):
        dist = distribution(genders_in_rank_order[:i], groups)
        if dist is not None:
            acc += kl(dist, ref) / math.log2(i + 1)
    return acc / z


def check_greedy_steps(records, ordered_ids, vectors_by_token, query, w_r, w_g, groups,
                       tol=1e-9):
    """Replay a greedy ranking and verify each pick.

    ``records`` is a list of dicts with ``id``, ``rank``, ``gender``,
    ``terms``.  At every step all remaining candidates are scored from
    scratch; the pick must be the lowest-rank member of the set of
    candidates within ``tol`` of the minimum.  Returns the list of
    ``(step, expected_id, got_id)`` disagreements.
    """
    by_id = {r["id"]: r for r in records}
    ref = distribution([r["gender"] for r in records], groups)
    rel = {r["id"]: relevance(vectors_by_token, query, r["terms"]) for r in records}
    remaining = set(by_id)
    prefix = []
    bad = []
    for step, got in enumerate(ordered_ids):
        costs = {}
        for rid in remaining:
            fair = fairness(prefix, by_id[rid]["gender"], ref, groups)
            costs[rid] = w_r * rel[rid] + w_g * fair
        best = min(costs.values())
        tied = [rid for rid, c in costs.items() if c <= best + tol]
        expected = min(tied, key=lambda rid: (by_id[rid]["rank"], rid))
        if expected != got:
            bad.append((step, expected, got))
        remaining.discard(got)
        prefix.append(by_id[got]["gender"])
    return bad
