"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict (printed in the terminal summary and,
under ``-s``, inline) before asserting.
"""
import csv
import math
import time

import numpy as np
import pytest

from fairrank.cli import main
from fairrank.corpus import GroupPolicy, QueryCorpus, summary_row
from fairrank.costs import kl_divergence
from fairrank.datasets import (
    fixture_path,
    load_biologist_corpus,
    load_demo_embeddings,
    load_synthetic_corpus,
)
from fairrank.detector import AnnotationStore
from fairrank.metrics import bucket_relevance, ndkl
from fairrank.reranker import Ranking, rerank_greedy, rerank_random, rerank_relevance_only

import oracles
from conftest import make_record, oracle_records, oracle_vectors, random_corpus, random_table

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(record_property):
    def _verdict(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        record_property("verdict", line)
        print(line)
        return ok

    return _verdict


def test_c1_pure_relevance_equivalence(verdict):
    rng = np.random.default_rng(101)
    table = random_table(rng)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        policy = GroupPolicy.BINARY_MF if rng.uniform() < 0.5 else GroupPolicy.ALL_FOUR
        corpus = random_corpus(rng, int(rng.integers(1, 51)), policy)
        greedy = rerank_greedy(corpus, table, 1.0)
        if greedy.ordered_ids != rerank_relevance_only(corpus, table).ordered_ids:
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 5.0
    verdict(1, ok, f"greedy(1,0) == relevance-only on 100 corpora, "
                   f"{mismatches} mismatches, {elapsed:.2f}s (< 5s)")
    assert ok


def test_c2_greedy_step_optimality(verdict):
    rng = np.random.default_rng(202)
    table = random_table(rng)
    vecs = oracle_vectors(table)
    start = time.perf_counter()
    failures = []
    for trial in range(200):
        policy = GroupPolicy.BINARY_MF if trial % 2 else GroupPolicy.ALL_FOUR
        groups = oracles.GROUPS_BINARY if trial % 2 else oracles.GROUPS_ALL
        corpus = random_corpus(rng, int(rng.integers(1, 11)), policy)
        w_r = float(rng.choice([0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0, rng.uniform()]))
        ranking = rerank_greedy(corpus, table, w_r)
        bad = oracles.check_greedy_steps(oracle_records(corpus), ranking.ordered_ids, vecs,
                                         corpus.query, w_r, 1.0 - w_r, groups)
        if bad:
            failures.append((trial, bad[0]))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 30.0
    verdict(2, ok, f"brute-force oracle agrees on every step of 200 corpora, "
                   f"{len(failures)} disagreements, {elapsed:.2f}s (< 30s)")
    assert ok, failures[:3]


def test_c3_divergence_sanity(verdict):
    rng = np.random.default_rng(303)
    worst_self, worst_neg = 0.0, 0.0
    for _ in range(1000):
        k = int(rng.integers(2, 6))
        p = dict(enumerate(rng.dirichlet(np.ones(k))))
        q = dict(enumerate(rng.dirichlet(np.ones(k))))
        worst_self = max(worst_self, abs(kl_divergence(p, p)))
        worst_neg = min(worst_neg, kl_divergence(p, q))
    one_group = QueryCorpus("q", tuple(make_record(f"r{i}", i + 1, "female") for i in range(20)))
    ids = one_group.ids
    rng.shuffle(ids)
    one_group_ndkl = ndkl(ids, one_group)
    pair = QueryCorpus("q", (make_record("a", 1, "male"), make_record("b", 2, "female")))
    pair_ndkl = ndkl(pair.ids, pair)
    exact = 1.0 / (1.0 + 1.0 / math.log2(3))
    ok = (worst_self <= 1e-12 and worst_neg >= -1e-12 and abs(one_group_ndkl) <= 1e-12
          and abs(pair_ndkl - exact) <= 1e-6 and abs(pair_ndkl - 0.6131) <= 1e-4)
    verdict(3, ok, f"max|KL(p,p)|={worst_self:.1e}, min KL={worst_neg:.1e}, "
                   f"one-group NDKL={one_group_ndkl:.1e}, two-record NDKL={pair_ndkl:.6f}")
    assert ok


def test_c4_bucket_relevance_calibration(verdict):
    corpus = QueryCorpus("q", tuple(make_record(f"r{i:03d}", i + 1, "male") for i in range(100)))
    identity = bucket_relevance(corpus.ids, corpus, 30)
    reversal = bucket_relevance(corpus.ids[::-1], corpus, 30)
    start = time.perf_counter()
    rng = np.random.default_rng(404)
    ids = np.array(corpus.ids)
    scores = [bucket_relevance(list(ids[rng.permutation(100)]), corpus, 30)
              for _ in range(10_000)]
    elapsed = time.perf_counter() - start
    mean = float(np.mean(scores))
    expected = (3 * 30 ** 2 + 10 ** 2) / 100 ** 2
    ok = (identity == 1.0 and reversal == 0.20 and abs(mean - expected) <= 0.01
          and abs(mean - 0.28) <= 0.01 and elapsed < 10.0)
    verdict(4, ok, f"identity={identity}, reversal={reversal}, "
                   f"random mean={mean:.4f} (0.28 +/- 0.01), {elapsed:.2f}s (< 10s)")
    assert ok


def test_c5_synthetic_tradeoff(verdict):
    corpus = load_synthetic_corpus()
    table = load_demo_embeddings()
    rel = rerank_relevance_only(corpus, table)
    rel_ndkl = ndkl(rel, corpus)
    randoms = [rerank_random(corpus, seed) for seed in range(20)]
    rand_ndkl = float(np.mean([ndkl(r, corpus) for r in randoms]))
    rand_acc = float(np.mean([bucket_relevance(r, corpus, 30) for r in randoms]))
    greedy_ndkl = {w_r: ndkl(rerank_greedy(corpus, table, w_r), corpus) for w_r in (0.1, 0.3, 0.5)}
    acc_09 = bucket_relevance(rerank_greedy(corpus, table, 0.9), corpus, 30)
    ok = (all(v < rel_ndkl and v < rand_ndkl for v in greedy_ndkl.values())
          and acc_09 >= rand_acc)
    shown = ", ".join(f"w_r={w}: {v:.4f}" for w, v in greedy_ndkl.items())
    verdict(5, ok, f"greedy NDKL ({shown}) < relevance {rel_ndkl:.4f} and random mean "
                   f"{rand_ndkl:.4f}; accuracy(w_r=0.9)={acc_09:.2f} >= random {rand_acc:.3f}")
    assert ok


def test_c6_biologist_ingest(verdict, tmp_path):
    corpus = load_biologist_corpus()
    dist = corpus.distribution(GroupPolicy.ALL_FOUR).as_tuple()
    dumps = []
    for k in range(2):
        store = AnnotationStore.load(fixture_path("biologist_annotations.jsonl"))
        store.dump(tmp_path / f"replay{k}.jsonl")
        dumps.append((tmp_path / f"replay{k}.jsonl").read_bytes())
    ingests = []
    for k in range(2):
        target = tmp_path / f"corpus{k}.jsonl"
        code = main(["ingest", "--manifest", str(fixture_path("biologist_manifest.csv")),
                     "--annotations", str(fixture_path("biologist_annotations.jsonl")),
                     "--overrides", str(fixture_path("biologist_overrides.csv")),
                     "--query", "biologist", "--output", str(target)])
        ingests.append((code, target.read_bytes() if target.exists() else b""))
    ok = (dist == (0.27, 0.43, 0.11, 0.19) and dumps[0] == dumps[1]
          and ingests[0] == ingests[1] and ingests[0][0] == 0)
    verdict(6, ok, f"biologist distribution {summary_row(corpus)} "
                   f"(M={dist[0]}, F={dist[1]}, Both={dist[2]}, Uncertain={dist[3]}); "
                   f"offline replay byte-stable={dumps[0] == dumps[1] and ingests[0] == ingests[1]}")
    assert ok


def test_c7_end_to_end_sweep(verdict, tmp_path):
    start = time.perf_counter()
    code = main(["sweep", "--corpus", str(fixture_path("synthetic_engineer.jsonl")),
                 "--embeddings", str(fixture_path("demo_embeddings.txt")),
                 "--grid", "0.1,0.3,0.5,0.7,0.9", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    corpus = load_synthetic_corpus()
    with open(tmp_path / "metrics.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    worst = 0.0
    for row in rows:
        ranking = Ranking.load(tmp_path / row["ranking_file"])
        worst = max(worst, abs(float(row["ndkl"]) - ndkl(ranking, corpus)),
                    abs(float(row["relevance_accuracy"]) - bucket_relevance(ranking, corpus, 30)))
    greedy_rows = [r for r in rows if r["method"] == "greedy"]
    ok = (code == 0 and len(corpus) == 100 and len(greedy_rows) == 5 and worst <= 1e-9
          and elapsed < 5.0)
    verdict(7, ok, f"sweep over {len(corpus)} records, {len(rows)} rows, "
                   f"max recompute error {worst:.1e} (<= 1e-9), {elapsed:.2f}s (< 5s)")
    assert ok
