"""Command-line front end: ingest, rerank, evaluate, sweep.

Exit codes: 0 success, 2 validation error, 3 runtime or provider error.

Settings resolve as command-line flags, then the ``--config`` document
(YAML or JSON, keys named like the long flags with ``_`` for ``-``), then
built-in defaults.
"""

import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .corpus import GroupPolicy, parse_corpus, serialize_corpus, summary_row
from .detector import (
    DEFAULT_MIN_CONFIDENCE,
    AnnotationStore,
    DetectorClient,
    HttpDetectionProvider,
    build_corpus,
    load_manifest,
    load_overrides,
)
from .embeddings import load_embeddings
from .exceptions import FairRankError, ValidationError
from .metrics import CSV_FIELDS, DEFAULT_BUCKET_SIZE, csv_row, evaluate
from .reranker import (
    DEFAULT_WEIGHT_GRID,
    Method,
    Ranking,
    rerank_greedy,
    rerank_random,
    rerank_relevance_only,
    sweep,
)
from .validation import check_bucket_size, check_seed, check_weights

logger = logging.getLogger("fairrank")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3

DEFAULTS = {
    "grid": list(DEFAULT_WEIGHT_GRID),
    "seeds": [],
    "bucket_size": DEFAULT_BUCKET_SIZE,
    "policy": "all4",
    "min_confidence": DEFAULT_MIN_CONFIDENCE,
    "weights": 0.5,
    "seed": 0,
    "out": ".",
}


@dataclass
class RunConfig:
    corpus: Optional[str] = None
    embeddings: Optional[str] = None
    grid: list = field(default_factory=lambda: list(DEFAULT_WEIGHT_GRID))
    seeds: list = field(default_factory=list)
    bucket_size: int = DEFAULT_BUCKET_SIZE
    policy: GroupPolicy = GroupPolicy.ALL_FOUR
    min_confidence: float = DEFAULT_MIN_CONFIDENCE
    out: str = "."

    def validate(self, need=("corpus", "embeddings")):
        for name in need:
            path = getattr(self, name)
            if path is None:
                raise ValidationError(f"--{name} is required")
            if not os.path.exists(path):
                raise ValidationError(f"{name} file not found: {path}")
        if not self.grid:
            raise ValidationError("weight grid is empty")
        self.grid = [check_weights(w).w_r for w in self.grid]
        self.seeds = [check_seed(s) for s in self.seeds]
        self.bucket_size = check_bucket_size(self.bucket_size)
        self.policy = GroupPolicy.parse(self.policy)
        if not (0.0 <= float(self.min_confidence) <= 1.0):
            raise ValidationError(f"min_confidence {self.min_confidence} outside [0, 1]")
        return self


def _float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ValidationError(f"invalid config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"config {path} must be a mapping")
    doc = {k.replace("-", "_"): v for k, v in doc.items()}
    for key in ("grid",):
        if isinstance(doc.get(key), str):
            doc[key] = _float_list(doc[key])
    if isinstance(doc.get("seeds"), str):
        doc["seeds"] = _int_list(doc["seeds"])
    return doc


def _setting(args, config, name):
    val = getattr(args, name, None)
    if val is not None:
        return val
    if name in config:
        return config[name]
    return DEFAULTS.get(name)


def _run_config(args):
    config = _load_config(args.config)
    return RunConfig(
        corpus=_setting(args, config, "corpus"),
        embeddings=_setting(args, config, "embeddings"),
        grid=list(_setting(args, config, "grid")),
        seeds=list(_setting(args, config, "seeds")),
        bucket_size=_setting(args, config, "bucket_size"),
        policy=_setting(args, config, "policy"),
        min_confidence=_setting(args, config, "min_confidence"),
        out=_setting(args, config, "out"),
    ), config


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(args):
    config = _load_config(args.config)
    policy = GroupPolicy.parse(_setting(args, config, "policy"))
    min_conf = float(_setting(args, config, "min_confidence"))
    for name in ("manifest", "annotations"):
        if not os.path.exists(getattr(args, name)):
            raise ValidationError(f"{name} file not found: {getattr(args, name)}")
    manifest = load_manifest(args.manifest)
    overrides = load_overrides(args.overrides) if args.overrides else None
    provider = None
    if args.provider_url:
        store = AnnotationStore.load(args.annotations, create=True)
        provider = HttpDetectionProvider(args.provider_url, adapter=args.provider_adapter)
    else:
        store = AnnotationStore.load(args.annotations)
    client = DetectorClient(store, provider=provider)
    corpus = build_corpus(manifest, client, args.query, policy, overrides=overrides,
                          min_confidence=min_conf)
    out = args.output or os.path.join(_setting(args, config, "out"), f"{_slug(args.query)}.jsonl")
    _write(out, serialize_corpus(corpus))
    print(f"{corpus.query}\tM/F/Both/Uncertain %\t{summary_row(corpus)}\tn={len(corpus)}")
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def _slug(text):
    return "_".join(text.lower().split()) or "corpus"


def _make_ranking(method, corpus, table, weights, seed, policy):
    if method is Method.GREEDY:
        return rerank_greedy(corpus, table, check_weights(weights), policy=policy)
    if method is Method.RELEVANCE_ONLY:
        return rerank_relevance_only(corpus, table)
    return rerank_random(corpus, check_seed(seed))


def _ranking_name(ranking):
    if ranking.method is Method.GREEDY:
        return f"greedy_wr{ranking.weights.w_r:g}"
    if ranking.method is Method.RANDOM:
        return f"random_seed{ranking.seed}"
    return "relevance"


def cmd_rerank(args):
    cfg, config = _run_config(args)
    method = Method(args.method)
    need = ("corpus",) if method is Method.RANDOM else ("corpus", "embeddings")
    cfg.validate(need)
    weights = float(_setting(args, config, "weights"))
    seed = _setting(args, config, "seed")
    corpus = parse_corpus(cfg.corpus, cfg.policy)
    table = load_embeddings(cfg.embeddings) if method is not Method.RANDOM else None
    ranking = _make_ranking(method, corpus, table, weights, seed, cfg.policy)
    out = args.output or os.path.join(cfg.out, f"ranking_{_ranking_name(ranking)}.json")
    _write(out, ranking.to_json())
    print(out)
    return EXIT_OK


def cmd_evaluate(args):
    cfg, _ = _run_config(args)
    cfg.validate(("corpus",))
    if not os.path.exists(args.ranking):
        raise ValidationError(f"ranking file not found: {args.ranking}")
    corpus = parse_corpus(cfg.corpus, cfg.policy)
    ranking = Ranking.load(args.ranking)
    if ranking.query != corpus.query:
        raise ValidationError(
            f"ranking query {ranking.query!r} does not match corpus query {corpus.query!r}"
        )
    report = evaluate(ranking, corpus, cfg.bucket_size, cfg.policy)
    out = args.output or os.path.join(cfg.out, Path(args.ranking).stem + ".metrics.json")
    _write(out, report.to_json())
    print(f"relevance_accuracy={report.relevance_accuracy:.6g}\tndkl={report.ndkl:.6g}\t{out}")
    return EXIT_OK


def cmd_sweep(args):
    cfg, _ = _run_config(args)
    cfg.validate()
    corpus = parse_corpus(cfg.corpus, cfg.policy)
    table = load_embeddings(cfg.embeddings)
    entries = sweep(corpus, table, cfg.grid, cfg.seeds, cfg.bucket_size, cfg.policy,
                    errors="record")
    out = Path(cfg.out)
    rows = []
    failed = 0
    for e in entries:
        if e.error is not None:
            failed += 1
            rows.append({"query": corpus.query, "method": e.spec.method.value,
                         "w_r": "" if e.spec.w_r is None else repr(e.spec.w_r),
                         "seed": "" if e.spec.seed is None else e.spec.seed,
                         "relevance_accuracy": "", "ndkl": "", "error": e.error})
            continue
        name = e.spec.name
        _write(out / "rankings" / f"{name}.json", e.ranking.to_json())
        _write(out / "reports" / f"{name}.json", e.report.to_json())
        row = csv_row(e.ranking, e.report)
        row["ranking_file"] = f"rankings/{name}.json"
        row["error"] = ""
        rows.append(row)

    out.mkdir(parents=True, exist_ok=True)
    fields = list(CSV_FIELDS) + ["ranking_file", "error"]
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n", restval="")
        writer.writeheader()
        writer.writerows(rows)
    _write_plot_data(out / "plot_data.csv", [e for e in entries if e.error is None])
    print(f"{len(entries) - failed}/{len(entries)} runs written to {out}")
    if failed:
        print(f"error: {failed} run(s) failed; see metrics.csv", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _write_plot_data(path, entries):
    """One point per greedy weight, one for relevance-only, one for the random mean."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "w_r", "relevance_accuracy", "ndkl"])
        randoms = []
        for e in entries:
            if e.spec.method is Method.RANDOM:
                randoms.append(e.report)
            elif e.spec.method is Method.GREEDY:
                w.writerow([e.spec.name, repr(e.spec.w_r),
                            repr(e.report.relevance_accuracy), repr(e.report.ndkl)])
            else:
                w.writerow(["relevance", "", repr(e.report.relevance_accuracy),
                            repr(e.report.ndkl)])
        if randoms:
            k = len(randoms)
            w.writerow([f"random_mean_of_{k}", "",
                        repr(sum(r.relevance_accuracy for r in randoms) / k),
                        repr(sum(r.ndkl for r in randoms) / k)])


# ---------------------------------------------------------------------------
# parser


def _common(p, corpus=True, embeddings=True):
    p.add_argument("--config", help="YAML/JSON file with default settings")
    if corpus:
        p.add_argument("--corpus", help="corpus JSON-lines file")
    if embeddings:
        p.add_argument("--embeddings", help="text word-vector file")
    p.add_argument("--policy", choices=["all4", "binary"], default=None,
                   help="group set for distributions (default all4)")
    p.add_argument("--out", default=None, help="output directory (default .)")


def build_parser():
    parser = argparse.ArgumentParser(prog="fairrank", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="join a manifest with detector output into a corpus")
    _common(p, corpus=False, embeddings=False)
    p.add_argument("--manifest", required=True, help="CSV with id,original_rank,image_ref")
    p.add_argument("--annotations", required=True, help="annotation store (JSON lines)")
    p.add_argument("--overrides", help="CSV with id,gender crowd labels")
    p.add_argument("--query", required=True)
    p.add_argument("--min-confidence", type=float, default=None)
    p.add_argument("--provider-url", help="live detection service; misses are cached to --annotations")
    p.add_argument("--provider-adapter", choices=["rekognition", "generic"], default="rekognition")
    p.add_argument("--output", help="corpus file (default OUT/<query>.jsonl)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("rerank", help="produce one ranking")
    _common(p)
    p.add_argument("--method", choices=[m.value for m in Method], default="greedy")
    p.add_argument("--weights", type=float, default=None, help="w_r; w_g = 1 - w_r")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", help="ranking file (default OUT/ranking_<run>.json)")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("evaluate", help="score a ranking file")
    _common(p, embeddings=False)
    p.add_argument("--ranking", required=True)
    p.add_argument("--bucket-size", type=int, default=None)
    p.add_argument("--output", help="metrics file (default OUT/<ranking>.metrics.json)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="weight grid plus baselines, with metrics CSV")
    _common(p)
    p.add_argument("--grid", type=_float_list, default=None,
                   help="comma-separated w_r values (default 0.1,0.3,0.5,0.7,0.9)")
    p.add_argument("--seeds", type=_int_list, default=None, help="random-baseline seeds")
    p.add_argument("--bucket-size", type=int, default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FairRankError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
