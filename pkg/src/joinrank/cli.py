"""Command-line surface: ingest, rerank, eval, emit-prompts, synth."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig, config_text, load_config
from .corpus import load_corpus, load_gold_constraints, profile_corpus
from .decompose import DecompositionCache
from .errors import JoinRankError
from .evaluate import Pipeline, evaluate, load_dataset, render_plan, rerank_one
from .relevance import load_base_scores
from .sqlprompt import emit_sql_prompt
from .synth import generate_suite, write_suite


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="corpus file or CSV directory")
    parser.add_argument("--corpus-format", default="corpus-json",
                        choices=("corpus-json", "csv-directory"))
    parser.add_argument("--config", default=None, help="INI configuration file")
    parser.add_argument("--gold-constraints", default=None,
                        help="known key/foreign-key pairs, one per line")
    parser.add_argument("--base-scores", default=None,
                        help="base retriever scores: query-id<TAB>table<TAB>score")
    parser.add_argument("--queries", default=None,
                        help="sidecar mapping query ids to query text")
    parser.add_argument("--decomp-cache", default=None,
                        help="decomposition cache file")
    parser.add_argument("--alpha", type=float, default=None,
                        help="coverage bonus per covered sub-query")
    parser.add_argument("--pool-size", type=int, default=None,
                        help="candidate pool size per query")
    parser.add_argument("--fallback-policy", default=None,
                        choices=("top-coarse", "error"))
    parser.add_argument("--k", type=int, action="append", default=None,
                        help="selection size; repeatable for eval")


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.alpha is not None:
        config.alpha = args.alpha
    if args.pool_size is not None:
        config.pool_size = args.pool_size
    if args.fallback_policy is not None:
        config.fallback_policy = args.fallback_policy
    if args.decomp_cache is not None:
        config.decomposition_cache = args.decomp_cache
    if args.k:
        config.ks = tuple(args.k)
    return config


def _load_inputs(args, config: RunConfig):
    corpus = load_corpus(args.corpus, args.corpus_format, config.type_threshold)
    gold = load_gold_constraints(args.gold_constraints, corpus) \
        if args.gold_constraints else None
    pools = None
    if args.base_scores:
        pools = load_base_scores(args.base_scores, corpus,
                                 queries_path=args.queries or None,
                                 pool_size=config.pool_size)
    return corpus, gold, pools


def _pipeline(corpus, config, gold) -> Pipeline:
    cache = DecompositionCache(config.decomposition_cache) \
        if config.decomposition_cache else None
    return Pipeline(corpus, config, gold=gold, decomposition_cache=cache)


def cmd_ingest(args) -> int:
    config = _resolve_config(args)
    corpus, gold, _ = _load_inputs(args, config)
    profiles = profile_corpus(corpus)
    summary = {
        "corpus_hash": corpus.content_hash(),
        "tables": {
            table.name: [
                {
                    "header": column.header,
                    "type": column.declared_type,
                    "uniqueness": profiles[(table.name, k)].uniqueness,
                    "row_count": profiles[(table.name, k)].row_count,
                    "distinct_count": len(profiles[(table.name, k)].distinct_values),
                }
                for k, column in enumerate(table.columns)
            ]
            for table in corpus
        },
    }
    payload = json.dumps(summary, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        print(payload)
    print(f"ingested {len(corpus)} tables"
          + (f", {len(gold)} gold constraint pairs" if gold else ""), file=sys.stderr)
    return 0


def cmd_rerank(args) -> int:
    config = _resolve_config(args)
    corpus, gold, pools = _load_inputs(args, config)
    pipeline = _pipeline(corpus, config, gold)
    k = config.ks[0] if args.k else 2
    pool = None
    if pools is not None:
        if args.query_id is None:
            raise JoinRankError("--base-scores needs --query-id to pick the pool")
        if args.query_id not in pools:
            raise JoinRankError(f"no base scores for query id {args.query_id!r}")
        pool = pools[args.query_id]
    query_text = args.query if args.query else (pool.query_text if pool else None)
    if not query_text:
        raise JoinRankError("provide --query (or --base-scores with --query-id)")
    plan = rerank_one(query_text, k, pipeline, pool=pool)
    decomposition = pipeline.decomposition_for(query_text)
    print(render_plan(plan, corpus, query_text, decomposition), end="")
    return 0


def cmd_eval(args) -> int:
    config = _resolve_config(args)
    corpus, gold, pools = _load_inputs(args, config)
    dataset = load_dataset(args.dataset, corpus, gold_constraints=gold)
    report = evaluate(dataset, config, base_pools=pools)
    report_dir = Path(args.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    (report_dir / "report.txt").write_text(report.render_text(), encoding="utf-8")
    (report_dir / "rows.tsv").write_text(report.rows_tsv(), encoding="utf-8")
    print(report.render_text(), end="")
    return 0


def cmd_emit_prompts(args) -> int:
    config = _resolve_config(args)
    corpus, gold, pools = _load_inputs(args, config)
    pipeline = _pipeline(corpus, config, gold)
    k = config.ks[0] if args.k else 5
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    jobs: list[tuple[str, str, object]] = []  # (label, query text, pool or None)
    if args.dataset:
        dataset = load_dataset(args.dataset, corpus, gold_constraints=gold)
        for query in dataset.queries:
            jobs.append((query.qid, query.text,
                         pools.get(query.qid) if pools else None))
    elif args.query:
        jobs.append(("query", args.query, None))
    else:
        raise JoinRankError("provide --query or --dataset")

    for label, text, pool in jobs:
        plan = pipeline.plan(text, k, pool=pool,
                             has_base_scores=None if pool is None else True)
        prompt = emit_sql_prompt(corpus, plan, text,
                                 external_knowledge=args.external_knowledge,
                                 row_limit=config.row_limit)
        if out_dir:
            (out_dir / f"{label}.txt").write_text(prompt, encoding="utf-8")
        else:
            print(prompt)
    if out_dir:
        print(f"wrote {len(jobs)} prompt files to {out_dir}", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    suite = generate_suite(databases=args.databases, seed=args.seed)
    paths = write_suite(suite, args.out)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def cmd_default_config(args) -> int:
    print(config_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="joinrank",
        description="Join-aware multi-table retrieval re-ranking")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate and profile a corpus")
    _add_shared(p_ingest)
    p_ingest.add_argument("--out", default=None, help="profile cache output path")
    p_ingest.set_defaults(func=cmd_ingest)

    p_rerank = sub.add_parser("rerank", help="re-rank tables for one query")
    _add_shared(p_rerank)
    p_rerank.add_argument("--query", default=None, help="query text")
    p_rerank.add_argument("--query-id", default=None,
                          help="query id when using --base-scores")
    p_rerank.set_defaults(func=cmd_rerank)

    p_eval = sub.add_parser("eval", help="run a dataset and report P/R/F1 at each k")
    _add_shared(p_eval)
    p_eval.add_argument("--dataset", required=True,
                        help="query-id<TAB>text<TAB>gold;gold lines")
    p_eval.add_argument("--report-dir", required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_emit = sub.add_parser("emit-prompts", help="emit SQL-generation prompts")
    _add_shared(p_emit)
    p_emit.add_argument("--query", default=None)
    p_emit.add_argument("--dataset", default=None)
    p_emit.add_argument("--external-knowledge", default="")
    p_emit.add_argument("--out-dir", default=None)
    p_emit.set_defaults(func=cmd_emit_prompts)

    p_synth = sub.add_parser("synth", help="generate the synthetic benchmark suite")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--databases", type=int, default=50)
    p_synth.add_argument("--seed", type=int, default=7)
    p_synth.set_defaults(func=cmd_synth)

    p_config = sub.add_parser("default-config", help="print the default configuration")
    p_config.set_defaults(func=cmd_default_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except JoinRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
