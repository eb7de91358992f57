"""End-to-end orchestration: datasets, per-query re-ranking, and retrieval metrics."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .compatibility import PairKey, build_compatibility_graph, compute_best_pairs
from .config import RunConfig, make_decomposition_source, make_embedding_provider
from .corpus import (ColumnProfile, GoldConstraintSet, TableCorpus, profile_corpus)
from .decompose import (DecompositionCache, QueryDecomposition, decompose_query,
                        manual_decomposition)
from .embedding import EmbeddingProvider
from .errors import InfeasibleModelError, JoinRankError, ParseError, ValidationError
from .mip import JoinPlan, RerankInstance, build_model, solve
from .relevance import (CandidatePool, RelevanceScores, coarse_scores, fine_scores,
                        pool_by_cosine)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalQuery:
    qid: str
    text: str
    gold: frozenset[str]


@dataclass
class EvalDataset:
    queries: list[EvalQuery]
    corpus: TableCorpus
    gold_constraints: GoldConstraintSet | None = None


def load_dataset(path, corpus: TableCorpus,
                 gold_constraints: GoldConstraintSet | None = None) -> EvalDataset:
    """Read 'query-id<TAB>text<TAB>gold1;gold2;...' lines; gold sets need >= 2 tables."""
    queries = []
    problems = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        if not line.strip():
            continue
        fields_ = line.split("\t")
        if len(fields_) < 3:
            raise ParseError("expected 'query-id<TAB>text<TAB>gold;gold'",
                             source=str(path), line=lineno)
        qid, text, gold_raw = fields_[0], fields_[1], fields_[2]
        gold = frozenset(g.strip() for g in gold_raw.split(";") if g.strip())
        missing = [g for g in sorted(gold) if g not in corpus]
        if missing:
            problems.append(f"{qid}: unknown gold tables {missing}")
            continue
        if len(gold) < 2:
            problems.append(f"{qid}: gold set has fewer than 2 tables")
            continue
        queries.append(EvalQuery(qid=qid, text=text, gold=gold))
    if problems:
        raise ValidationError("dataset validation failed", problems)
    return EvalDataset(queries=queries, corpus=corpus, gold_constraints=gold_constraints)


def precision_recall_f1(predicted, gold) -> tuple[float, float, float]:
    predicted, gold = set(predicted), set(gold)
    hits = len(predicted & gold)
    precision = hits / len(predicted) if predicted else 0.0
    recall = hits / len(gold) if gold else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class QueryResult:
    qid: str
    k: int
    predicted: tuple[str, ...]
    gold: tuple[str, ...]
    precision: float
    recall: float
    f1: float
    fallback: bool
    objective: float
    error: str = ""


@dataclass
class RetrievalReport:
    ks: tuple[int, ...]
    rows: list[QueryResult]
    macro: dict[int, tuple[float, float, float]] = field(default_factory=dict)
    micro: dict[int, tuple[float, float, float]] = field(default_factory=dict)
    fallbacks: dict[int, int] = field(default_factory=dict)
    failures: int = 0

    def render_text(self) -> str:
        lines = ["retrieval report (macro-averaged primary, micro secondary)"]
        lines.append(f"queries: {len({row.qid for row in self.rows})}")
        for k in self.ks:
            p, r, f1 = self.macro[k]
            mp, mr, mf1 = self.micro[k]
            lines.append(
                f"k={k} macro P={p:.4f} R={r:.4f} F1={f1:.4f} | "
                f"micro P={mp:.4f} R={mr:.4f} F1={mf1:.4f} | "
                f"fallbacks={self.fallbacks[k]}")
        lines.append(f"failed queries: {self.failures}")
        return "\n".join(lines) + "\n"

    def rows_tsv(self) -> str:
        lines = ["qid\tk\tpredicted\tgold\tprecision\trecall\tf1\tfallback\tobjective\terror"]
        for row in self.rows:
            lines.append("\t".join([
                row.qid, str(row.k), ";".join(row.predicted), ";".join(row.gold),
                f"{row.precision:.6f}", f"{row.recall:.6f}", f"{row.f1:.6f}",
                "1" if row.fallback else "0", f"{row.objective:.9f}", row.error,
            ]))
        return "\n".join(lines) + "\n"


def aggregate(rows: list[QueryResult], ks) -> RetrievalReport:
    """Order-independent merge: rows are sorted, then macro and micro averages taken."""
    ordered = sorted(rows, key=lambda row: (row.qid, row.k))
    report = RetrievalReport(ks=tuple(ks), rows=ordered)
    for k in ks:
        at_k = [row for row in ordered if row.k == k]
        count = len(at_k) or 1
        report.macro[k] = (
            sum(r.precision for r in at_k) / count,
            sum(r.recall for r in at_k) / count,
            sum(r.f1 for r in at_k) / count,
        )
        hits = sum(len(set(r.predicted) & set(r.gold)) for r in at_k)
        total_predicted = sum(len(r.predicted) for r in at_k)
        total_gold = sum(len(r.gold) for r in at_k)
        micro_p = hits / total_predicted if total_predicted else 0.0
        micro_r = hits / total_gold if total_gold else 0.0
        micro_f1 = 0.0 if micro_p + micro_r == 0 \
            else 2 * micro_p * micro_r / (micro_p + micro_r)
        report.micro[k] = (micro_p, micro_r, micro_f1)
        report.fallbacks[k] = sum(1 for r in at_k if r.fallback)
    report.failures = len({row.qid for row in ordered if row.error})
    return report


def _rescale(values: dict) -> dict:
    if not values:
        return values
    low, high = min(values.values()), max(values.values())
    if high == low:
        return {key: 0.0 for key in values}
    return {key: (value - low) / (high - low) for key, value in values.items()}


class Pipeline:
    """Shared per-corpus state: provider, profiles, caches, configuration."""

    def __init__(self, corpus: TableCorpus, config: RunConfig,
                 provider: EmbeddingProvider | None = None,
                 gold: GoldConstraintSet | None = None,
                 decomposition_client=None,
                 decomposition_cache: DecompositionCache | None = None):
        self.corpus = corpus
        self.config = config
        self.provider = provider or make_embedding_provider(config)
        self.gold = gold
        if decomposition_client is None and decomposition_cache is None:
            decomposition_client, decomposition_cache = make_decomposition_source(config)
        self.decomposition_client = decomposition_client
        self.decomposition_cache = decomposition_cache
        self.profiles: dict[tuple[str, int], ColumnProfile] = profile_corpus(corpus)
        self.pair_cache: dict[PairKey, float] = {}

    def decomposition_for(self, query_text: str) -> QueryDecomposition:
        if self.decomposition_client is None:
            if self.decomposition_cache is not None:
                hit = self.decomposition_cache.get(query_text)
                if hit is not None:
                    return hit
            return manual_decomposition(query_text)
        return decompose_query(self.decomposition_client, self.decomposition_cache,
                               query_text)

    def pool_for(self, query_text: str) -> CandidatePool:
        return pool_by_cosine(self.provider, self.corpus, query_text,
                              self.config.pool_size, self.config.row_limit)

    def instance_for(self, pool: CandidatePool, decomposition: QueryDecomposition,
                     k: int, has_base_scores: bool) -> RerankInstance:
        config = self.config
        mode = config.coarse_source
        if mode == "auto":
            mode = "pass-through" if has_base_scores else "cosine"
        coarse = coarse_scores(self.provider, pool, mode, config.row_limit)
        fine = fine_scores(self.provider, decomposition, pool)
        if config.rescale_terms:
            coarse = _rescale(coarse)
            fine = _rescale(fine)
        graph = build_compatibility_graph(pool, self.profiles, self.provider,
                                          gold=self.gold,
                                          weights=config.segment_weights,
                                          cache=self.pair_cache)
        if config.rescale_terms and graph.scores:
            graph.scores = _rescale(graph.scores)
            graph.best_pairs = compute_best_pairs(graph.scores)
        return RerankInstance(
            k=min(k, len(pool)),
            alpha=config.alpha,
            pool=pool,
            scores=RelevanceScores(coarse=coarse, fine=fine),
            graph=graph,
            subquery_count=len(decomposition.sub_queries),
            edge_epsilon=config.edge_epsilon,
            term_weights=config.term_weights,
        )

    def plan(self, query_text: str, k: int, pool: CandidatePool | None = None,
             has_base_scores: bool | None = None) -> JoinPlan:
        if pool is None:
            pool = self.pool_for(query_text)
            if has_base_scores is None:
                has_base_scores = False
        elif has_base_scores is None:
            has_base_scores = True
        if len(pool) == 0:
            return JoinPlan(tables=(), joins=(), coverage=(), objective_value=0.0,
                            k=k, fallback=True)
        decomposition = self.decomposition_for(query_text)
        instance = self.instance_for(pool, decomposition, k, has_base_scores)
        model = build_model(instance)
        plan = solve(model, time_limit=self.config.time_limit_seconds,
                     engine=self.config.engine)
        if plan.fallback and self.config.fallback_policy == "error":
            raise InfeasibleModelError(
                f"no connected selection of {instance.k} tables for {query_text!r}")
        return plan


def evaluate(dataset: EvalDataset, config: RunConfig,
             base_pools: dict[str, CandidatePool] | None = None,
             pipeline: Pipeline | None = None) -> RetrievalReport:
    """Re-rank every dataset query at every configured k and score against gold.

    Hard per-query failures are recorded and scored as empty predictions; the
    run never aborts.
    """
    if pipeline is None:
        pipeline = Pipeline(dataset.corpus, config, gold=dataset.gold_constraints)

    def run_query(query: EvalQuery) -> list[QueryResult]:
        rows = []
        pool = base_pools.get(query.qid) if base_pools else None
        for k in config.ks:
            try:
                plan = pipeline.plan(query.text, k, pool=pool,
                                     has_base_scores=pool is not None)
                p, r, f1 = precision_recall_f1(plan.tables, query.gold)
                rows.append(QueryResult(
                    qid=query.qid, k=k, predicted=plan.tables,
                    gold=tuple(sorted(query.gold)), precision=p, recall=r, f1=f1,
                    fallback=plan.fallback, objective=plan.objective_value))
            except JoinRankError as exc:
                logger.warning("query %s failed at k=%d: %s", query.qid, k, exc)
                rows.append(QueryResult(
                    qid=query.qid, k=k, predicted=(),
                    gold=tuple(sorted(query.gold)), precision=0.0, recall=0.0,
                    f1=0.0, fallback=False, objective=0.0, error=str(exc)))
        return rows

    all_rows: list[QueryResult] = []
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            for rows in executor.map(run_query, dataset.queries):
                all_rows.extend(rows)
    else:
        for query in dataset.queries:
            all_rows.extend(run_query(query))
    return aggregate(all_rows, config.ks)


def baseline_report(dataset: EvalDataset, pools: dict[str, CandidatePool],
                    ks) -> RetrievalReport:
    """Metrics for the base ranking alone: top-k of each pool by base score."""
    rows = []
    for query in dataset.queries:
        pool = pools.get(query.qid)
        names = pool.names if pool else []
        for k in ks:
            predicted = tuple(names[:k])
            p, r, f1 = precision_recall_f1(predicted, query.gold)
            rows.append(QueryResult(
                qid=query.qid, k=k, predicted=predicted,
                gold=tuple(sorted(query.gold)), precision=p, recall=r, f1=f1,
                fallback=False, objective=0.0))
    return aggregate(rows, ks)


def rerank_one(query_text: str, k: int, pipeline: Pipeline,
               pool: CandidatePool | None = None) -> JoinPlan:
    """Single-query entry point used by the command line."""
    return pipeline.plan(query_text, k, pool=pool,
                         has_base_scores=None if pool is None else True)


def render_plan(plan: JoinPlan, corpus: TableCorpus, query_text: str,
                decomposition: QueryDecomposition | None = None) -> str:
    """Human-readable plan document."""
    lines = [f"query: {query_text}",
             f"k: {plan.k}",
             f"objective: {plan.objective_value:.9f}",
             f"fallback: {'yes' if plan.fallback else 'no'}",
             "tables:"]
    for position, name in enumerate(plan.tables, start=1):
        lines.append(f"  {position}. {name}")
    lines.append("joins:")
    if not plan.joins:
        lines.append("  (none)")
    for (name_a, col_a), (name_b, col_b) in plan.joins:
        header_a = corpus.get(name_a).columns[col_a].header
        header_b = corpus.get(name_b).columns[col_b].header
        lines.append(f"  {name_a}.{header_a} = {name_b}.{header_b}")
    lines.append("coverage:")
    for q, refs in plan.coverage:
        label = decomposition.sub_queries[q].raw if decomposition else f"sub-query {q}"
        if refs:
            rendered = ", ".join(
                f"{name}.{corpus.get(name).columns[col].header}" for name, col in refs)
        else:
            rendered = "(uncovered)"
        lines.append(f"  [{q}] {label} -> {rendered}")
    return "\n".join(lines) + "\n"
