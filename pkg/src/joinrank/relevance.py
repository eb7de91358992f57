"""Coarse table-level and fine sub-query-to-column relevance scores."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .corpus import Table, TableCorpus, render_column_text, render_table_text
from .decompose import QueryDecomposition
from .embedding import EmbeddingProvider, cosine
from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_POOL_SIZE = 20


@dataclass
class CandidatePool:
    """Top-N candidate tables for one query, sorted by descending base score."""

    query_text: str
    candidates: tuple[tuple[Table, float], ...]
    limit: int = DEFAULT_POOL_SIZE

    @classmethod
    def build(cls, query_text: str, scored, limit: int = DEFAULT_POOL_SIZE) -> "CandidatePool":
        ordered = sorted(scored, key=lambda pair: (-pair[1], pair[0].name))
        return cls(query_text=query_text, candidates=tuple(ordered[:limit]), limit=limit)

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def tables(self) -> list[Table]:
        return [table for table, _ in self.candidates]

    @property
    def names(self) -> list[str]:
        return [table.name for table, _ in self.candidates]

    def base_score(self, name: str) -> float:
        for table, score in self.candidates:
            if table.name == name:
                return score
        raise KeyError(name)


@dataclass
class RelevanceScores:
    """coarse: table name -> score; fine: (sub-query index, table name, column) -> score."""

    coarse: dict[str, float]
    fine: dict[tuple[int, str, int], float]


def load_base_scores(path, corpus: TableCorpus, queries_path=None,
                     pool_size: int = DEFAULT_POOL_SIZE) -> dict[str, CandidatePool]:
    """Read 'query-id<TAB>table<TAB>score' lines into per-query candidate pools.

    The optional sidecar maps query ids to query text; score-file queries missing
    from it are skipped with a warning.
    """
    path = Path(path)
    query_texts: dict[str, str] = {}
    if queries_path is not None:
        for lineno, line in enumerate(
                Path(queries_path).read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise ParseError("expected 'query-id<TAB>query-text'",
                                 source=str(queries_path), line=lineno)
            query_texts[fields[0]] = fields[1]

    scored: dict[str, list[tuple[Table, float]]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError("expected 'query-id<TAB>table<TAB>score'",
                             source=str(path), line=lineno)
        qid, table_name, raw_score = fields
        if table_name not in corpus:
            raise ValidationError("base scores reference unknown table",
                                  [f"{qid}: {table_name}"])
        try:
            score = float(raw_score)
        except ValueError:
            raise ParseError(f"bad score {raw_score!r}", source=str(path), line=lineno) from None
        scored.setdefault(qid, []).append((corpus.get(table_name), score))

    pools: dict[str, CandidatePool] = {}
    for qid in sorted(scored):
        if query_texts and qid not in query_texts:
            logger.warning("query id %r has scores but no query text; skipped", qid)
            continue
        pools[qid] = CandidatePool.build(query_texts.get(qid, qid), scored[qid], pool_size)
    return pools


def pool_by_cosine(provider: EmbeddingProvider, corpus: TableCorpus, query_text: str,
                   pool_size: int = DEFAULT_POOL_SIZE, row_limit: int = 3) -> CandidatePool:
    """First-stage convenience ranking: cosine between the query and flattened tables."""
    query_vector = provider.embed(query_text)
    scored = [
        (table, cosine(query_vector, provider.embed(render_table_text(table, row_limit))))
        for table in corpus
    ]
    return CandidatePool.build(query_text, scored, pool_size)


def coarse_scores(provider: EmbeddingProvider | None, pool: CandidatePool,
                  mode: str = "pass-through", row_limit: int = 3) -> dict[str, float]:
    """Query-to-table scores: base-retriever pass-through or recomputed cosine."""
    if mode == "pass-through":
        return {table.name: score for table, score in pool.candidates}
    if mode == "cosine":
        if provider is None:
            raise ValueError("cosine mode needs an embedding provider")
        query_vector = provider.embed(pool.query_text)
        return {
            table.name: cosine(query_vector, provider.embed(render_table_text(table, row_limit)))
            for table in pool.tables
        }
    raise ValueError(f"unknown coarse score mode {mode!r}")


def fine_scores(provider: EmbeddingProvider, decomposition: QueryDecomposition,
                pool: CandidatePool) -> dict[tuple[int, str, int], float]:
    """Cosine between each sub-query and each candidate column's rendered text."""
    if not decomposition.sub_queries:
        raise ValueError("decomposition has no sub-queries")
    scores: dict[tuple[int, str, int], float] = {}
    sub_vectors = [provider.embed(sq.text) for sq in decomposition.sub_queries]
    for table in pool.tables:
        for k in range(len(table.columns)):
            column_vector = provider.embed(render_column_text(table, k))
            for q, sub_vector in enumerate(sub_vectors):
                scores[(q, table.name, k)] = cosine(sub_vector, column_vector)
    return scores
