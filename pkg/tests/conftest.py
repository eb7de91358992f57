"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import random

import numpy as np
import pytest

from joinrank.compatibility import CompatibilityGraph, compute_best_pairs, pair_key
from joinrank.corpus import Column, Table, TableCorpus
from joinrank.embedding import EmbeddingProvider
from joinrank.mip import RerankInstance
from joinrank.relevance import CandidatePool, RelevanceScores


def make_table(name: str, columns: list[tuple[str, str, list[str]]]) -> Table:
    return Table(name=name, columns=[
        Column(header=h, declared_type=t, values=tuple(vals)) for h, t, vals in columns
    ])


def students_pair() -> tuple[Table, Table]:
    """Two-table example: a roster keyed by student id and an assignment table
    where student ids repeat (city is constant on both sides)."""
    roster = make_table("roster", [
        ("student_id", "integer", ["1", "2"]),
        ("city", "text", ["BOS", "BOS"]),
    ])
    assignments = make_table("assignments", [
        ("teacher_id", "integer", ["1", "2", "2"]),
        ("student_id", "integer", ["1", "1", "2"]),
        ("city", "text", ["BOS", "BOS", "BOS"]),
    ])
    return roster, assignments


class StubProvider(EmbeddingProvider):
    """Maps exact texts to fixed vectors; unknown text raises."""

    kind = "stub"

    def __init__(self, vectors: dict[str, list[float]], dimension: int = 2):
        super().__init__(dimension)
        self._vectors = {k: np.asarray(v, dtype=np.float32) for k, v in vectors.items()}

    def _resolve(self, text: str) -> np.ndarray:
        if text not in self._vectors:
            raise KeyError(f"stub provider has no vector for {text!r}")
        return self._vectors[text]


def random_instance(rng: random.Random, n_tables: int | None = None, max_cols: int = 4,
                    max_subqueries: int = 3, k: int | None = None,
                    alpha: float | None = None, edge_density: float = 0.55,
                    discrete: bool = False) -> RerankInstance:
    """Synthetic re-ranking instance with direct score injection (no embeddings).

    `discrete` draws every score from a tiny value set so exact ties are common,
    stressing the tie-breaking agreement between engines.
    """
    n = n_tables if n_tables is not None else rng.randint(2, 8)
    names = [f"t{i:02d}" for i in range(n)]
    tables = []
    for name in names:
        cols = rng.randint(1, max_cols)
        tables.append(Table(name, [Column(f"c{j}", "text", ()) for j in range(cols)]))

    def draw(low: float, high: float, choices) -> float:
        return rng.choice(choices) if discrete else rng.uniform(low, high)

    pool = CandidatePool.build(
        "synthetic query",
        [(t, draw(0.0, 1.0, [0.3, 0.6])) for t in tables],
        limit=n)
    coarse = {table.name: score for table, score in pool.candidates}
    nq = rng.randint(1, max_subqueries)
    fine = {
        (q, table.name, j): draw(-0.3, 1.0, [0.0, 0.5, 1.0])
        for q in range(nq) for table in tables for j in range(len(table.columns))
    }
    scores = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() >= edge_density:
                continue
            cols_i = len(tables[i].columns)
            cols_j = len(tables[j].columns)
            pairs = [(ka, kb) for ka in range(cols_i) for kb in range(cols_j)]
            for ka, kb in rng.sample(pairs, min(len(pairs), rng.randint(1, 3))):
                scores[pair_key((names[i], ka), (names[j], kb))] = \
                    draw(0.05, 1.5, [0.5, 1.0])
    graph = CompatibilityGraph(tuple(names), scores, compute_best_pairs(scores))
    return RerankInstance(
        k=k if k is not None else rng.randint(1, min(3, n)),
        alpha=alpha if alpha is not None else rng.choice([0.0, 0.5, 1.0, 5.0]),
        pool=pool,
        scores=RelevanceScores(coarse=coarse, fine=fine),
        graph=graph,
        subquery_count=nq,
    )


def instance_from_parts(names_cols: dict[str, int], coarse: dict[str, float],
                        edges: dict[tuple[tuple[str, int], tuple[str, int]], float],
                        fine: dict[tuple[int, str, int], float] | None = None,
                        k: int = 2, alpha: float = 0.0,
                        subquery_count: int = 1) -> RerankInstance:
    """Hand-built instance for targeted solver tests."""
    tables = [Table(name, [Column(f"c{j}", "text", ()) for j in range(cols)])
              for name, cols in names_cols.items()]
    pool = CandidatePool.build("handmade", [(t, coarse[t.name]) for t in tables],
                               limit=len(tables))
    full_fine = {
        (q, name, j): 0.0
        for q in range(subquery_count)
        for name, cols in names_cols.items() for j in range(cols)
    }
    if fine:
        full_fine.update(fine)
    scores = {pair_key(a, b): value for (a, b), value in edges.items()}
    graph = CompatibilityGraph(tuple(sorted(names_cols)), scores,
                               compute_best_pairs(scores))
    return RerankInstance(k=k, alpha=alpha, pool=pool,
                          scores=RelevanceScores(coarse=coarse, fine=full_fine),
                          graph=graph, subquery_count=subquery_count)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240817)
