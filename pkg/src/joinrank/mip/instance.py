"""Re-ranking problem instances and join plans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..compatibility import CompatibilityGraph
from ..errors import InfeasibleModelError
from ..relevance import CandidatePool, RelevanceScores

# A join edge: ((table, column), (table, column)) with the smaller ref first.
JoinEdge = tuple[tuple[str, int], tuple[str, int]]
# Sub-query index -> covering (table, column) assignments, possibly empty.
CoverageMap = dict[int, tuple[tuple[str, int], ...]]


@dataclass
class RerankInstance:
    """Everything one re-ranking solve needs: pool, scores, compatibility, knobs."""

    k: int
    alpha: float
    pool: CandidatePool
    scores: RelevanceScores
    graph: CompatibilityGraph
    subquery_count: int
    edge_epsilon: float = 0.0
    term_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)  # coarse, fine, compatibility

    def validate(self) -> None:
        if self.k < 1:
            raise InfeasibleModelError(f"k must be positive, got {self.k}")
        if self.alpha < 0:
            raise InfeasibleModelError(f"alpha must be non-negative, got {self.alpha}")
        if self.k > len(self.pool):
            raise InfeasibleModelError(
                f"cannot select {self.k} tables from a pool of {len(self.pool)}")
        if self.subquery_count < 1:
            raise InfeasibleModelError("at least one sub-query is required")

    @property
    def table_names(self) -> list[str]:
        return sorted(table.name for table in self.pool.tables)

    def column_count(self, name: str) -> int:
        for table in self.pool.tables:
            if table.name == name:
                return len(table.columns)
        raise KeyError(name)

    def coarse(self, name: str) -> float:
        return self.term_weights[0] * self.scores.coarse[name]

    def fine(self, q: int, name: str, column: int) -> float:
        return self.term_weights[1] * self.scores.fine[(q, name, column)]

    def edge_score(self, a: tuple[str, int], b: tuple[str, int]) -> float:
        return self.term_weights[2] * self.graph.score(a, b)

    def edges_between(self, name_a: str, name_b: str) -> list[tuple[int, int, float]]:
        """Column pairs between two tables whose score clears the epsilon floor."""
        out = []
        for col_a in range(self.column_count(name_a)):
            for col_b in range(self.column_count(name_b)):
                value = self.edge_score((name_a, col_a), (name_b, col_b))
                if value > self.edge_epsilon:
                    out.append((col_a, col_b, value))
        return out

    def best_edge(self, name_a: str, name_b: str) -> tuple[int, int, float] | None:
        """Strongest eligible column pair; ties go to lower column indices."""
        best: tuple[int, int, float] | None = None
        for col_a, col_b, value in self.edges_between(name_a, name_b):
            if best is None or value > best[2]:
                best = (col_a, col_b, value)
        return best


@dataclass(frozen=True)
class JoinPlan:
    """Selected tables plus explicit join conditions and sub-query coverage."""

    tables: tuple[str, ...]  # descending coarse score
    joins: tuple[JoinEdge, ...]
    coverage: tuple[tuple[int, tuple[tuple[str, int], ...]], ...]
    objective_value: float
    k: int
    fallback: bool = False

    @property
    def coverage_map(self) -> CoverageMap:
        return {q: refs for q, refs in self.coverage}

    def covered_subqueries(self) -> int:
        return sum(1 for _, refs in self.coverage if refs)


def plan_objective(instance: RerankInstance, tables, joins, coverage: CoverageMap) -> float:
    """Canonical objective recomputation; fsum over sorted terms keeps it bit-stable."""
    terms = [instance.coarse(name) for name in sorted(tables)]
    for q in sorted(coverage):
        for name, column in sorted(coverage[q]):
            terms.append(instance.fine(q, name, column))
    for edge in sorted(joins):
        terms.append(instance.edge_score(*edge))
    terms.extend(instance.alpha for q in sorted(coverage) if coverage[q])
    return math.fsum(terms)


def make_plan(instance: RerankInstance, tables, joins, coverage: CoverageMap,
              fallback: bool = False) -> JoinPlan:
    """Normalize a solution into a plan: canonical ordering and recomputed objective."""
    ordered = sorted(tables, key=lambda name: (-instance.coarse(name), name))
    canonical_joins = tuple(sorted(
        (edge if edge[0] <= edge[1] else (edge[1], edge[0])) for edge in joins))
    full_coverage = {q: tuple(sorted(coverage.get(q, ())))
                     for q in range(instance.subquery_count)}
    return JoinPlan(
        tables=tuple(ordered),
        joins=canonical_joins,
        coverage=tuple(sorted(full_coverage.items())),
        objective_value=plan_objective(instance, tables, canonical_joins, full_coverage),
        k=instance.k,
        fallback=fallback,
    )


def fallback_plan(instance: RerankInstance) -> JoinPlan:
    """Top-k tables by coarse score with no joins; used when no connected
    selection exists."""
    ordered = sorted(instance.table_names, key=lambda name: (-instance.coarse(name), name))
    return make_plan(instance, ordered[: instance.k], (), {}, fallback=True)
