"""Exhaustive enumeration oracle used to verify the solver.

Searches the same space as the model by brute force: every k-subset of the
pool, every set of k-1 table pairs whose edges connect the subset (checked by
graph search, not flow), and every coverage assignment within the per-table
and global caps. Per sub-query assignments are enumerated exhaustively and
combined exactly across sub-queries through the only coupling, the global
count cap. Kept deliberately separate from the production engines.
"""

from __future__ import annotations

import math
from itertools import combinations, product

from ..errors import OracleSizeError
from .instance import CoverageMap, JoinEdge, RerankInstance, make_plan, plan_objective

ORACLE_MAX_TABLES = 12


def _connected(subset: tuple[str, ...], pairs) -> bool:
    adjacency: dict[str, list[str]] = {name: [] for name in subset}
    for name_a, name_b in pairs:
        adjacency[name_a].append(name_b)
        adjacency[name_b].append(name_a)
    seen = {subset[0]}
    stack = [subset[0]]
    while stack:
        for neighbor in adjacency[stack.pop()]:
            if neighbor not in seen:
                seen.add(neighbor)
                stack.append(neighbor)
    return len(seen) == len(subset)


def _best_tree(instance: RerankInstance, subset: tuple[str, ...]) -> list[JoinEdge] | None:
    """Try every set of k-1 table pairs; keep the connected one with maximum
    total score, ties toward the lexicographically smallest edge keys."""
    if len(subset) == 1:
        return []
    pair_best: dict[tuple[str, str], tuple[float, int, int]] = {}
    for i, name_a in enumerate(subset):
        for name_b in subset[i + 1 :]:
            best = None
            for col_a, col_b, value in instance.edges_between(name_a, name_b):
                if best is None or value > best[0]:
                    best = (value, col_a, col_b)
            if best is not None:
                pair_best[(name_a, name_b)] = best
    winner: tuple[float, tuple, tuple[JoinEdge, ...]] | None = None
    for chosen in combinations(sorted(pair_best), len(subset) - 1):
        if not _connected(subset, chosen):
            continue
        edges = []
        keys = []
        for name_a, name_b in chosen:
            value, col_a, col_b = pair_best[(name_a, name_b)]
            edges.append(((name_a, col_a), (name_b, col_b)))
            keys.append((-value, name_a, name_b, col_a, col_b))
        total = math.fsum(sorted(-key[0] for key in keys))
        candidate = (total, tuple(sorted(keys)), tuple(edges))
        if winner is None or total > winner[0] or \
                (total == winner[0] and candidate[1] < winner[1]):
            winner = candidate
    return list(winner[2]) if winner is not None else None


def _coverage_options(instance: RerankInstance, subset: tuple[str, ...], q: int):
    """For one sub-query: the best assignment for every possible pick count."""
    cap = min(len(subset), instance.subquery_count)
    options: list[tuple[float, tuple] | None] = [None] * (cap + 1)
    options[0] = (0.0, ())
    for count in range(1, cap + 1):
        best = None
        for tables_chosen in combinations(subset, count):
            ranges = [range(instance.column_count(name)) for name in tables_chosen]
            for cols in product(*ranges):
                refs = tuple(sorted(zip(tables_chosen, cols)))
                value = math.fsum(
                    [instance.fine(q, name, col) for name, col in refs] + [instance.alpha])
                if best is None or value > best[0] or (value == best[0] and refs < best[1]):
                    best = (value, refs)
        options[count] = best
    return options


def _best_coverage(instance: RerankInstance, subset: tuple[str, ...]) -> CoverageMap:
    nq = instance.subquery_count
    per_query = [_coverage_options(instance, subset, q) for q in range(nq)]
    winner = None
    for counts in product(*(range(len(options)) for options in per_query)):
        if sum(counts) > nq:
            continue
        value = math.fsum(per_query[q][counts[q]][0] for q in range(nq))
        keys = tuple(sorted(
            (q, name, col)
            for q in range(nq) for name, col in per_query[q][counts[q]][1]))
        if winner is None or value > winner[0] or (value == winner[0] and keys < winner[1]):
            winner = (value, keys, counts)
    coverage: CoverageMap = {q: () for q in range(nq)}
    for q in range(nq):
        coverage[q] = per_query[q][winner[2][q]][1]
    return coverage


def oracle_solve(instance: RerankInstance):
    """Global maximum by exhaustive search; refuses pools above the size guard."""
    instance.validate()
    if len(instance.pool) > ORACLE_MAX_TABLES:
        raise OracleSizeError(
            f"oracle refuses pools above {ORACLE_MAX_TABLES} tables "
            f"(got {len(instance.pool)})")
    best_value = float("-inf")
    best = None
    for subset in combinations(instance.table_names, instance.k):
        tree = _best_tree(instance, subset)
        if tree is None:
            continue
        coverage = _best_coverage(instance, subset)
        value = plan_objective(instance, subset, tree, coverage)
        if value > best_value:
            best_value = value
            best = (subset, tree, coverage)
    if best is None:
        return None
    return make_plan(instance, best[0], best[1], best[2])
