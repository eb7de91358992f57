"""Exact subset-enumeration engine.

For a fixed set of selected tables the model decomposes: the join term is a
maximum-weight spanning tree over the strongest eligible column pair per table
pair, and the coverage term is solved by a greedy over per-sub-query marginal
gains (those gains are non-increasing, so the greedy is optimal under the
global coverage cap). Enumerating k-subsets in lexicographic name order with
strict improvement therefore returns the optimum with the lexicographically
smallest table set among ties.
"""

from __future__ import annotations

import time
from itertools import combinations

from ..errors import SolveTimeoutError
from .instance import CoverageMap, JoinEdge, RerankInstance, make_plan, plan_objective


def subset_tree(instance: RerankInstance,
                subset: tuple[str, ...],
                pair_edges: dict[tuple[str, str], tuple[int, int, float]],
                ) -> list[JoinEdge] | None:
    """Maximum-weight spanning tree over best column pairs, or None if disconnected.

    Kruskal over edges keyed (-score, names, columns): among maximum trees this
    picks the one whose sorted key tuple is lexicographically smallest.
    """
    if len(subset) == 1:
        return []
    keyed = []
    for i, name_a in enumerate(subset):
        for name_b in subset[i + 1 :]:
            found = pair_edges.get((name_a, name_b))
            if found is not None:
                col_a, col_b, value = found
                keyed.append((-value, name_a, name_b, col_a, col_b))
    keyed.sort()
    parent = {name: name for name in subset}

    def find(node: str) -> str:
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    tree: list[JoinEdge] = []
    for _, name_a, name_b, col_a, col_b in keyed:
        root_a, root_b = find(name_a), find(name_b)
        if root_a == root_b:
            continue
        parent[root_a] = root_b
        tree.append(((name_a, col_a), (name_b, col_b)))
        if len(tree) == len(subset) - 1:
            return tree
    return None


def subset_coverage(instance: RerankInstance, subset: tuple[str, ...],
                    best_columns: dict[tuple[int, str], tuple[float, int]],
                    ) -> CoverageMap:
    """Optimal coverage for a fixed table set.

    Per sub-query the marginal gains are (best value + alpha, next value, ...)
    in non-increasing order, so repeatedly taking the best positive head across
    sub-queries, up to the global cap, is optimal. Ties break on
    (sub-query, table, column) so every engine lands on the same assignment.
    """
    queues: list[list[tuple[float, int, str, int]]] = []
    for q in range(instance.subquery_count):
        ranked = sorted(
            (( -best_columns[(q, name)][0], name, best_columns[(q, name)][1])
             for name in subset),
            key=lambda item: (item[0], item[1], item[2]))
        queue = []
        for position, (neg_value, name, col) in enumerate(ranked):
            gain = -neg_value + (instance.alpha if position == 0 else 0.0)
            queue.append((gain, q, name, col))
        queues.append(queue)

    heads = [0] * len(queues)
    chosen: CoverageMap = {q: () for q in range(instance.subquery_count)}
    picks: dict[int, list[tuple[str, int]]] = {q: [] for q in range(instance.subquery_count)}
    for _ in range(instance.subquery_count):  # global cap equals the sub-query count
        best_key = None
        best_q = -1
        for q, queue in enumerate(queues):
            if heads[q] >= len(queue):
                continue
            gain, _, name, col = queue[heads[q]]
            key = (-gain, q, name, col)
            if best_key is None or key < best_key:
                best_key = key
                best_q = q
        if best_key is None or -best_key[0] <= 0.0:
            break
        _, q, name, col = best_key
        picks[q].append((name, col))
        heads[best_q] += 1
    for q, refs in picks.items():
        chosen[q] = tuple(sorted(refs))
    return chosen


def precompute_pair_edges(instance: RerankInstance,
                          ) -> dict[tuple[str, str], tuple[int, int, float]]:
    names = instance.table_names
    pair_edges = {}
    for i, name_a in enumerate(names):
        for name_b in names[i + 1 :]:
            best = instance.best_edge(name_a, name_b)
            if best is not None:
                pair_edges[(name_a, name_b)] = best
    return pair_edges


def precompute_best_columns(instance: RerankInstance,
                            ) -> dict[tuple[int, str], tuple[float, int]]:
    """Best covering column per (sub-query, table); ties toward lower indices."""
    best: dict[tuple[int, str], tuple[float, int]] = {}
    for q in range(instance.subquery_count):
        for name in instance.table_names:
            choice = (float("-inf"), -1)
            for col in range(instance.column_count(name)):
                value = instance.fine(q, name, col)
                if value > choice[0]:
                    choice = (value, col)
            best[(q, name)] = choice
    return best


def solve_structure(instance: RerankInstance, deadline: float | None = None):
    """Enumerate k-subsets exactly; returns the optimal plan or None if no
    subset can be connected."""
    names = instance.table_names
    pair_edges = precompute_pair_edges(instance)
    best_columns = precompute_best_columns(instance)

    # Admissible bound used to skip subsets: coarse mass plus the best possible
    # tree and coverage contributions.
    max_edge = max((v for _, _, v in pair_edges.values()), default=0.0)
    coverage_cap = sum(
        max(0.0, max(best_columns[(q, name)][0] for name in names) + instance.alpha)
        for q in range(instance.subquery_count))
    tree_cap = max(0.0, max_edge) * (instance.k - 1)
    coarse = {name: instance.coarse(name) for name in names}

    best_value = float("-inf")
    best_plan = None
    for counter, subset in enumerate(combinations(names, instance.k)):
        if deadline is not None and counter % 256 == 0 and time.monotonic() > deadline:
            raise SolveTimeoutError("subset enumeration exceeded the time limit")
        if best_plan is not None:
            bound = sum(coarse[name] for name in subset) + tree_cap + coverage_cap
            if bound <= best_value:
                continue
        tree = subset_tree(instance, subset, pair_edges)
        if tree is None:
            continue
        coverage = subset_coverage(instance, subset, best_columns)
        value = plan_objective(instance, subset, tree, coverage)
        if value > best_value:
            best_value = value
            best_plan = (subset, tuple(tree), coverage)
    if best_plan is None:
        return None
    subset, tree, coverage = best_plan
    return make_plan(instance, subset, tree, coverage)
