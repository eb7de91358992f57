"""Independent checks on solver output: structural rules, graph-search
connectivity, and a max-flow recomputation on the selected subgraph."""

from __future__ import annotations

import networkx as nx

from .instance import JoinPlan, RerankInstance

SOURCE = ("__source__",)
SINK = ("__sink__",)


def connectivity_ok(tables, joins) -> bool:
    """Plain graph search over the selected join edges."""
    tables = list(tables)
    if not tables:
        return False
    adjacency: dict[str, list[str]] = {name: [] for name in tables}
    for (name_a, _), (name_b, _) in joins:
        adjacency[name_a].append(name_b)
        adjacency[name_b].append(name_a)
    seen = {tables[0]}
    stack = [tables[0]]
    while stack:
        for neighbor in adjacency[stack.pop()]:
            if neighbor not in seen:
                seen.add(neighbor)
                stack.append(neighbor)
    return len(seen) == len(tables)


def plan_violations(instance: RerankInstance, plan: JoinPlan) -> list[str]:
    """Structural rule violations of a non-fallback plan; empty when clean."""
    problems = []
    k = instance.k
    if len(plan.tables) != k:
        problems.append(f"expected {k} tables, got {len(plan.tables)}")
    if len(set(plan.tables)) != len(plan.tables):
        problems.append("duplicate tables selected")
    if len(plan.joins) > k - 1:
        problems.append(f"{len(plan.joins)} joins exceed the budget of {k - 1}")
    selected = set(plan.tables)
    seen_pairs = set()
    for (name_a, col_a), (name_b, col_b) in plan.joins:
        if name_a not in selected or name_b not in selected:
            problems.append(f"join touches unselected table: {name_a}/{name_b}")
        if (name_a, name_b) in seen_pairs:
            problems.append(f"table pair joined twice: {name_a}/{name_b}")
        seen_pairs.add((name_a, name_b))
        if instance.edge_score((name_a, col_a), (name_b, col_b)) <= instance.edge_epsilon:
            problems.append(f"join uses an ineligible column pair: "
                            f"{name_a}.{col_a}/{name_b}.{col_b}")
    if not connectivity_ok(plan.tables, plan.joins):
        problems.append("selected tables are not connected by the joins")
    for q, refs in plan.coverage:
        per_table: dict[str, int] = {}
        for name, _ in refs:
            per_table[name] = per_table.get(name, 0) + 1
            if name not in selected:
                problems.append(f"coverage of sub-query {q} uses unselected table {name}")
        if any(count > 1 for count in per_table.values()):
            problems.append(f"sub-query {q} covered by two columns of one table")
    total_links = sum(len(refs) for _, refs in plan.coverage)
    if total_links > instance.subquery_count:
        problems.append("coverage links exceed the sub-query count")
    return problems


def flow_value(instance: RerankInstance, plan: JoinPlan) -> float:
    """Max flow through the augmented selected subgraph.

    A virtual source feeds k units into one selected table, joined tables pass
    flow with capacity k, and each selected table drains one unit to a virtual
    sink. The value equals k exactly when the selection is connected.
    """
    if not plan.tables:
        return 0.0
    graph = nx.DiGraph()
    anchor = min(plan.tables)
    graph.add_edge(SOURCE, anchor, capacity=float(instance.k))
    for name in plan.tables:
        graph.add_edge(name, SINK, capacity=1.0)
    for (name_a, _), (name_b, _) in plan.joins:
        graph.add_edge(name_a, name_b, capacity=float(instance.k))
        graph.add_edge(name_b, name_a, capacity=float(instance.k))
    return float(nx.maximum_flow_value(graph, SOURCE, SINK))
