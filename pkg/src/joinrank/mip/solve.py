"""Solve entry points and plan extraction."""

from __future__ import annotations

import time

from ..errors import JoinRankError
from .bnb import solve_bnb
from .instance import JoinPlan, RerankInstance, fallback_plan, make_plan
from .model import MipModel
from .structure import solve_structure

DEFAULT_TIME_LIMIT = 10.0

ENGINES = ("auto", "structure", "bnb")


def solve(model: MipModel, time_limit: float = DEFAULT_TIME_LIMIT,
          engine: str = "auto") -> JoinPlan:
    """Provably optimal plan, or the flagged top-k fallback when no selection
    of k tables can be connected."""
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    instance = model.instance
    instance.validate()
    deadline = time.monotonic() + time_limit if time_limit else None
    if engine == "bnb":
        plan = solve_bnb(model, deadline)
    else:
        plan = solve_structure(instance, deadline)
    if plan is None:
        return fallback_plan(instance)
    return plan


def extract_plan(model: MipModel, assignment: dict[str, float]) -> JoinPlan:
    """Turn a variable assignment (by variable name) into a join plan.

    Directed join selections collapse to one undirected condition per pair; the
    objective is recomputed from the extracted plan.
    """
    instance = model.instance
    by_name = {var.name: index for index, var in enumerate(model.variables)}
    unknown = set(assignment) - set(by_name)
    if unknown:
        raise JoinRankError(f"assignment names unknown variables: {sorted(unknown)}")

    def value_of(index: int) -> float:
        return assignment.get(model.variables[index].name, 0.0)

    tables = [name for name, index in model.select_vars.items() if value_of(index) > 0.5]
    joins = set()
    for (name_a, col_a, name_b, col_b), index in model.join_vars.items():
        if value_of(index) > 0.5:
            edge = ((name_a, col_a), (name_b, col_b))
            joins.add(edge if edge[0] <= edge[1] else (edge[1], edge[0]))
    coverage: dict[int, list[tuple[str, int]]] = {}
    for (q, name, col), index in model.cover_vars.items():
        if value_of(index) > 0.5:
            coverage.setdefault(q, []).append((name, col))
    return make_plan(instance, tables, tuple(sorted(joins)),
                     {q: tuple(sorted(refs)) for q, refs in coverage.items()})
