"""Branch and bound over the table-selection binaries with LP relaxation bounds.

Nodes fix a prefix of the name-ordered selection variables. The LP relaxation
of the full model (solved with HiGHS) bounds every node; once k tables are
fixed to one, the remaining join and coverage decisions are completed exactly
by the canonical per-subset subroutines, so incumbents are true solution
values. A final lexicographic fixing pass makes the returned table set the
smallest among optima, matching the tie-breaking of the enumeration engine.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from ..errors import JoinRankError, SolveTimeoutError
from .instance import make_plan, plan_objective
from .model import MipModel
from .structure import (precompute_best_columns, precompute_pair_edges,
                        subset_coverage, subset_tree)

# Keep LP rounding noise well away from true objective gaps when pruning.
_BOUND_SLACK = 1e-7
_VALUE_TOLERANCE = 1e-9


class _Relaxation:
    """Reusable LP arrays for one model; per-node bound fixings only."""

    def __init__(self, model: MipModel):
        count = len(model.variables)
        self.objective = np.zeros(count)
        self.lower = np.zeros(count)
        self.upper = np.full(count, np.inf)
        for i, var in enumerate(model.variables):
            self.objective[i] = var.objective
            self.lower[i] = var.lower
            self.upper[i] = np.inf if var.upper is None else var.upper

        rows_ub, cols_ub, vals_ub, rhs_ub = [], [], [], []
        rows_eq, cols_eq, vals_eq, rhs_eq = [], [], [], []
        for constraint in model.constraints:
            if constraint.sense == "<=":
                row = len(rhs_ub)
                for col, val in constraint.coeffs.items():
                    rows_ub.append(row)
                    cols_ub.append(col)
                    vals_ub.append(val)
                rhs_ub.append(constraint.rhs)
            else:
                row = len(rhs_eq)
                for col, val in constraint.coeffs.items():
                    rows_eq.append(row)
                    cols_eq.append(col)
                    vals_eq.append(val)
                rhs_eq.append(constraint.rhs)
        self.a_ub = csr_matrix((vals_ub, (rows_ub, cols_ub)),
                               shape=(len(rhs_ub), count)) if rhs_ub else None
        self.b_ub = np.array(rhs_ub)
        self.a_eq = csr_matrix((vals_eq, (rows_eq, cols_eq)),
                               shape=(len(rhs_eq), count)) if rhs_eq else None
        self.b_eq = np.array(rhs_eq)

    def bound(self, fixings: dict[int, float]) -> float | None:
        """Maximum of the LP relaxation under the fixings; None when infeasible."""
        lower = self.lower.copy()
        upper = self.upper.copy()
        for index, value in fixings.items():
            lower[index] = value
            upper[index] = value
        result = linprog(-self.objective, A_ub=self.a_ub,
                         b_ub=self.b_ub if self.a_ub is not None else None,
                         A_eq=self.a_eq,
                         b_eq=self.b_eq if self.a_eq is not None else None,
                         bounds=np.column_stack([lower, upper]), method="highs")
        if result.status == 2:
            return None
        if result.status != 0:
            raise JoinRankError(f"LP relaxation failed with status {result.status}")
        return -float(result.fun)


def _search(model: MipModel, relaxation: _Relaxation, base_fixings: dict[int, float],
            deadline: float | None):
    """DFS over selection fixings; returns (value, subset) or (None, None)."""
    instance = model.instance
    names = instance.table_names
    pair_edges = precompute_pair_edges(instance)
    best_columns = precompute_best_columns(instance)
    forced_on = {name for name in names
                 if base_fixings.get(model.select_vars[name]) == 1.0}
    forced_off = {name for name in names
                  if base_fixings.get(model.select_vars[name]) == 0.0}

    best_value: float | None = None
    best_subset: tuple[str, ...] | None = None

    def consider(subset: tuple[str, ...]) -> None:
        nonlocal best_value, best_subset
        tree = subset_tree(instance, subset, pair_edges)
        if tree is None:
            return
        coverage = subset_coverage(instance, subset, best_columns)
        value = plan_objective(instance, subset, tree, coverage)
        if best_value is None or value > best_value:
            best_value, best_subset = value, subset

    def descend(position: int, chosen: list[str], fixings: dict[int, float]) -> None:
        if deadline is not None and time.monotonic() > deadline:
            raise SolveTimeoutError("branch and bound exceeded the time limit")
        if len(chosen) == instance.k:
            if forced_on.issubset(chosen):
                consider(tuple(chosen))
            return
        remaining = [n for n in names[position:] if n not in forced_off]
        if len(chosen) + len(remaining) < instance.k:
            return
        bound = relaxation.bound(fixings)
        if bound is None:
            return
        if best_value is not None and bound < best_value - _BOUND_SLACK:
            return
        name = names[position]
        index = model.select_vars[name]
        if name in forced_on:
            descend(position + 1, chosen + [name], fixings)
            return
        if name in forced_off:
            descend(position + 1, chosen, fixings)
            return
        descend(position + 1, chosen + [name], {**fixings, index: 1.0})
        descend(position + 1, chosen, {**fixings, index: 0.0})

    start = [n for n in names if n in forced_on]
    if len(start) <= instance.k:
        descend(0, [], dict(base_fixings))
    return best_value, best_subset


def solve_bnb(model: MipModel, deadline: float | None = None):
    """Exact solve; returns the optimal plan or None when no selection connects."""
    instance = model.instance
    relaxation = _Relaxation(model)
    best_value, best_subset = _search(model, relaxation, {}, deadline)
    if best_value is None:
        return None

    # Lexicographic tie-breaking: greedily keep the earliest tables whose forced
    # inclusion still attains the optimal value.
    names = instance.table_names
    fixings: dict[int, float] = {}
    chosen: list[str] = []
    for position, name in enumerate(names):
        if len(chosen) == instance.k:
            break
        if len(chosen) + (len(names) - position) == instance.k:
            chosen.append(name)
            fixings[model.select_vars[name]] = 1.0
            continue
        trial = dict(fixings)
        trial[model.select_vars[name]] = 1.0
        value, _ = _search(model, relaxation, trial, deadline)
        if value is not None and value >= best_value - _VALUE_TOLERANCE:
            chosen.append(name)
            fixings[model.select_vars[name]] = 1.0
        else:
            fixings[model.select_vars[name]] = 0.0

    subset = tuple(chosen) if len(chosen) == instance.k else best_subset
    tree = subset_tree(instance, subset, precompute_pair_edges(instance))
    coverage = subset_coverage(instance, subset, precompute_best_columns(instance))
    return make_plan(instance, subset, tree, coverage)
