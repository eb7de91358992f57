"""Mixed-integer model construction for the re-ranking problem.

Variables (per instance, tables indexed by lexicographic name order):
  sel_t*        binary   table is returned
  join_a_b      binary   directed column-pair selection between two tables
  cov_q*_t*c*   binary   sub-query covered by a column
  covq_q*       binary   sub-query covered by at least one column
  root_t*       binary   table injects the connectivity flow
  src_t*        >= 0     flow injected at a table
  sink_t*       [0, 1]   flow absorbed at a table
  flow_a_b      >= 0     flow carried by a selected column pair

The flow block makes the joined tables one connected component: one selected
table injects k units, every selected table must absorb exactly one, and flow
may only travel over selected column pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InfeasibleModelError
from .instance import RerankInstance

# Directed column pair: (table_a, col_a, table_b, col_b).
DirectedEdge = tuple[str, int, str, int]


@dataclass
class Variable:
    name: str
    lower: float
    upper: float | None
    integer: bool
    objective: float = 0.0


@dataclass
class LinearConstraint:
    name: str
    coeffs: dict[int, float]  # variable index -> coefficient
    sense: str  # "<=" or "="
    rhs: float


@dataclass
class MipModel:
    instance: RerankInstance
    variables: list[Variable] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    select_vars: dict[str, int] = field(default_factory=dict)
    join_vars: dict[DirectedEdge, int] = field(default_factory=dict)
    cover_vars: dict[tuple[int, str, int], int] = field(default_factory=dict)
    covered_vars: dict[int, int] = field(default_factory=dict)
    root_vars: dict[str, int] = field(default_factory=dict)
    source_vars: dict[str, int] = field(default_factory=dict)
    sink_vars: dict[str, int] = field(default_factory=dict)
    flow_vars: dict[DirectedEdge, int] = field(default_factory=dict)
    table_tokens: dict[str, str] = field(default_factory=dict)

    def add_variable(self, name: str, lower: float, upper: float | None,
                     integer: bool, objective: float = 0.0) -> int:
        self.variables.append(Variable(name, lower, upper, integer, objective))
        return len(self.variables) - 1

    def add_constraint(self, name: str, coeffs: dict[int, float], sense: str,
                       rhs: float) -> None:
        self.constraints.append(LinearConstraint(name, coeffs, sense, rhs))

    def to_lp_text(self) -> str:
        """Plain LP-format dump; bit-identical across runs for identical instances."""
        lines = ["\\ joinrank re-ranking model"]
        for name in sorted(self.table_tokens):
            lines.append(f"\\ {self.table_tokens[name]} = {name}")
        lines.append("Maximize")
        terms = [
            f"{repr(v.objective)} {v.name}" for v in self.variables if v.objective != 0.0
        ]
        lines.append(" obj: " + " + ".join(terms))
        lines.append("Subject To")
        for con in self.constraints:
            parts = []
            for index in sorted(con.coeffs):
                coefficient = con.coeffs[index]
                sign = "-" if coefficient < 0 else "+"
                parts.append(f"{sign} {repr(abs(coefficient))} {self.variables[index].name}")
            body = " ".join(parts).lstrip("+ ")
            sense = "<=" if con.sense == "<=" else "="
            lines.append(f" {con.name}: {body} {sense} {repr(con.rhs)}")
        lines.append("Bounds")
        for v in self.variables:
            upper = "+inf" if v.upper is None else repr(v.upper)
            lines.append(f" {repr(v.lower)} <= {v.name} <= {upper}")
        binaries = [v.name for v in self.variables if v.integer]
        if binaries:
            lines.append("Binaries")
            lines.append(" " + " ".join(binaries))
        lines.append("End")
        return "\n".join(lines) + "\n"


def build_model(instance: RerankInstance) -> MipModel:
    """Emit the full selection model: objective, counting, coverage and flow blocks."""
    instance.validate()
    model = MipModel(instance=instance)
    names = instance.table_names
    tokens = {name: f"t{i}" for i, name in enumerate(names)}
    model.table_tokens = tokens
    k = instance.k
    nq = instance.subquery_count

    for name in names:
        model.select_vars[name] = model.add_variable(
            f"sel_{tokens[name]}", 0.0, 1.0, True, instance.coarse(name))

    # Directed column-pair selection; only pairs above the epsilon floor get
    # variables, so an edge with no compatibility evidence cannot carry flow.
    undirected: list[tuple[str, int, str, int, float]] = []
    for i, name_a in enumerate(names):
        for name_b in names[i + 1 :]:
            for col_a, col_b, value in instance.edges_between(name_a, name_b):
                undirected.append((name_a, col_a, name_b, col_b, value))
    for name_a, col_a, name_b, col_b, value in undirected:
        for edge in ((name_a, col_a, name_b, col_b), (name_b, col_b, name_a, col_a)):
            label = f"{tokens[edge[0]]}c{edge[1]}_{tokens[edge[2]]}c{edge[3]}"
            model.join_vars[edge] = model.add_variable(
                f"join_{label}", 0.0, 1.0, True, value)

    for q in range(nq):
        for name in names:
            for col in range(instance.column_count(name)):
                model.cover_vars[(q, name, col)] = model.add_variable(
                    f"cov_q{q}_{tokens[name]}c{col}", 0.0, 1.0, True,
                    instance.fine(q, name, col))
    for q in range(nq):
        model.covered_vars[q] = model.add_variable(
            f"covq_q{q}", 0.0, 1.0, True, instance.alpha)

    for name in names:
        model.root_vars[name] = model.add_variable(f"root_{tokens[name]}", 0.0, 1.0, True)
    for name in names:
        model.source_vars[name] = model.add_variable(f"src_{tokens[name]}", 0.0, None, False)
    for name in names:
        model.sink_vars[name] = model.add_variable(f"sink_{tokens[name]}", 0.0, 1.0, False)
    for edge in model.join_vars:
        label = f"{tokens[edge[0]]}c{edge[1]}_{tokens[edge[2]]}c{edge[3]}"
        model.flow_vars[edge] = model.add_variable(f"flow_{label}", 0.0, None, False)

    # Exactly k tables; at most k-1 join edges.
    model.add_constraint("table_count",
                         {idx: 1.0 for idx in model.select_vars.values()}, "=", float(k))
    if model.join_vars:
        model.add_constraint("join_budget",
                             {idx: 1.0 for idx in model.join_vars.values()}, "<=", float(k - 1))

    # A column pair may be selected only when both tables are returned,
    # and two tables join through at most one column pair.
    pair_members: dict[tuple[str, str], list[int]] = {}
    for name_a, col_a, name_b, col_b, _ in undirected:
        forward = model.join_vars[(name_a, col_a, name_b, col_b)]
        backward = model.join_vars[(name_b, col_b, name_a, col_a)]
        label = f"{tokens[name_a]}c{col_a}_{tokens[name_b]}c{col_b}"
        model.add_constraint(
            f"join_needs_tables_{label}",
            {forward: 2.0, backward: 2.0,
             model.select_vars[name_a]: -1.0, model.select_vars[name_b]: -1.0},
            "<=", 0.0)
        pair_members.setdefault((name_a, name_b), []).extend((forward, backward))
    for (name_a, name_b), members in pair_members.items():
        model.add_constraint(
            f"one_pair_{tokens[name_a]}_{tokens[name_b]}",
            {idx: 1.0 for idx in members}, "<=", 1.0)

    # Each sub-query uses at most one column per table, only from returned tables,
    # and the total number of coverage links cannot exceed the sub-query count.
    for q in range(nq):
        for name in names:
            cols = {model.cover_vars[(q, name, col)]: 1.0
                    for col in range(instance.column_count(name))}
            model.add_constraint(f"one_column_q{q}_{tokens[name]}", cols, "<=", 1.0)
    for name in names:
        for col in range(instance.column_count(name)):
            coeffs = {model.cover_vars[(q, name, col)]: 1.0 / nq for q in range(nq)}
            coeffs[model.select_vars[name]] = -1.0
            model.add_constraint(f"cover_needs_table_{tokens[name]}c{col}", coeffs, "<=", 0.0)
    for q in range(nq):
        coeffs = {model.cover_vars[(q, name, col)]: -1.0
                  for name in names for col in range(instance.column_count(name))}
        coeffs[model.covered_vars[q]] = 1.0
        model.add_constraint(f"covered_link_q{q}", coeffs, "<=", 0.0)
    model.add_constraint("cover_cap",
                         {idx: 1.0 for idx in model.cover_vars.values()}, "<=", float(nq))

    # Connectivity as flow: one returned table injects k units, every returned
    # table absorbs one, and flow travels only over selected column pairs.
    for name in names:
        coeffs = {model.source_vars[name]: 1.0, model.sink_vars[name]: -1.0}
        for edge, idx in model.flow_vars.items():
            if edge[2] == name:  # inbound
                coeffs[idx] = coeffs.get(idx, 0.0) + 1.0
            if edge[0] == name:  # outbound
                coeffs[idx] = coeffs.get(idx, 0.0) - 1.0
        model.add_constraint(f"flow_balance_{tokens[name]}", coeffs, "=", 0.0)
    model.add_constraint("sink_total",
                         {idx: 1.0 for idx in model.sink_vars.values()}, "=", float(k))
    model.add_constraint("root_single",
                         {idx: 1.0 for idx in model.root_vars.values()}, "=", 1.0)
    for name in names:
        model.add_constraint(
            f"root_needs_table_{tokens[name]}",
            {model.root_vars[name]: 1.0, model.select_vars[name]: -float(k)}, "<=", 0.0)
        model.add_constraint(
            f"root_injection_{tokens[name]}",
            {model.source_vars[name]: 1.0, model.root_vars[name]: -float(k)}, "=", 0.0)
    for edge, join_idx in model.join_vars.items():
        label = f"{tokens[edge[0]]}c{edge[1]}_{tokens[edge[2]]}c{edge[3]}"
        flow_idx = model.flow_vars[edge]
        model.add_constraint(f"flow_needs_join_{label}",
                             {flow_idx: 1.0 / k, join_idx: -1.0}, "<=", 0.0)
        model.add_constraint(f"join_needs_flow_{label}",
                             {join_idx: 1.0, flow_idx: -float(k)}, "<=", 0.0)
    return model
