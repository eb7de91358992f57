"""SQL-generation prompt emission for a solved join plan."""

from __future__ import annotations

from .corpus import Table, TableCorpus
from .mip import JoinPlan

TASK_INSTRUCTION = (
    "Generate SQL given the question, tables, and external knowledge to answer the "
    "question correctly. First, identify tables with relevant columns. Then, join "
    "these tables using only columns in the tables. Finally, decide which columns to "
    "return in the SQL to answer the original question. When returning columns, "
    "please specify the tables associated with it to prevent ambiguity. "
    "Think step by step."
)

ONE_SHOT_EXAMPLE = """CREATE TABLE singer(
  singer_id TEXT: <instance 1>, ...,
  nation TEXT: <instance 1>, ...,
  sname TEXT: <instance 1>, ...,
  dname TEXT: <instance 1>, ...,
  cname TEXT: <instance 1>, ...,
  age INTEGER: <instance 1>, ...,
  year INTEGER: <instance 1>, ...,
  birth_year INTEGER: <instance 1>, ...,
  salary REAL: <instance 1>, ...,
  city TEXT: <instance 1>, ...,
  phone_number INTEGER: <instance 1>, ...,
  tax REAL: <instance 1>, ...)

External Knowledge: age = year - birth_year
Question: How many singers in USA who is older than 27?
Answer: SELECT COUNT(*) FROM singer WHERE year - birth_year > 27;"""

_SQL_TYPES = {"integer": "INTEGER", "real": "REAL", "text": "TEXT",
              "date": "DATE", "unknown": "TEXT"}


def render_create_table(table: Table, row_limit: int = 3) -> str:
    lines = [f"CREATE TABLE {table.name}("]
    column_lines = []
    for col in table.columns:
        line = f"  {col.header} {_SQL_TYPES[col.declared_type]}"
        values = [v.strip() for v in col.values[:row_limit]]
        if values:
            line += ": " + ", ".join(values)
        column_lines.append(line)
    return lines[0] + "\n" + ",\n".join(column_lines) + ")"


def emit_sql_prompt(corpus: TableCorpus, plan: JoinPlan, query_text: str,
                    external_knowledge: str = "", row_limit: int = 3) -> str:
    """Task instruction, the single worked example, then the plan's tables and
    the question slots."""
    blocks = ["// TASK INSTRUCTION", TASK_INSTRUCTION, "",
              "// 1-SHOT PSEUDO EXAMPLE", ONE_SHOT_EXAMPLE, "",
              "// NEW INPUT"]
    for name in plan.tables:
        blocks.append(render_create_table(corpus.get(name), row_limit))
        blocks.append("")
    blocks.append(f"External knowledge: {external_knowledge}")
    blocks.append(f"Question: {query_text}")
    blocks.append("Answer:")
    return "\n".join(blocks)
