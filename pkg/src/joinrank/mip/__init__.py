"""Re-ranking as a mixed-integer program: model, exact solvers, and verification."""

from .instance import (JoinPlan, RerankInstance, fallback_plan, make_plan,
                       plan_objective)
from .model import MipModel, build_model
from .oracle import ORACLE_MAX_TABLES, oracle_solve
from .solve import DEFAULT_TIME_LIMIT, extract_plan, solve
from .verify import connectivity_ok, flow_value, plan_violations

__all__ = [
    "DEFAULT_TIME_LIMIT",
    "JoinPlan",
    "MipModel",
    "ORACLE_MAX_TABLES",
    "RerankInstance",
    "build_model",
    "connectivity_ok",
    "extract_plan",
    "fallback_plan",
    "flow_value",
    "make_plan",
    "oracle_solve",
    "plan_objective",
    "plan_violations",
    "solve",
]
