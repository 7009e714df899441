"""Generate, render and score compositional inequality problems."""

from .expr import Expr, VarId, parse_expr
from .problem import Condition, Problem, parse_problem, serialize_problem

__version__ = "0.1.0"

__all__ = ["Expr", "VarId", "parse_expr", "Condition", "Problem", "parse_problem",
           "serialize_problem", "__version__"]
