"""Self-contained mixed-binary LP solver: problem container, bounded-variable
simplex, and branch and bound."""

from .problem import (EQ, GAP_LIMIT, GE, INFEASIBLE, LE, NUMERICAL_FAILURE,
                      OPTIMAL, UNBOUNDED, MilpProblem, MilpSolution,
                      ProblemBuilder, SolverConfig, write_lp_text)
from .branch_bound import fix_binaries_and_dualize, solve_lp, solve_milp

__all__ = [
    "EQ", "GE", "LE",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "GAP_LIMIT", "NUMERICAL_FAILURE",
    "MilpProblem", "MilpSolution", "ProblemBuilder", "SolverConfig",
    "write_lp_text", "solve_lp", "solve_milp", "fix_binaries_and_dualize",
]
