from .enumerate import RouteOptimum, minimize_over_routes
from .lpfile import EmissionError, emit_lp_file, read_solution, write_lp_file, write_solution
from .model import BINARY, CONTINUOUS, EQ, GE, LE, LinearModel, LinExpr, ModelError, expr
from .solve import (GAP_FEASIBLE, INFEASIBLE, OPTIMAL, TIME_LIMIT, UNBOUNDED, HighsBackend,
                    ScipyBackend, SolveOptions, SolverConfigError, SolverError, SolveResult,
                    SubprocessBackend, get_backend, solve)

__all__ = [
    "BINARY", "CONTINUOUS", "EQ", "GE", "LE", "LinearModel", "LinExpr", "ModelError", "expr",
    "EmissionError", "emit_lp_file", "write_lp_file", "read_solution", "write_solution",
    "OPTIMAL", "GAP_FEASIBLE", "INFEASIBLE", "UNBOUNDED", "TIME_LIMIT", "SolveOptions", "SolveResult",
    "SolverConfigError", "SolverError", "HighsBackend", "ScipyBackend", "SubprocessBackend",
    "get_backend", "solve", "RouteOptimum", "minimize_over_routes",
]
