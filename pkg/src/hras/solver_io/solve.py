"""Pluggable solve contract.

Three backends satisfy the same contract:

* ``highs``: in-process HiGHS through highspy (default);
* ``scipy``: ``scipy.optimize.milp`` (also HiGHS underneath, different interface);
* ``subprocess``: writes the LP file, runs an external command, reads a
  ``name value`` solution file. The command comes from ``HRAS_SOLVER_CMD`` and
  is formatted with ``{lp}``, ``{sol}``, ``{gap}`` and ``{time_limit}``.
"""

from __future__ import annotations

import math
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .lpfile import read_solution, write_lp_file
from .model import LinearModel

OPTIMAL = "optimal"
GAP_FEASIBLE = "gap-feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TIME_LIMIT = "time-limit"

BACKEND_ENV = "HRAS_BACKEND"
SOLVER_CMD_ENV = "HRAS_SOLVER_CMD"


class SolverConfigError(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass
class SolveOptions:
    gap: float = 0.02
    time_limit: Optional[float] = None
    threads: int = 1
    feasibility_tol: Optional[float] = None  # mip feasibility tolerance
    verbose: bool = False


@dataclass
class SolveResult:
    status: str
    objective: float = math.nan
    values: Optional[np.ndarray] = None
    gap: float = math.nan
    wall_time: float = 0.0
    node_count: int = 0
    names: list = field(default_factory=list, repr=False)
    backend: str = ""

    @property
    def has_solution(self) -> bool:
        return self.values is not None

    def value(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def as_dict(self) -> dict:
        """Mapping ``name -> value``; empty when no incumbent exists."""
        if self.values is None:
            return {}
        return dict(zip(self.names, self.values.tolist()))

    def summary(self) -> dict:
        return {"status": self.status, "objective": self.objective, "gap": self.gap,
                "wallTime": self.wall_time, "nodeCount": self.node_count, "backend": self.backend}


def _rel_gap(primal: float, dual: float) -> float:
    if not (math.isfinite(primal) and math.isfinite(dual)):
        return math.inf
    return abs(primal - dual) / max(abs(primal), 1e-10) if primal != dual else 0.0


class HighsBackend:
    name = "highs"

    def solve(self, model: LinearModel, opts: SolveOptions) -> SolveResult:
        import highspy

        c, offset, A, lo, hi, lb, ub, integ = model.to_arrays()
        A = A.tocsc()
        lp = highspy.HighsLp()
        lp.num_col_ = model.num_vars
        lp.num_row_ = model.num_constraints
        lp.col_cost_ = c
        lp.offset_ = offset
        lp.col_lower_ = np.where(np.isinf(lb), -highspy.kHighsInf, lb)
        lp.col_upper_ = np.where(np.isinf(ub), highspy.kHighsInf, ub)
        lp.row_lower_ = np.where(np.isinf(lo), -highspy.kHighsInf, lo)
        lp.row_upper_ = np.where(np.isinf(hi), highspy.kHighsInf, hi)
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr
        lp.a_matrix_.index_ = A.indices
        lp.a_matrix_.value_ = A.data
        lp.a_matrix_.num_col_ = model.num_vars
        lp.a_matrix_.num_row_ = model.num_constraints
        if integ.any():
            lp.integrality_ = [highspy.HighsVarType.kInteger if k else highspy.HighsVarType.kContinuous
                               for k in integ]
        h = highspy.Highs()
        h.setOptionValue("output_flag", bool(opts.verbose))
        h.setOptionValue("mip_rel_gap", float(opts.gap))
        h.setOptionValue("threads", int(opts.threads))
        h.setOptionValue("random_seed", 0)
        if opts.feasibility_tol is not None:
            h.setOptionValue("mip_feasibility_tolerance", float(opts.feasibility_tol))
            h.setOptionValue("primal_feasibility_tolerance", float(opts.feasibility_tol))
            h.setOptionValue("dual_feasibility_tolerance", float(opts.feasibility_tol))
        if opts.time_limit is not None:
            h.setOptionValue("time_limit", float(opts.time_limit))
        t0 = time.perf_counter()
        h.passModel(lp)
        h.run()
        wall = time.perf_counter() - t0
        ms = h.getModelStatus()
        info = h.getInfo()
        S = highspy.HighsModelStatus
        is_mip = bool(integ.any())
        sol = h.getSolution()
        has_sol = (info.primal_solution_status == 2) if hasattr(info, "primal_solution_status") else sol.value_valid
        values = np.asarray(sol.col_value, dtype=float) if has_sol else None
        obj = float(info.objective_function_value) if has_sol else math.nan
        nodes = int(getattr(info, "mip_node_count", 0) or 0) if is_mip else 0
        gap = float(info.mip_gap) if is_mip else 0.0
        if is_mip and has_sol and not math.isfinite(gap):
            gap = _rel_gap(obj, float(info.mip_dual_bound))
        if ms == S.kOptimal:
            status = OPTIMAL
            gap = gap if is_mip else 0.0
        elif ms in (S.kInfeasible,):
            status = INFEASIBLE
        elif ms in (S.kUnbounded, S.kUnboundedOrInfeasible):
            status = UNBOUNDED if ms == S.kUnbounded else INFEASIBLE
        elif ms in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kInterrupt):
            status = TIME_LIMIT
        else:
            raise SolverError(f"HiGHS returned model status {h.modelStatusToString(ms)}")
        if status == OPTIMAL and is_mip and gap > opts.gap + 1e-12:
            status = GAP_FEASIBLE
        return SolveResult(status, obj, values, gap, wall, nodes, model.var_names(), self.name)


class ScipyBackend:
    name = "scipy"

    def solve(self, model: LinearModel, opts: SolveOptions) -> SolveResult:
        from scipy.optimize import Bounds, LinearConstraint, milp

        c, offset, A, lo, hi, lb, ub, integ = model.to_arrays()
        cons = [LinearConstraint(A, lo, hi)] if model.num_constraints else []
        options = {"mip_rel_gap": opts.gap, "disp": opts.verbose, "presolve": True}
        if opts.time_limit is not None:
            options["time_limit"] = opts.time_limit
        t0 = time.perf_counter()
        res = milp(c, constraints=cons, integrality=integ, bounds=Bounds(lb, ub), options=options)
        wall = time.perf_counter() - t0
        values = np.asarray(res.x, dtype=float) if res.x is not None else None
        obj = float(res.fun) + offset if values is not None else math.nan
        gap = float(getattr(res, "mip_gap", 0.0) or 0.0) if integ.any() else 0.0
        nodes = int(getattr(res, "mip_node_count", 0) or 0)
        status = {0: OPTIMAL, 1: TIME_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status)
        if status is None:
            raise SolverError(f"scipy milp failed: {res.message}")
        return SolveResult(status, obj, values, gap, wall, nodes, model.var_names(), self.name)


class SubprocessBackend:
    """Solve through an external program that reads an LP file and writes a solution file.

    The solution file holds ``name value`` lines. Optional header lines
    ``# status <s>``, ``# objective <v>``, ``# gap <g>`` and ``# nodes <n>``
    are honoured; missing objective is recomputed from the values.
    """

    name = "subprocess"

    def __init__(self, command: Optional[str] = None):
        self.command = command or os.environ.get(SOLVER_CMD_ENV)

    def solve(self, model: LinearModel, opts: SolveOptions) -> SolveResult:
        if not self.command:
            raise SolverConfigError(f"subprocess backend needs a command (set {SOLVER_CMD_ENV})")
        with tempfile.TemporaryDirectory(prefix="hras_") as tmp:
            lp = Path(tmp) / "model.lp"
            sol = Path(tmp) / "model.sol"
            write_lp_file(model, lp)
            cmd = self.command.format(lp=lp, sol=sol, gap=opts.gap,
                                      time_limit=opts.time_limit if opts.time_limit is not None else "inf")
            t0 = time.perf_counter()
            proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
            wall = time.perf_counter() - t0
            if proc.returncode != 0 or not sol.exists():
                raise SolverError(f"solver command failed ({proc.returncode}): {proc.stderr.strip()[-500:]}")
            header, vals = read_solution(sol)
        status = header.get("status", OPTIMAL)
        names = model.var_names()
        values = None
        if vals:
            values = np.array([vals.get(n, 0.0) for n in names])
        if "objective" in header:
            obj = float(header["objective"])
        elif values is not None:
            obj = model.objective.value(values)
        else:
            obj = math.nan
        gap = float(header.get("gap", 0.0))
        nodes = int(float(header.get("nodes", 0)))
        return SolveResult(status, obj, values, gap, wall, nodes, names, self.name)


_BACKENDS = {"highs": HighsBackend, "scipy": ScipyBackend, "subprocess": SubprocessBackend}


def get_backend(name: Optional[str] = None):
    name = name or os.environ.get(BACKEND_ENV) or "highs"
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise SolverConfigError(f"unknown backend {name!r}; choose from {sorted(_BACKENDS)}") from None


def solve(model: LinearModel, gap: float = 0.02, time_limit: Optional[float] = None,
          backend=None, **kw) -> SolveResult:
    """Solve ``model`` (minimization) with the configured backend."""
    model.validate()
    be = backend if hasattr(backend, "solve") else get_backend(backend)
    return be.solve(model, SolveOptions(gap=gap, time_limit=time_limit, **kw))
