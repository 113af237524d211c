"""Exact minimization over routes by solving one LP per permutation.

Each model module supplies a builder returning the route-restricted LP; that LP
is loaded into HiGHS once per route and re-solved, warm-started, for every
objective variant (for example a list of radii).
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .model import LinearModel
from .solve import SolverError


@dataclass
class RouteOptimum:
    objective: float
    route: tuple
    values: dict
    routes_solved: int
    wall_time: float


def _load(model: LinearModel, opts: dict):
    import highspy

    c, offset, A, lo, hi, lb, ub, integ = model.to_arrays()
    if integ.any():
        raise SolverError("route-restricted models must be pure LPs")
    A = A.tocsc()
    inf = highspy.kHighsInf
    lp = highspy.HighsLp()
    lp.num_col_, lp.num_row_ = model.num_vars, model.num_constraints
    lp.col_cost_ = c
    lp.offset_ = offset
    lp.col_lower_ = np.where(np.isinf(lb), -inf, lb)
    lp.col_upper_ = np.where(np.isinf(ub), inf, ub)
    lp.row_lower_ = np.where(np.isinf(lo), -inf, lo)
    lp.row_upper_ = np.where(np.isinf(hi), inf, hi)
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = A.indptr
    lp.a_matrix_.index_ = A.indices
    lp.a_matrix_.value_ = A.data
    lp.a_matrix_.num_col_, lp.a_matrix_.num_row_ = model.num_vars, model.num_constraints
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    for k, v in opts.items():
        h.setOptionValue(k, v)
    h.passModel(lp)
    return h, c


def minimize_over_routes(build: Callable[[tuple], LinearModel], N: int,
                         variants: Optional[Sequence[dict]] = None,
                         routes: Optional[Sequence[tuple]] = None,
                         highs_options: Optional[dict] = None) -> list[RouteOptimum]:
    """Return the best route and LP solution for each objective variant.

    ``build(route)`` gets a 1-based route. A variant maps variable names to
    replacement objective coefficients; ``None`` means the model's own objective.
    Routes whose LP is infeasible are skipped.
    """
    import highspy

    variants = list(variants) if variants else [{}]
    routes = routes if routes is not None else list(itertools.permutations(range(1, N + 1)))
    best = [(math.inf, None, None, None)] * len(variants)
    t0 = time.perf_counter()
    count = 0
    for route in routes:
        model = build(tuple(route))
        h, base_cost = _load(model, highs_options or {})
        names = model.var_names()
        for k, var in enumerate(variants):
            if var:
                idx = np.array([model.var(n) for n in var], dtype=np.int32)
                h.changeColsCost(len(idx), idx, np.array(list(var.values()), dtype=float))
            h.run()
            st = h.getModelStatus()
            if st == highspy.HighsModelStatus.kOptimal:
                obj = h.getInfo().objective_function_value
                if obj < best[k][0]:
                    best[k] = (obj, tuple(route), np.array(h.getSolution().col_value), names)
            elif st not in (highspy.HighsModelStatus.kInfeasible,):
                raise SolverError(f"route {route}: LP status {h.modelStatusToString(st)}")
        count += 1
    wall = time.perf_counter() - t0
    out = []
    for obj, route, vals, names in best:
        if route is None:
            raise SolverError("every route LP is infeasible")
        out.append(RouteOptimum(obj, route, dict(zip(names, vals.tolist())), count, wall))
    return out
