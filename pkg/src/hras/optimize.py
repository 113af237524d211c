"""One entry point per model: build, solve, and turn the solution into a decision.

``method="milp"`` solves the joint assignment-and-appointment MILP.
``method="enumerate"`` solves the route-restricted LP for every permutation
and keeps the best; it is exact and much faster for small N.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import FirstStageDecision, Instance, Scenario
from .formulation import decision_from_result, require_regular
from .moment import MomentAmbiguity, build_mdhras, route_mdhras
from .saa import SaaModelSpec, build_saa, route_lp, stack
from .scenarios import sample_means
from .solver_io import (GAP_FEASIBLE, OPTIMAL, TIME_LIMIT, LinearModel, SolverError,
                        minimize_over_routes, solve)
from .wasserstein import WassersteinAmbiguity, build_wdhras, route_wdhras

MODELS = ("saa", "mdhras", "wdhras")
METHODS = ("milp", "enumerate", "auto")
ENUMERATE_MAX_N = 6


@dataclass
class ModelOutcome:
    model: str
    decision: FirstStageDecision
    objective: float
    status: str
    gap: float
    wallTime: float
    method: str
    nodeCount: int = 0
    epsilon: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"model": self.model, "method": self.method, "status": self.status,
                "objective": self.objective, "gap": self.gap, "epsilon": self.epsilon,
                "wallTime": self.wallTime, "nodeCount": self.nodeCount,
                "route": list(self.decision.route()), "appointments": self.decision.appointments.tolist()}


def moment_set(inst: Instance, samples: Sequence[Scenario]) -> MomentAmbiguity:
    """Means are the sample means of the training data."""
    d, t = sample_means(samples)
    return MomentAmbiguity(d, t)


def build_model(kind: str, inst: Instance, samples: Sequence[Scenario], epsilon: Optional[float] = None,
                symmetry: bool = False) -> LinearModel:
    if kind == "saa":
        return build_saa(SaaModelSpec(inst, samples, symmetry))
    if kind == "mdhras":
        amb = moment_set(inst, samples)
        return build_mdhras(inst, amb, symmetry=symmetry)
    if kind == "wdhras":
        if epsilon is None:
            raise ValueError("wdhras needs a radius")
        return build_wdhras(inst, WassersteinAmbiguity(samples, epsilon), symmetry=symmetry)
    raise ValueError(f"unknown model {kind!r}; choose from {MODELS}")


def _route_builder(kind: str, inst: Instance, samples, epsilon):
    if kind == "saa":
        SaaModelSpec(inst, samples).check()
        service, travel = stack(samples)
        return lambda route: route_lp(route, inst, service, travel)
    if kind == "mdhras":
        require_regular(inst.costs, inst.N)
        amb = moment_set(inst, samples)
        amb.check(inst)
        return lambda route: route_mdhras(route, inst, amb)
    if kind == "wdhras":
        require_regular(inst.costs, inst.N)
        amb = WassersteinAmbiguity(samples, 0.0 if epsilon is None else epsilon)
        amb.check(inst)
        return lambda route: route_wdhras(route, inst, amb)
    raise ValueError(f"unknown model {kind!r}; choose from {MODELS}")


def _resolve(method: str, N: int) -> str:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if method == "auto":
        return "enumerate" if N <= ENUMERATE_MAX_N else "milp"
    return method


def _decision(route, values: dict, N: int) -> FirstStageDecision:
    a = np.array([values[f"a_{j}"] for j in range(1, N + 1)])
    return FirstStageDecision.from_route(route, np.maximum.accumulate(np.clip(a, 0.0, None)))


def optimize(kind: str, inst: Instance, samples: Sequence[Scenario], epsilon: Optional[float] = None,
             method: str = "milp", gap: float = 0.02, time_limit: Optional[float] = None,
             symmetry: bool = False, backend=None) -> ModelOutcome:
    method = _resolve(method, inst.N)
    if method == "enumerate":
        return optimize_radii(inst, samples, [epsilon], kind=kind)[0] if kind == "wdhras" else \
            _enumerate(kind, inst, samples, None, [None])[0]
    model = build_model(kind, inst, samples, epsilon, symmetry)
    res = solve(model, gap=gap, time_limit=time_limit, backend=backend)
    if res.status not in (OPTIMAL, GAP_FEASIBLE, TIME_LIMIT) or res.values is None or len(res.values) == 0:
        raise SolverError(f"{kind}: solver returned {res.status} without a usable solution")
    return ModelOutcome(kind, decision_from_result(res, inst.N), res.objective, res.status, res.gap,
                        res.wall_time, "milp", res.node_count, epsilon,
                        {"variables": model.num_vars, "constraints": model.num_constraints,
                         "binaries": model.num_binaries})


def _enumerate(kind, inst, samples, epsilon, variants_eps) -> list[ModelOutcome]:
    build = _route_builder(kind, inst, samples, epsilon)
    variants = [{"rhoW": e} for e in variants_eps] if kind == "wdhras" else None
    t0 = time.perf_counter()
    opts = minimize_over_routes(build, inst.N, variants)
    wall = time.perf_counter() - t0
    return [ModelOutcome(kind, _decision(o.route, o.values, inst.N), o.objective, OPTIMAL, 0.0, wall,
                         "enumerate", 0, e, {"routesSolved": o.routes_solved})
            for o, e in zip(opts, variants_eps)]


def optimize_radii(inst: Instance, samples: Sequence[Scenario], epsilons: Sequence[float],
                   kind: str = "wdhras", method: str = "enumerate", **kw) -> list[ModelOutcome]:
    """W-DHRAS solutions for several radii; enumeration re-solves each route LP warm."""
    if kind != "wdhras":
        raise ValueError("only wdhras is parameterized by a radius")
    for e in epsilons:
        if e is None or not e >= 0:
            raise ValueError(f"radius must be >= 0, got {e}")
    if _resolve(method, inst.N) == "enumerate":
        return _enumerate("wdhras", inst, samples, None, list(epsilons))
    return [optimize("wdhras", inst, samples, e, method="milp", **kw) for e in epsilons]
