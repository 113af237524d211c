"""Sample average approximation over R scenarios."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import FirstStageDecision, Instance, Scenario
from .formulation import first_stage_blocks, symmetry_breaking, tau_linearization
from .recourse import recourse_batch
from .solver_io import EQ, GE, LinearModel, expr, solve


@dataclass(frozen=True)
class SaaModelSpec:
    instance: Instance
    scenarios: Sequence[Scenario]
    symmetry_breaking: bool = False

    def check(self) -> None:
        if len(self.scenarios) == 0:
            raise ValueError("SAA needs at least one scenario")
        for r, sc in enumerate(self.scenarios):
            if sc.violations(self.instance):
                warnings.warn(f"scenario {r + 1} lies outside the instance support", stacklevel=3)
                break


def stack(scenarios: Sequence[Scenario]) -> tuple[np.ndarray, np.ndarray]:
    return (np.array([s.service for s in scenarios], dtype=float),
            np.array([s.travel for s in scenarios], dtype=float))


def build_saa(spec: SaaModelSpec) -> LinearModel:
    spec.check()
    inst, n, c = spec.instance, spec.instance.N, spec.instance.costs
    R = len(spec.scenarios)
    m = LinearModel("saa")
    fs = tau_linearization(m, first_stage_blocks(m, inst))
    if spec.symmetry_breaking:
        symmetry_breaking(m, fs)
    x, a = fs.x, fs.a
    obj = expr()
    for r, sc in enumerate(spec.scenarios, start=1):
        d, t = sc.service, sc.travel
        w = [m.add_var(f"w_{r}_{j}") for j in range(1, n + 2)]
        u = [m.add_var(f"u_{r}_{j}") for j in range(1, n + 2)]
        A = m.add_var(f"A_{r}")
        m.add_constr(f"bal_{r}_1", expr((w[0], 1), (u[0], -1), (a[0], 1),
                                        *[(x[i][0], -t[0, i + 1]) for i in range(n)]), EQ, 0)
        for j in range(2, n + 1):
            e = expr((w[j - 1], 1), (u[j - 1], -1), (w[j - 2], -1), (a[j - 2], -1), (a[j - 1], 1),
                     *[(x[i][j - 2], -d[i]) for i in range(n)])
            for (i, ip), tv in fs.tau_at(j):
                e.add(tv, -t[i + 1, ip + 1])
            m.add_constr(f"bal_{r}_{j}", e, EQ, 0)
        m.add_constr(f"bal_{r}_{n + 1}", expr((w[n], 1), (u[n], -1), (w[n - 1], -1), (a[n - 1], -1),
                                              *[(x[i][n - 1], -d[i]) for i in range(n)]), EQ, -inst.L)
        e = expr((A, 1), *[(x[i][0], -t[0, i + 1]) for i in range(n)],
                 *[(x[i][n - 1], -t[i + 1, 0]) for i in range(n)])
        for (i, ip, j), tv in fs.tau.items():
            e.add(tv, -t[i + 1, ip + 1])
        m.add_constr(f"travel_{r}", e, EQ, 0)
        for j in range(n):
            obj.add(w[j], c.wait[j] / R).add(u[j], c.idle[j] / R)
        obj.add(w[n], c.overtime / R).add(A, c.travel / R)
    m.set_objective(obj)
    m.meta.update(model="saa", N=n, R=R)
    return m


def route_lp(route, inst: Instance, service: np.ndarray, travel: np.ndarray) -> LinearModel:
    """SAA problem for a fixed route: LP in appointments a and per-scenario w, u."""
    n, c = inst.N, inst.costs
    R = service.shape[0]
    r0 = np.asarray(route) - 1
    m = LinearModel("route_lp")
    a = [m.add_var(f"a_{j}", 0.0, inst.L) for j in range(1, n + 1)]
    for j in range(1, n):
        m.add_constr(f"order_{j + 1}", expr((a[j], 1), (a[j - 1], -1)), GE, 0)
    obj = expr()
    for r in range(R):
        d = service[r, r0]
        nodes = [0, *(r0 + 1), 0]
        legs = [travel[r, p, q] for p, q in zip(nodes[:-1], nodes[1:])]
        w = [m.add_var(f"w_{r + 1}_{j}") for j in range(1, n + 2)]
        u = [m.add_var(f"u_{r + 1}_{j}") for j in range(1, n + 2)]
        m.add_constr(f"b_{r + 1}_1", expr((w[0], 1), (u[0], -1), (a[0], 1)), EQ, legs[0])
        for j in range(1, n):
            m.add_constr(f"b_{r + 1}_{j + 1}", expr((w[j], 1), (u[j], -1), (w[j - 1], -1),
                                                    (a[j - 1], -1), (a[j], 1)), EQ, d[j - 1] + legs[j])
        m.add_constr(f"b_{r + 1}_{n + 1}", expr((w[n], 1), (u[n], -1), (w[n - 1], -1), (a[n - 1], -1)),
                     EQ, d[n - 1] - inst.L)
        for j in range(n):
            obj.add(w[j], c.wait[j] / R).add(u[j], c.idle[j] / R)
        obj.add(w[n], c.overtime / R)
        obj.add_const(c.travel * sum(legs) / R)
    m.set_objective(obj)
    return m


def brute_force_saa(spec: SaaModelSpec, return_decision: bool = False):
    """Minimum over all N! routes of the per-route SAA LP optimum."""
    spec.check()
    inst = spec.instance
    service, travel = stack(spec.scenarios)
    best, best_dec = np.inf, None
    for route in itertools.permutations(range(1, inst.N + 1)):
        res = solve(route_lp(route, inst, service, travel), gap=0.0)
        if res.objective < best:
            best = res.objective
            a = np.array([res.value(f"a_{j}") for j in range(1, inst.N + 1)])
            best_dec = (route, a)
    if return_decision:
        route, a = best_dec
        return best, FirstStageDecision.from_route(route, np.maximum.accumulate(a))
    return best


def saa_objective(dec: FirstStageDecision, scenarios: Sequence[Scenario], inst: Instance) -> float:
    """Average recourse cost of a fixed decision over the given scenarios."""
    service, travel = stack(scenarios)
    return float(recourse_batch(dec.route(), dec.appointments, service, travel, inst)["cost"].mean())
