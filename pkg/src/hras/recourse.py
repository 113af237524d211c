"""Second-stage cost: forward recursion, primal LP, and dual extreme points.

Positions are 1..N+1 (N+1 is the end of the horizon, appointment L). The
dual polytope is indexed 1..N+2 with ``y_{N+2} = 0`` and dummy costs
``c^w_{N+1} = c^o``, ``c^u_{N+1} = 0``, ``c^w_{N+2} = c^u_{N+2} = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

import numpy as np

from .domain import FirstStageDecision, Instance, Scenario, StructureError, route_of
from .solver_io import EQ, LinearModel, expr


class ContractError(ValueError):
    """An argument violates an operation's precondition."""


@dataclass(frozen=True)
class RecourseOutcome:
    wait: np.ndarray  # w_1..w_{N+1}; w_{N+1} is overtime
    idle: np.ndarray  # u_1..u_{N+1}; u_{N+1} is unused time before L, zero cost
    travelTotal: float
    cost: float


@dataclass(frozen=True)
class DualPartition:
    intervals: tuple  # ((k, v), ...) 1-based, covering 1..m
    y: np.ndarray  # y_1..y_m
    feasible: bool = True

    def indicator(self, k: int, v: int) -> int:
        return int((k, v) in self.intervals)


def _check(dec: FirstStageDecision, sc: Scenario, inst: Instance) -> tuple[int, ...]:
    n = inst.N
    if dec.N != n or sc.N != n or sc.travel.shape != (n + 1, n + 1) or dec.assignment.shape != (n, n):
        raise StructureError(f"dimension mismatch: N={n}, decision N={dec.N}, scenario N={sc.N}")
    return route_of(dec)


def route_sequences(route, service: np.ndarray, travel: np.ndarray):
    """Split a scenario batch along a route.

    ``service`` is (S, N), ``travel`` is (S, N+1, N+1). Returns
    ``(d_seq, t_out, t_inter, t_ret)`` with shapes (S,N), (S,), (S,N-1), (S,).
    """
    r = np.asarray(route, dtype=int)  # 1-based
    d_seq = service[:, r - 1]
    t_out = travel[:, 0, r[0]]
    t_inter = travel[:, r[:-1], r[1:]]
    t_ret = travel[:, r[-1], 0]
    return d_seq, t_out, t_inter, t_ret


def recourse_batch(route, a, service, travel, inst: Instance):
    """Vectorized recursion over S scenarios for a fixed route.

    Returns a dict of arrays: ``cost`` (S,), ``wait`` (S,N+1), ``idle`` (S,N+1), ``travel`` (S,).
    """
    service = np.atleast_2d(np.asarray(service, dtype=float))
    travel = np.asarray(travel, dtype=float)
    if travel.ndim == 2:
        travel = travel[None]
    n = inst.N
    a = np.asarray(a, dtype=float)
    d_seq, t_out, t_inter, t_ret = route_sequences(route, service, travel)
    S = service.shape[0]
    w = np.zeros((S, n + 1))
    u = np.zeros((S, n + 1))
    z = t_out - a[0]
    w[:, 0], u[:, 0] = np.maximum(z, 0.0), np.maximum(-z, 0.0)
    for j in range(1, n):
        z = w[:, j - 1] + a[j - 1] - a[j] + d_seq[:, j - 1] + t_inter[:, j - 1]
        w[:, j], u[:, j] = np.maximum(z, 0.0), np.maximum(-z, 0.0)
    z = w[:, n - 1] + a[n - 1] - inst.L + d_seq[:, n - 1]
    w[:, n], u[:, n] = np.maximum(z, 0.0), np.maximum(-z, 0.0)
    A = t_out + t_inter.sum(axis=1) + t_ret
    c = inst.costs
    cost = w[:, :n] @ c.wait + u[:, :n] @ c.idle + c.overtime * w[:, n] + c.travel * A
    return {"cost": cost, "wait": w, "idle": u, "travel": A}


def evaluate_recourse(dec: FirstStageDecision, sc: Scenario, inst: Instance) -> RecourseOutcome:
    """Exact second-stage optimum by forward recursion."""
    route = _check(dec, sc, inst)
    out = recourse_batch(route, dec.appointments, sc.service[None], sc.travel[None], inst)
    return RecourseOutcome(out["wait"][0], out["idle"][0], float(out["travel"][0]), float(out["cost"][0]))


def balance_rhs(dec: FirstStageDecision, sc: Scenario, inst: Instance) -> np.ndarray:
    """Right-hand sides b_1..b_{N+1} of the waiting/idle balance equalities."""
    route = _check(dec, sc, inst)
    n, a = inst.N, dec.appointments
    d_seq, t_out, t_inter, _ = route_sequences(route, sc.service[None], sc.travel[None])
    b = np.empty(n + 1)
    b[0] = t_out[0] - a[0]
    for j in range(1, n):
        b[j] = a[j - 1] - a[j] + d_seq[0, j - 1] + t_inter[0, j - 1]
    b[n] = a[n - 1] - inst.L + d_seq[0, n - 1]
    return b


def travel_total(dec: FirstStageDecision, sc: Scenario) -> float:
    nodes = (0, *route_of(dec), 0)
    return float(sum(sc.travel[p, q] for p, q in zip(nodes[:-1], nodes[1:])))


def recourse_lp(dec: FirstStageDecision, sc: Scenario, inst: Instance) -> LinearModel:
    """Primal recourse LP in w, u >= 0 and the travel total A."""
    _check(dec, sc, inst)
    n, c = inst.N, inst.costs
    b = balance_rhs(dec, sc, inst)
    m = LinearModel("recourse")
    w = [m.add_var(f"w_{j}") for j in range(1, n + 2)]
    u = [m.add_var(f"u_{j}") for j in range(1, n + 2)]
    A = m.add_var("A")
    for j in range(n + 1):
        e = expr((w[j], 1.0), (u[j], -1.0))
        if j > 0:
            e.add(w[j - 1], -1.0)
        m.add_constr(f"balance_{j + 1}", e, EQ, b[j])
    m.add_constr("travel_total", expr((A, 1.0)), EQ, travel_total(dec, sc))
    obj = expr(*[(w[j], c.wait[j]) for j in range(n)], *[(u[j], c.idle[j]) for j in range(n)],
               (w[n], c.overtime), (A, c.travel))
    m.set_objective(obj)
    return m


def extended_costs(costs, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Wait/idle cost vectors over positions 1..N+2 (index 0..N+1) with dummy entries."""
    cw = np.concatenate([costs.wait, [costs.overtime, 0.0]])
    cu = np.concatenate([costs.idle, [0.0, 0.0]])
    return cw, cu


def partitions(m: int) -> Iterator[tuple]:
    """All 2^(m-1) partitions of 1..m into consecutive intervals, fewest cuts first."""
    for ncut in range(m):
        for cuts in combinations(range(1, m), ncut):
            bounds = (0, *cuts, m)
            yield tuple((bounds[i] + 1, bounds[i + 1]) for i in range(len(bounds) - 1))


def partition_dual(intervals, cw: np.ndarray, cu: np.ndarray) -> np.ndarray:
    m = len(cw)
    y = np.empty(m)
    for k, v in intervals:
        acc = 0.0 - cu[v - 1]
        y[v - 1] = acc
        for j in range(v - 1, k - 1, -1):
            acc += cw[j - 1]
            y[j - 1] = acc
    return y


def dual_feasible(y: np.ndarray, costs, N: int, tol: float = 1e-9) -> bool:
    """Membership of y (length N+1 or N+2) in the recourse dual polytope."""
    y = np.asarray(y, dtype=float)
    if len(y) == N + 2:
        if abs(y[-1]) > tol:
            return False
        y = y[:-1]
    if len(y) != N + 1:
        raise StructureError(f"dual vector length {len(y)} not in (N+1, N+2)")
    c = costs
    if y[N] < -tol or y[N] > c.overtime + tol:
        return False
    ynext = y[1:]
    return bool(np.all(y[:N] >= -c.idle - tol) and np.all(y[:N] <= c.wait + ynext + tol))


def dual_extreme_points(N: int, costs) -> Iterator[DualPartition]:
    """Every interval partition of 1..N+2 with its dual vector.

    ``feasible`` marks whether the vector lies in the dual polytope; it is
    always true for position-uniform costs.
    """
    cw, cu = extended_costs(costs, N)
    for iv in partitions(N + 2):
        y = partition_dual(iv, cw, cu)
        yield DualPartition(iv, y, dual_feasible(y, costs, N))


def regular_costs(costs, N: int) -> bool:
    """True when every interval partition yields a dual-feasible point."""
    return all(p.feasible for p in dual_extreme_points(N, costs))


def dual_value(y, dec: FirstStageDecision, sc: Scenario, inst: Instance) -> float:
    """Dual recourse objective ``sum_j y_j b_j + lambda * A``."""
    if not dual_feasible(y, inst.costs, inst.N, tol=1e-9):
        raise ContractError("dual vector is outside the recourse dual polytope")
    y = np.asarray(y, dtype=float)[: inst.N + 1]
    return float(y @ balance_rhs(dec, sc, inst) + inst.costs.travel * travel_total(dec, sc))


def dual_recourse(dec: FirstStageDecision, sc: Scenario, inst: Instance) -> float:
    """Max of the dual objective over the feasible partition points."""
    return max(dual_value(p.y, dec, sc, inst) for p in dual_extreme_points(inst.N, inst.costs) if p.feasible)
