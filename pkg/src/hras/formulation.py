"""Building blocks shared by the SAA, moment and Wasserstein MILP builders.

Variable names (1-based): ``x_i_j`` customer i at position j, ``a_j`` appointment
of position j, ``tau_i_ip_jm_j`` the product x_{i,j-1} * x_{ip,j}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domain import FirstStageDecision, Instance
from .recourse import extended_costs, regular_costs
from .solver_io import BINARY, EQ, GE, LE, LinearModel, LinExpr, SolveResult, expr


class PiTable:
    """pi_{j,v} = -c^u_v + sum_{l=j}^{v-1} c^w_l for 1 <= j <= v <= N+2."""

    def __init__(self, costs, N: int):
        self.N = N
        cw, cu = extended_costs(costs, N)
        m = N + 2
        vals = np.full((m + 1, m + 1), np.nan)
        for v in range(1, m + 1):
            acc = 0.0 - cu[v - 1]
            vals[v, v] = acc
            for j in range(v - 1, 0, -1):
                acc += cw[j - 1]
                vals[j, v] = acc
        vals.setflags(write=False)
        self.values = vals

    def __call__(self, j: int, v: int) -> float:
        return float(self.values[j, v])

    def items(self):
        m = self.N + 2
        for j in range(1, m + 1):
            for v in range(j, m + 1):
                yield (j, v), float(self.values[j, v])

    def range_over(self, jlo: int, jhi: int) -> tuple[float, float]:
        """(min, max) of pi_{j,v} over j in [jlo, jhi], v in [j, N+2]."""
        vals = [self.values[j, v] for j in range(jlo, jhi + 1) for v in range(j, self.N + 3)]
        return float(min(vals)), float(max(vals))

    @property
    def max_abs(self) -> float:
        return float(np.nanmax(np.abs(self.values)))


def pi_table(costs, N: int) -> PiTable:
    return PiTable(costs, N)


@dataclass
class FirstStageVars:
    N: int
    x: list  # x[i][j] (0-based) -> variable index
    a: list  # a[j] (0-based) -> variable index
    tau: dict = field(default_factory=dict)  # (i, ip, j) 0-based customers, 1-based position j in [2, N]

    def tau_at(self, j: int):
        """Yield ``((i, ip), var)`` for products x_{i,j-1} x_{ip,j}."""
        for (i, ip, jj), var in self.tau.items():
            if jj == j:
                yield (i, ip), var


@dataclass
class McCormickBlock:
    product: str
    factors: tuple  # (binary-like factor, continuous factor)
    lower: float
    upper: float
    constraints: tuple
    index: int = -1


def first_stage_blocks(model: LinearModel, inst: Instance) -> FirstStageVars:
    """Assignment (permutation) and nondecreasing appointment constraints."""
    n = inst.N
    x = [[model.add_var(f"x_{i + 1}_{j + 1}", 0, 1, BINARY) for j in range(n)] for i in range(n)]
    a = [model.add_var(f"a_{j + 1}", 0.0, inst.L) for j in range(n)]
    for i in range(n):
        model.add_constr(f"assign_cust_{i + 1}", expr(*[(x[i][j], 1) for j in range(n)]), EQ, 1)
    for j in range(n):
        model.add_constr(f"assign_pos_{j + 1}", expr(*[(x[i][j], 1) for i in range(n)]), EQ, 1)
    for j in range(1, n):
        model.add_constr(f"order_{j + 1}", expr((a[j], 1), (a[j - 1], -1)), GE, 0)
    return FirstStageVars(n, x, a)


def tau_linearization(model: LinearModel, fs: FirstStageVars, linking: bool = True) -> FirstStageVars:
    """tau = x_{i,j-1} * x_{ip,j} for i != ip, j in [2, N]; tau continuous in [0, 1].

    Position N+1 is omitted because x_{i,N+1} = 0. With ``linking`` the valid
    equalities sum_ip tau = x_{i,j-1} and sum_i tau = x_{ip,j} are added; they
    hold at every permutation matrix and tighten the relaxation.
    """
    n = fs.N
    for j in range(2, n + 1):
        for i in range(n):
            for ip in range(n):
                if i == ip:
                    continue
                nm = f"tau_{i + 1}_{ip + 1}_{j - 1}_{j}"
                t = model.add_var(nm, 0.0, 1.0)
                xa, xb = fs.x[i][j - 2], fs.x[ip][j - 1]
                model.add_constr(f"{nm}_le1", expr((t, 1), (xa, -1)), LE, 0)
                model.add_constr(f"{nm}_le2", expr((t, 1), (xb, -1)), LE, 0)
                model.add_constr(f"{nm}_ge", expr((t, 1), (xa, -1), (xb, -1)), GE, -1)
                fs.tau[(i, ip, j)] = t
        if linking:
            for i in range(n):
                model.add_constr(f"taulink_out_{i + 1}_{j}",
                                 expr(*[(fs.tau[(i, ip, j)], 1) for ip in range(n) if ip != i],
                                      (fs.x[i][j - 2], -1)), EQ, 0)
                model.add_constr(f"taulink_in_{i + 1}_{j}",
                                 expr(*[(fs.tau[(ip, i, j)], 1) for ip in range(n) if ip != i],
                                      (fs.x[i][j - 1], -1)), EQ, 0)
    return fs


def mccormick(model: LinearModel, name: str, bvar: int, cvar: int, lo: float, hi: float,
              keep: Optional[list] = None) -> int:
    """Add p = b * c for b in {0,1} and c in [lo, hi]; returns the index of p.

    The four inequalities are exact whenever b is at 0 or 1 and c within bounds.
    """
    if lo > hi:
        raise ValueError(f"{name}: empty interval [{lo}, {hi}]")
    p = model.add_var(name, min(lo, 0.0), max(hi, 0.0))
    cons = (f"{name}_m1", f"{name}_m2", f"{name}_m3", f"{name}_m4")
    model.add_constr(cons[0], expr((p, 1), (bvar, -lo)), GE, 0)
    model.add_constr(cons[1], expr((p, 1), (bvar, -hi)), LE, 0)
    model.add_constr(cons[2], expr((p, 1), (cvar, -1), (bvar, -lo)), LE, -lo)
    model.add_constr(cons[3], expr((p, 1), (cvar, -1), (bvar, -hi)), GE, -hi)
    if keep is not None:
        keep.append(McCormickBlock(name, (model.var_names()[bvar], model.var_names()[cvar]), lo, hi, cons, p))
    return p


def symmetry_breaking(model: LinearModel, fs: FirstStageVars) -> int:
    """Lexicographic route-order constraints for one homogeneous customer group.

    x_{1,j} >= x_{1,j+1} for j in [2, N-2]; x_{i,j} <= sum_{l<i} x_{l,j-1} for
    i in [2, N], j in [3, N-1]. Returns the number of constraints added.
    """
    n, x = fs.N, fs.x
    count = 0
    for j in range(2, n - 1):
        model.add_constr(f"sbc1_{j}", expr((x[0][j - 1], 1), (x[0][j], -1)), GE, 0)
        count += 1
    for i in range(2, n + 1):
        for j in range(3, n):
            e = expr((x[i - 1][j - 1], 1), *[(x[l - 1][j - 2], -1) for l in range(1, i)])
            model.add_constr(f"sbc2_{i}_{j}", e, LE, 0)
            count += 1
    return count


def sbc_holds(assignment) -> bool:
    """Check a permutation matrix against both symmetry-breaking families."""
    x = np.asarray(assignment)
    n = x.shape[0]
    for j in range(2, n - 1):
        if x[0, j - 1] < x[0, j]:
            return False
    for i in range(2, n + 1):
        for j in range(3, n):
            if x[i - 1, j - 1] > x[: i - 1, j - 2].sum():
                return False
    return True


def cascade(model: LinearModel, prefix: str, beta: list, N: int,
            term: Callable[[int, int], LinExpr]) -> None:
    """Add sum_{j=k}^{v} beta_j >= C_{k,v} for every interval [k, v] of 1..N+2.

    C_{k,v} = sum_{j=k}^{min(v, N+1)} term(j, v); position N+2 contributes nothing.
    """
    m = N + 2
    for v in range(1, m + 1):
        acc = LinExpr()
        for k in range(v, 0, -1):
            if k <= N + 1:
                acc.add_expr(term(k, v))
            lhs = expr(*[(beta[j - 1], 1.0) for j in range(k, v + 1)])
            model.add_constr(f"{prefix}_{k}_{v}", lhs, GE, acc)


def require_regular(costs, N: int) -> None:
    if not regular_costs(costs, N):
        raise ValueError("cost structure yields interval partitions outside the recourse dual "
                         "polytope; the partition-based reformulations need position-regular costs")


def fix_decision(model: LinearModel, dec: FirstStageDecision) -> LinearModel:
    """Copy of ``model`` with x and a fixed to ``dec``."""
    m = model.copy()
    n = dec.N
    for i in range(n):
        for j in range(n):
            v = float(dec.assignment[i, j])
            m.set_bounds(f"x_{i + 1}_{j + 1}", v, v)
    for j in range(n):
        v = float(dec.appointments[j])
        m.set_bounds(f"a_{j + 1}", v, v)
    return m


def decision_from_result(res: SolveResult, N: int) -> FirstStageDecision:
    vals = res.as_dict()
    x = np.array([[round(vals[f"x_{i + 1}_{j + 1}"]) for j in range(N)] for i in range(N)])
    a = np.array([vals[f"a_{j + 1}"] for j in range(N)])
    a = np.maximum.accumulate(np.clip(a, 0.0, None))  # remove solver-tolerance dips
    return FirstStageDecision(x, a)
