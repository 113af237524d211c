"""Worst-case expectation over all distributions on the support box with given means."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import FirstStageDecision, Instance
from .formulation import (cascade, first_stage_blocks, fix_decision, mccormick, pi_table,
                          require_regular, symmetry_breaking, tau_linearization)
from .recourse import dual_extreme_points, route_sequences
from .solver_io import GE, LinearModel, LinExpr, expr, solve


@dataclass(frozen=True)
class MomentAmbiguity:
    serviceMean: np.ndarray
    travelMean: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "serviceMean", np.asarray(self.serviceMean, dtype=float))
        object.__setattr__(self, "travelMean", np.asarray(self.travelMean, dtype=float))

    @classmethod
    def from_instance(cls, inst: Instance) -> "MomentAmbiguity":
        if inst.serviceMean is None or inst.travelMean is None:
            raise ValueError("instance carries no means")
        return cls(inst.serviceMean, inst.travelMean)

    def check(self, inst: Instance) -> None:
        """Means must be interior to every non-degenerate support interval."""
        n = inst.N
        if self.serviceMean.shape != (n,) or self.travelMean.shape != (n + 1, n + 1):
            raise ValueError("mean shapes do not match the instance")
        off = ~np.eye(n + 1, dtype=bool)
        for name, m, lo, hi, mask in (
                ("serviceMean", self.serviceMean, inst.serviceLower, inst.serviceUpper, np.ones(n, bool)),
                ("travelMean", self.travelMean, inst.travelLower, inst.travelUpper, off)):
            degenerate = lo == hi
            bad = mask & np.where(degenerate, m != lo, (m <= lo) | (m >= hi))
            if bad.any():
                idx = tuple(int(k) for k in np.argwhere(bad)[0])
                raise ValueError(f"{name}{list(idx)} is not interior to its support interval")


@dataclass(frozen=True)
class TightBounds:
    P1lower: float
    P1upper: float
    P2lower: float
    P2upper: float
    lam: float

    @property
    def rho(self) -> tuple[float, float]:
        return self.P1lower, self.P1upper

    @property
    def alpha(self) -> tuple[float, float]:
        return self.P1lower - self.lam, self.P1upper + self.lam

    @property
    def alpha0(self) -> tuple[float, float]:
        return self.P2lower - self.lam, self.P2upper + self.lam

    def delta_ub(self, pi_jv: float) -> float:
        return pi_jv - self.P1lower

    def gamma_ub(self, pi_jv: float) -> float:
        return pi_jv + 2 * self.lam - self.P1lower

    def gamma0_ub(self, pi_1v: float) -> float:
        return pi_1v + 2 * self.lam - self.P2lower


def tight_bounds(costs, N: int, lam: float = None) -> TightBounds:
    lam = costs.travel if lam is None else float(lam)
    pt = pi_table(costs, N)
    p1l, p1u = pt.range_over(2, N + 1)
    p2l, p2u = pt.range_over(1, 1)
    return TightBounds(p1l, p1u, p2l, p2u, lam)


def _widen(lo: float, hi: float, scale: float) -> tuple[float, float]:
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    return mid - scale * half, mid + scale * half


def build_mdhras(inst: Instance, amb: MomentAmbiguity, symmetry: bool = False,
                 bound_scale: float = 1.0) -> LinearModel:
    """M-DHRAS MILP. ``bound_scale`` > 1 widens every big-M bound (for validity checks)."""
    amb.check(inst)
    n, c, lam = inst.N, inst.costs, inst.costs.travel
    require_regular(c, n)
    pt = pi_table(c, n)
    tb = tight_bounds(c, n, lam)
    dl, dd = inst.serviceLower, inst.serviceUpper - inst.serviceLower
    tl, dt = inst.travelLower, inst.travelUpper - inst.travelLower
    mud, mut = amb.serviceMean, amb.travelMean
    s = float(bound_scale)

    m = LinearModel("mdhras")
    fs = tau_linearization(m, first_stage_blocks(m, inst))
    if symmetry:
        symmetry_breaking(m, fs)
    x, a = fs.x, fs.a

    rlo, rhi = _widen(*tb.rho, s)
    alo, ahi = _widen(*tb.alpha, s)
    a0lo, a0hi = _widen(*tb.alpha0, s)
    rho = [m.add_var(f"rho_{i + 1}", rlo, rhi) for i in range(n)]
    alpha = {(i, ip): m.add_var(f"alpha_{i + 1}_{ip + 1}", alo, ahi)
             for i in range(n) for ip in range(n) if i != ip}
    alpha0 = [m.add_var(f"alpha_0_{i + 1}", a0lo, a0hi) for i in range(n)]
    beta = [m.add_var(f"beta_{j}", -np.inf, np.inf) for j in range(1, n + 3)]

    # products with first-stage variables
    eta = {}
    for (i, ip, j), t in fs.tau.items():
        eta[(i, ip, j)] = mccormick(m, f"eta_{i + 1}_{ip + 1}_{j - 1}_{j}", t, alpha[(i, ip)], alo, ahi)
    psi0 = [mccormick(m, f"psi_0_{i + 1}", x[i][0], alpha0[i], a0lo, a0hi) for i in range(n)]
    zeta = {(i, j): mccormick(m, f"zeta_{i + 1}_{j}", x[i][j - 2], rho[i], rlo, rhi)
            for j in range(2, n + 2) for i in range(n)}

    sigma0, phi, auxxi = {}, {}, {}
    for v in range(1, n + 3):
        p = pt(1, v)
        ub = s * tb.gamma0_ub(p)
        for i in range(n):
            g = m.add_var(f"gamma_0_{i + 1}_1_{v}", 0.0, ub)
            m.add_constr(f"gdef_0_{i + 1}_1_{v}", expr((g, 1), (alpha0[i], 1)), GE, p + lam)
            sigma0[(i, v)] = mccormick(m, f"sigma_0_{i + 1}_1_{v}", x[i][0], g, 0.0, ub)
    for j in range(2, n + 1):
        for v in range(j, n + 3):
            p = pt(j, v)
            ub = s * tb.gamma_ub(p)
            for (i, ip), t in fs.tau_at(j):
                nm = f"{i + 1}_{ip + 1}_{j}_{v}"
                g = m.add_var(f"gamma_{nm}", 0.0, ub)
                m.add_constr(f"gdef_{nm}", expr((g, 1), (alpha[(i, ip)], 1)), GE, p + lam)
                phi[(i, ip, j, v)] = mccormick(m, f"phi_{nm}", t, g, 0.0, ub)
    for j in range(2, n + 2):
        for v in range(j, n + 3):
            p = pt(j, v)
            ub = s * tb.delta_ub(p)
            for i in range(n):
                nm = f"{i + 1}_{j}_{v}"
                dv = m.add_var(f"delta_{nm}", 0.0, ub)
                m.add_constr(f"ddef_{nm}", expr((dv, 1), (rho[i], 1)), GE, p)
                auxxi[(i, j, v)] = mccormick(m, f"auxXi_{nm}", x[i][j - 2], dv, 0.0, ub)

    def term(j: int, v: int) -> LinExpr:
        p = pt(j, v)
        e = LinExpr()
        if j == 1:
            e.add(a[0], -p)
            for i in range(n):
                e.add(x[i][0], tl[0, i + 1] * (p + lam)).add(psi0[i], -tl[0, i + 1])
                e.add(sigma0[(i, v)], dt[0, i + 1])
            return e
        if j <= n:
            e.add(a[j - 2], p).add(a[j - 1], -p)
        else:
            e.add(a[n - 1], p).add_const(-inst.L * p)
        for i in range(n):
            e.add(x[i][j - 2], dl[i] * p).add(zeta[(i, j)], -dl[i]).add(auxxi[(i, j, v)], dd[i])
        if j <= n:
            for (i, ip), t in fs.tau_at(j):
                e.add(t, tl[i + 1, ip + 1] * (p + lam)).add(eta[(i, ip, j)], -tl[i + 1, ip + 1])
                e.add(phi[(i, ip, j, v)], dt[i + 1, ip + 1])
        return e

    cascade(m, "casc", beta, n, term)

    obj = expr(*[(rho[i], mud[i]) for i in range(n)], *[(b, 1.0) for b in beta])
    for (i, ip, j), ev in eta.items():
        obj.add(ev, mut[i + 1, ip + 1])
    for i in range(n):
        obj.add(x[i][n - 1], lam * mut[i + 1, 0]).add(psi0[i], mut[0, i + 1])
    m.set_objective(obj)
    m.meta.update(model="mdhras", N=n, bound_scale=s)
    return m


def mdhras_worstcase(dec: FirstStageDecision, inst: Instance, amb: MomentAmbiguity,
                     gap: float = 1e-9, **solve_kw) -> float:
    """Worst-case expected cost of a fixed decision via the MILP with x and a fixed."""
    res = solve(fix_decision(build_mdhras(inst, amb), dec), gap=gap, **solve_kw)
    return res.objective


def _route_coords(route, inst: Instance):
    """Service and arc coordinates that the route's recourse cost depends on."""
    nodes = (0, *route, 0)
    arcs = list(zip(nodes[:-1], nodes[1:]))
    return arcs


def box_vertices(route, inst: Instance):
    """Service/travel arrays for every vertex of the box over the route's coordinates.

    Unused coordinates sit at their lower bound. Returns ``(service, travel, arcs)``.
    """
    n = inst.N
    arcs = _route_coords(route, inst)
    k = n + len(arcs)
    bits = ((np.arange(2 ** k)[:, None] >> np.arange(k)) & 1).astype(bool)
    service = np.where(bits[:, :n], inst.serviceUpper, inst.serviceLower)
    travel = np.broadcast_to(inst.travelLower, (2 ** k, n + 1, n + 1)).copy()
    for c, (p, q) in enumerate(arcs):
        travel[:, p, q] = np.where(bits[:, n + c], inst.travelUpper[p, q], inst.travelLower[p, q])
    return service, travel, arcs


def partition_values(route, a, service, travel, inst: Instance) -> np.ndarray:
    """Dual objective of every feasible partition at every scenario: shape (S, P)."""
    n = inst.N
    a = np.asarray(a, dtype=float)
    d_seq, t_out, t_inter, t_ret = route_sequences(route, service, travel)
    S = service.shape[0]
    b = np.empty((S, n + 1))
    b[:, 0] = t_out - a[0]
    for j in range(1, n):
        b[:, j] = a[j - 1] - a[j] + d_seq[:, j - 1] + t_inter[:, j - 1]
    b[:, n] = a[n - 1] - inst.L + d_seq[:, n - 1]
    Y = np.array([p.y[: n + 1] for p in dual_extreme_points(n, inst.costs) if p.feasible])
    A = t_out + t_inter.sum(axis=1) + t_ret
    return b @ Y.T + inst.costs.travel * A[:, None]


def moment_worstcase_oracle(dec: FirstStageDecision, inst: Instance, amb: MomentAmbiguity) -> float:
    """min over (rho, alpha, theta) of mean terms + theta, theta >= f_p(v) - rho.d(v) - alpha.t(v).

    One constraint per (box vertex, dual partition); every route coordinate keeps
    its own multiplier, including the return arc.
    """
    route = dec.route()
    n = inst.N
    service, travel, arcs = box_vertices(route, inst)
    F = partition_values(route, dec.appointments, service, travel, inst)
    m = LinearModel("moment_oracle")
    rho = [m.add_var(f"rho_{i + 1}", -np.inf, np.inf) for i in range(n)]
    alpha = [m.add_var(f"alpha_{p}_{q}", -np.inf, np.inf) for p, q in arcs]
    theta = m.add_var("theta", -np.inf, np.inf)
    seen = set()
    for s in range(service.shape[0]):
        key = (tuple(service[s]), tuple(travel[s, p, q] for p, q in arcs))
        if key in seen:
            continue
        seen.add(key)
        fmax_terms = [(theta, 1.0), *[(rho[i], service[s, i]) for i in range(n)],
                      *[(alpha[c], travel[s, p, q]) for c, (p, q) in enumerate(arcs)]]
        for pidx in range(F.shape[1]):
            m.add_constr(f"epi_{s}_{pidx}", expr(*fmax_terms), GE, F[s, pidx])
    obj = expr((theta, 1.0), *[(rho[i], amb.serviceMean[i]) for i in range(n)],
               *[(alpha[c], amb.travelMean[p, q]) for c, (p, q) in enumerate(arcs)])
    m.set_objective(obj)
    return solve(m, gap=0.0).objective


def route_mdhras(route, inst: Instance, amb: MomentAmbiguity) -> LinearModel:
    """M-DHRAS restricted to a fixed 1-based route: an LP without big-M bounds.

    Duals of unused arcs are zero and the return-arc dual equals lambda, so only
    rho, the duals of the N used outbound/inter-customer arcs, beta, and the
    positive-part variables remain.
    """
    n, c, lam = inst.N, inst.costs, inst.costs.travel
    pt = pi_table(c, n)
    r = list(route)
    dl, dd = inst.serviceLower, inst.serviceUpper - inst.serviceLower
    tl, dt = inst.travelLower, inst.travelUpper - inst.travelLower
    arcs = [(0, r[0])] + [(r[j - 2], r[j - 1]) for j in range(2, n + 1)]  # arc entering position j
    m = LinearModel("mdhras_route")
    a = [m.add_var(f"a_{j}", 0.0, inst.L) for j in range(1, n + 1)]
    for j in range(1, n):
        m.add_constr(f"order_{j + 1}", expr((a[j], 1), (a[j - 1], -1)), GE, 0)
    rho = [m.add_var(f"rho_{i}", -np.inf, np.inf) for i in range(1, n + 1)]
    alpha = [m.add_var(f"alpha_{p}_{q}", -np.inf, np.inf) for p, q in arcs]
    beta = [m.add_var(f"beta_{j}", -np.inf, np.inf) for j in range(1, n + 3)]
    gamma, delta = {}, {}
    for j in range(1, n + 1):
        for v in range(j, n + 3):
            g = gamma[(j, v)] = m.add_var(f"gamma_{j}_{v}", 0.0, np.inf)
            m.add_constr(f"gdef_{j}_{v}", expr((g, 1), (alpha[j - 1], 1)), GE, pt(j, v) + lam)
    for j in range(2, n + 2):
        cust = r[j - 2]
        for v in range(j, n + 3):
            dv = delta[(j, v)] = m.add_var(f"delta_{j}_{v}", 0.0, np.inf)
            m.add_constr(f"ddef_{j}_{v}", expr((dv, 1), (rho[cust - 1], 1)), GE, pt(j, v))

    def term(j, v):
        p = pt(j, v)
        e = LinExpr()
        if j == 1:
            e.add(a[0], -p)
        elif j <= n:
            e.add(a[j - 2], p).add(a[j - 1], -p)
        else:
            e.add(a[n - 1], p).add_const(-inst.L * p)
        if j <= n:
            pq = arcs[j - 1]
            e.add_const(tl[pq] * (p + lam)).add(alpha[j - 1], -tl[pq]).add(gamma[(j, v)], dt[pq])
        if j >= 2:
            cust = r[j - 2]
            e.add_const(dl[cust - 1] * p).add(rho[cust - 1], -dl[cust - 1]).add(delta[(j, v)], dd[cust - 1])
        return e

    cascade(m, "casc", beta, n, term)
    obj = expr(*[(rho[i], amb.serviceMean[i]) for i in range(n)], *[(b, 1.0) for b in beta],
               *[(alpha[k], amb.travelMean[pq]) for k, pq in enumerate(arcs)],
               constant=lam * amb.travelMean[r[-1], 0])
    m.set_objective(obj)
    return m
