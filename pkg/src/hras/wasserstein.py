"""Worst-case expectation over a 1-Wasserstein ball (l1 ground metric) around R samples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import FirstStageDecision, Instance, Scenario
from .formulation import (cascade, first_stage_blocks, fix_decision, mccormick, pi_table,
                          require_regular, symmetry_breaking, tau_linearization)
from .moment import box_vertices, partition_values
from .recourse import dual_extreme_points, recourse_batch
from .solver_io import GE, LinearModel, LinExpr, expr, solve

EPSILON_PRESETS = (0.5, 5.0, 50.0)


@dataclass(frozen=True)
class WassersteinAmbiguity:
    samples: Sequence[Scenario]
    epsilon: float

    def check(self, inst: Instance, tol: float = 1e-9) -> None:
        if len(self.samples) == 0:
            raise ValueError("the Wasserstein ball needs at least one sample")
        if not self.epsilon >= 0:
            raise ValueError(f"radius must be >= 0, got {self.epsilon}")
        for r, sc in enumerate(self.samples):
            bad = sc.violations(inst, tol)
            if bad:
                raise ValueError(f"sample {r + 1} lies outside the support box: {bad[0]}")

    def with_epsilon(self, epsilon: float) -> "WassersteinAmbiguity":
        return WassersteinAmbiguity(self.samples, epsilon)


def rho_max(costs, N: int) -> float:
    """Upper bound on every |coefficient| of f in xi (l-infinity dual of the l1 metric)."""
    return pi_table(costs, N).max_abs + costs.travel


def box_diameter(inst: Instance) -> float:
    """l1 diameter of the support box over all service and off-diagonal travel coordinates."""
    off = ~np.eye(inst.N + 1, dtype=bool)
    return float((inst.serviceUpper - inst.serviceLower).sum()
                 + (inst.travelUpper - inst.travelLower)[off].sum())


def plateau_epsilon(inst: Instance) -> float:
    return rho_max(inst.costs, inst.N) * box_diameter(inst)


def _candidates(kappa: float, lo: float, hat: float, hi: float):
    """(value, l1 distance) pairs at the lower, sample and upper points."""
    return ((kappa * lo, hat - lo), (kappa * hat, 0.0), (kappa * hi, hi - hat))


def build_wdhras(inst: Instance, amb: WassersteinAmbiguity, symmetry: bool = False) -> LinearModel:
    amb.check(inst)
    n, c, lam = inst.N, inst.costs, inst.costs.travel
    require_regular(c, n)
    pt = pi_table(c, n)
    R = len(amb.samples)
    dl, du = inst.serviceLower, inst.serviceUpper
    tl, tu = inst.travelLower, inst.travelUpper

    m = LinearModel("wdhras")
    fs = tau_linearization(m, first_stage_blocks(m, inst))
    if symmetry:
        symmetry_breaking(m, fs)
    x, a = fs.x, fs.a
    rho = m.add_var("rhoW", 0.0, rho_max(c, n))

    def epigraph(name: str, kappa: float, lo: float, hat: float, hi: float) -> tuple[int, float, float]:
        cands = _candidates(kappa, lo, hat, hi)
        lb = kappa * hat
        ub = max(v for v, _ in cands)
        u = m.add_var(name, lb, ub)
        for tag, (val, dist) in zip(("lo", "hi"), (cands[0], cands[2])):
            if dist > 0:
                m.add_constr(f"{name}_{tag}", expr((u, 1.0), (rho, dist)), GE, val)
        return u, lb, ub

    obj = expr((rho, amb.epsilon))
    for r, sc in enumerate(amb.samples, start=1):
        dh, th = sc.service, sc.travel
        beta = [m.add_var(f"beta_{r}_{j}", -math.inf if j <= n + 1 else 0.0, math.inf)
                for j in range(1, n + 3)]
        for i in range(n):
            u, lo, hi = epigraph(f"u_{r}_{i + 1}_0", lam, tl[i + 1, 0], th[i + 1, 0], tu[i + 1, 0])
            obj.add(mccormick(m, f"psi_{r}_{i + 1}_0", x[i][n - 1], u, lo, hi), 1.0 / R)
        sigma, phi, zeta = {}, {}, {}
        for v in range(1, n + 3):
            kappa = pt(1, v) + lam
            for i in range(n):
                u, lo, hi = epigraph(f"u_{r}_0_{i + 1}_1_{v}", kappa, tl[0, i + 1], th[0, i + 1], tu[0, i + 1])
                sigma[(i, v)] = mccormick(m, f"sigma_{r}_0_{i + 1}_1_{v}", x[i][0], u, lo, hi)
        for j in range(2, n + 1):
            for v in range(j, n + 3):
                kappa = pt(j, v) + lam
                for (i, ip), t in fs.tau_at(j):
                    nm = f"{r}_{i + 1}_{ip + 1}_{j}_{v}"
                    u, lo, hi = epigraph(f"u_{nm}", kappa, tl[i + 1, ip + 1], th[i + 1, ip + 1],
                                         tu[i + 1, ip + 1])
                    phi[(i, ip, j, v)] = mccormick(m, f"phi_{nm}", t, u, lo, hi)
        for j in range(2, n + 2):
            for v in range(j, n + 3):
                kappa = pt(j, v)
                for i in range(n):
                    nm = f"{r}_{i + 1}_{j}_{v}"
                    nu, lo, hi = epigraph(f"nu_{nm}", kappa, dl[i], dh[i], du[i])
                    zeta[(i, j, v)] = mccormick(m, f"zeta_{nm}", x[i][j - 2], nu, lo, hi)

        def term(j: int, v: int, sigma=sigma, phi=phi, zeta=zeta) -> LinExpr:
            p = pt(j, v)
            e = LinExpr()
            if j == 1:
                e.add(a[0], -p)
                for i in range(n):
                    e.add(sigma[(i, v)], 1.0)
                return e
            if j <= n:
                e.add(a[j - 2], p).add(a[j - 1], -p)
                for (i, ip), _ in fs.tau_at(j):
                    e.add(phi[(i, ip, j, v)], 1.0)
            else:
                e.add(a[n - 1], p).add_const(-inst.L * p)
            for i in range(n):
                e.add(zeta[(i, j, v)], 1.0)
            return e

        cascade(m, f"casc_{r}", beta, n, term)
        for b in beta:
            obj.add(b, 1.0 / R)
    m.set_objective(obj)
    m.meta.update(model="wdhras", N=n, R=R, epsilon=amb.epsilon)
    return m


def wdhras_worstcase(dec: FirstStageDecision, inst: Instance, amb: WassersteinAmbiguity,
                     gap: float = 1e-9, **solve_kw) -> float:
    res = solve(fix_decision(build_wdhras(inst, amb), dec), gap=gap, **solve_kw)
    return res.objective


def _route_coordinates(route, inst: Instance, sample: Scenario):
    """Per-position coordinate data along the route.

    Returns lists of (position j, lower, sample, upper) for the depot-out arc (j=1),
    inter-customer arcs (j in 2..N), services (j in 2..N+1), and the return arc.
    """
    n = inst.N
    r = list(route)
    out_arc = (inst.travelLower[0, r[0]], sample.travel[0, r[0]], inst.travelUpper[0, r[0]])
    inter = [(j, inst.travelLower[r[j - 2], r[j - 1]], sample.travel[r[j - 2], r[j - 1]],
              inst.travelUpper[r[j - 2], r[j - 1]]) for j in range(2, n + 1)]
    serv = [(j, inst.serviceLower[r[j - 2] - 1], sample.service[r[j - 2] - 1],
             inst.serviceUpper[r[j - 2] - 1]) for j in range(2, n + 2)]
    ret = (inst.travelLower[r[-1], 0], sample.travel[r[-1], 0], inst.travelUpper[r[-1], 0])
    return out_arc, inter, serv, ret


def _best(kappa: float, lo: float, hat: float, hi: float, rho: float) -> float:
    return max(val - rho * dist for val, dist in _candidates(kappa, lo, hat, hi))


def g_r_value(rho: float, dec: FirstStageDecision, sample: Scenario, inst: Instance) -> float:
    """sup over the box of f(dec, xi) - rho * ||xi - sample||_1.

    Enumerates dual partitions; for each, the supremum separates by coordinate
    and each coordinate's piecewise-linear concave term peaks at its lower
    bound, sample value or upper bound.
    """
    if rho < 0:
        raise ValueError("rho must be >= 0")
    n, lam = inst.N, inst.costs.travel
    route = dec.route()
    a = dec.appointments
    out_arc, inter, serv, ret = _route_coordinates(route, inst, sample)
    inter_at = {j: (lo, hat, hi) for j, lo, hat, hi in inter}
    serv_at = {j: (lo, hat, hi) for j, lo, hat, hi in serv}
    det = np.empty(n + 1)  # coefficient-free part of b_j
    det[0] = -a[0]
    det[1:n] = a[:-1] - a[1:]
    det[n] = a[n - 1] - inst.L
    base = _best(lam, *ret, rho)
    best = -math.inf
    for part in dual_extreme_points(n, inst.costs):
        if not part.feasible:
            continue
        y = part.y
        total = base + float(y[: n + 1] @ det)
        total += _best(y[0] + lam, *out_arc, rho)
        for j in range(2, n + 2):
            if j <= n:
                total += _best(y[j - 1] + lam, *inter_at[j], rho)
            total += _best(y[j - 1], *serv_at[j], rho)
        best = max(best, total)
    return best


def wasserstein_oracle(dec: FirstStageDecision, inst: Instance, amb: WassersteinAmbiguity,
                       tol: float = 1e-7) -> float:
    """Golden-section search of eps*rho + mean_r g_r(rho) over [0, rho_max]."""
    amb.check(inst)
    eps = amb.epsilon

    def h(rho: float) -> float:
        return eps * rho + float(np.mean([g_r_value(rho, dec, s, inst) for s in amb.samples]))

    lo, hi = 0.0, rho_max(inst.costs, inst.N)
    inv = (math.sqrt(5) - 1) / 2
    c1, c2 = hi - inv * (hi - lo), lo + inv * (hi - lo)
    h1, h2 = h(c1), h(c2)
    while hi - lo > tol:
        if h1 <= h2:
            hi, c2, h2 = c2, c1, h1
            c1 = hi - inv * (hi - lo)
            h1 = h(c1)
        else:
            lo, c1, h1 = c1, c2, h2
            c2 = lo + inv * (hi - lo)
            h2 = h(c2)
    return min(h(lo), h(hi), h1, h2, h(0.0))


def box_worstcase(dec: FirstStageDecision, inst: Instance) -> float:
    """max over box vertices of f(dec, xi) (f is convex in xi, so a vertex attains the sup)."""
    route = dec.route()
    service, travel, _ = box_vertices(route, inst)
    return float(partition_values(route, dec.appointments, service, travel, inst).max())


def box_worstcase_oracle(inst: Instance) -> float:
    """min over routes and appointments of the box worst-case cost.

    For each route: LP in (a, theta) with theta >= f_p(a, vertex) for every
    vertex and dual partition; f_p is affine in a.
    """
    import itertools

    n = inst.N
    best = math.inf
    for route in itertools.permutations(range(1, n + 1)):
        service, travel, _ = box_vertices(route, inst)
        # f_p(a, xi) = y_p . b(a, xi) + lam*A(xi) is affine in a: split value at a=0 and the a-gradient
        F0 = partition_values(route, np.zeros(n), service, travel, inst)
        Y = np.array([p.y[: n + 1] for p in dual_extreme_points(n, inst.costs) if p.feasible])
        G = np.zeros((len(Y), n))  # d f_p / d a_j = -y_j + y_{j+1}
        for j in range(n):
            G[:, j] = -Y[:, j] + Y[:, j + 1]
        F0 = np.unique(F0, axis=0)
        m = LinearModel("box_oracle")
        av = [m.add_var(f"a_{j + 1}", 0.0, inst.L) for j in range(n)]
        th = m.add_var("theta", -math.inf, math.inf)
        for j in range(1, n):
            m.add_constr(f"order_{j + 1}", expr((av[j], 1), (av[j - 1], -1)), GE, 0)
        # only the maximal constant per partition matters since the gradient is vertex-free
        fmax = F0.max(axis=0)
        for p in range(len(Y)):
            m.add_constr(f"epi_{p}", expr((th, 1.0), *[(av[j], -G[p, j]) for j in range(n)]), GE, fmax[p])
        m.set_objective(expr((th, 1.0)))
        best = min(best, solve(m, gap=0.0).objective)
    return best


def saa_value_of(dec: FirstStageDecision, amb: WassersteinAmbiguity, inst: Instance) -> float:
    service = np.array([s.service for s in amb.samples])
    travel = np.array([s.travel for s in amb.samples])
    return float(recourse_batch(dec.route(), dec.appointments, service, travel, inst)["cost"].mean())


def route_wdhras(route, inst: Instance, amb: WassersteinAmbiguity) -> LinearModel:
    """W-DHRAS restricted to a fixed 1-based route: an LP in (a, rhoW, beta, u, nu).

    Only coordinates the route touches carry epigraph variables; the rest
    have zero coefficient and their supremum sits at the sample.
    """
    n, c, lam = inst.N, inst.costs, inst.costs.travel
    pt = pi_table(c, n)
    R = len(amb.samples)
    m = LinearModel("wdhras_route")
    a = [m.add_var(f"a_{j}", 0.0, inst.L) for j in range(1, n + 1)]
    for j in range(1, n):
        m.add_constr(f"order_{j + 1}", expr((a[j], 1), (a[j - 1], -1)), GE, 0)
    rho = m.add_var("rhoW", 0.0, rho_max(c, n))
    obj = expr((rho, amb.epsilon))

    def epigraph(name, kappa, lo, hat, hi):
        cands = _candidates(kappa, lo, hat, hi)
        u = m.add_var(name, kappa * hat, max(v for v, _ in cands))
        for tag, (val, dist) in zip(("lo", "hi"), (cands[0], cands[2])):
            if dist > 0:
                m.add_constr(f"{name}_{tag}", expr((u, 1.0), (rho, dist)), GE, val)
        return u

    for r, sc in enumerate(amb.samples, start=1):
        out_arc, inter, serv, ret = _route_coordinates(route, inst, sc)
        inter_at = {j: rest for j, *rest in inter}
        serv_at = {j: rest for j, *rest in serv}
        beta = [m.add_var(f"beta_{r}_{j}", -math.inf if j <= n + 1 else 0.0, math.inf)
                for j in range(1, n + 3)]
        obj.add(epigraph(f"u_{r}_ret", lam, *ret), 1.0 / R)
        uo = {v: epigraph(f"u_{r}_out_{v}", pt(1, v) + lam, *out_arc) for v in range(1, n + 3)}
        ui = {(j, v): epigraph(f"u_{r}_{j}_{v}", pt(j, v) + lam, *inter_at[j])
              for j in range(2, n + 1) for v in range(j, n + 3)}
        nu = {(j, v): epigraph(f"nu_{r}_{j}_{v}", pt(j, v), *serv_at[j])
              for j in range(2, n + 2) for v in range(j, n + 3)}

        def term(j, v, uo=uo, ui=ui, nu=nu):
            p = pt(j, v)
            if j == 1:
                return expr((a[0], -p), (uo[v], 1.0))
            if j <= n:
                return expr((a[j - 2], p), (a[j - 1], -p), (ui[(j, v)], 1.0), (nu[(j, v)], 1.0))
            return expr((a[n - 1], p), (nu[(j, v)], 1.0), constant=-inst.L * p)

        cascade(m, f"casc_{r}", beta, n, term)
        for b in beta:
            obj.add(b, 1.0 / R)
    m.set_objective(obj)
    return m
