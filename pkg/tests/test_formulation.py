import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hras.domain import CostStructure, route_to_matrix
from hras.formulation import (FirstStageVars, cascade, first_stage_blocks, mccormick, pi_table, sbc_holds,
                              symmetry_breaking, tau_linearization)
from hras.recourse import dual_extreme_points
from hras.solver_io import EQ, LinearModel, expr, solve

from conftest import flat_travel, point_instance


def test_pi_table_two_customers():
    pt = pi_table(CostStructure.uniform(2, 2, 1, 20, 0), 2)
    expect = {(1, 1): -1, (1, 2): 1, (1, 3): 4, (1, 4): 24, (2, 2): -1, (2, 3): 2, (2, 4): 22,
              (3, 3): 0, (3, 4): 20, (4, 4): 0}
    assert dict(pt.items()) == expect


def test_pi_diagonal_and_zero_costs():
    c = CostStructure([1, 2, 3], [4, 5, 6], 7, 0)
    pt = pi_table(c, 3)
    assert [pt(v, v) for v in range(1, 6)] == [-4, -5, -6, 0, 0]
    assert all(v == 0 for _, v in pi_table(CostStructure.uniform(3, 0, 0, 0, 0), 3).items())


@given(st.integers(1, 5), st.sampled_from([(2, 1, 20), (1, 5, 7.5), (3, 3, 3)]))
def test_pi_matches_dual_extreme_points(n, costs):
    c = CostStructure.uniform(n, *costs, 0)
    pt = pi_table(c, n)
    for part in dual_extreme_points(n, c):
        for k, v in part.intervals:
            for j in range(k, v + 1):
                assert part.y[j - 1] == pytest.approx(pt(j, v))


def _fs_model(n):
    m = LinearModel("fs")
    fs = first_stage_blocks(m, point_instance(np.zeros(n), flat_travel(n, 0)))
    return m, fs


def test_first_stage_counts():
    m, fs = _fs_model(3)
    eqs = [c for c in m.constraints() if c.sense == EQ]
    assert len(eqs) == 6 and m.num_binaries == 9
    assert len([c for c in m.constraints() if c.name.startswith("order_")]) == 2
    vs = list(m.variables())
    assert all(vs[i].ub == 480 and vs[i].lb == 0 for i in fs.a)
    m1, _ = _fs_model(1)
    assert m1.num_constraints == 2 and m1.num_binaries == 1


def test_identity_zero_schedule_is_feasible():
    m, fs = _fs_model(4)
    vals = np.zeros(m.num_vars)
    for i in range(4):
        vals[fs.x[i][i]] = 1
    assert m.check_solution(vals) == []


def _tau_extremes(n, x, linking):
    m, fs = _fs_model(n)
    tau_linearization(m, fs, linking=linking)
    for i in range(n):
        for j in range(n):
            m.set_bounds(f"x_{i + 1}_{j + 1}", x[i, j], x[i, j])
    total = expr(*[(t, 1.0) for t in fs.tau.values()])
    lo = solve(_with_obj(m, total), gap=0)
    neg = expr(*[(t, -1.0) for t in fs.tau.values()])
    hi = solve(_with_obj(m, neg), gap=0)
    return lo, hi, fs


def _with_obj(m, e):
    c = m.copy()
    c.set_objective(e)
    return c


def test_tau_exact_on_binary_points():
    # arbitrary binaries (not permutations): only the McCormick rows, no assignment rows
    rng = np.random.default_rng(0)
    n = 4
    for _ in range(20):
        x = (rng.random((n, n)) < 0.5).astype(float)
        m = LinearModel("tau")
        xv = [[m.add_var(f"x_{i + 1}_{j + 1}", x[i, j], x[i, j]) for j in range(n)] for i in range(n)]
        fs = tau_linearization(m, FirstStageVars(n, xv, []), linking=False)
        target = sum(x[i, j - 2] * x[ip, j - 1] for (i, ip, j) in fs.tau)
        # each tau has its own interval, so equal min and max of the sum pin every tau
        lo = solve(_with_obj(m, expr(*[(t, 1.0) for t in fs.tau.values()])), gap=0).objective
        hi = -solve(_with_obj(m, expr(*[(t, -1.0) for t in fs.tau.values()])), gap=0).objective
        assert lo == pytest.approx(target) and hi == pytest.approx(target)


@pytest.mark.parametrize("linking", [True, False])
def test_tau_products_on_permutations(linking):
    n = 4
    for route in [(1, 2, 3, 4), (3, 1, 4, 2), (4, 3, 2, 1)]:
        x = route_to_matrix(route).astype(float)
        lo, hi, fs = _tau_extremes(n, x, linking)
        assert lo.objective == pytest.approx(n - 1) and -hi.objective == pytest.approx(n - 1)
        for (i, ip, j), t in fs.tau.items():
            assert lo.values[t] == pytest.approx(x[i, j - 2] * x[ip, j - 1])


def test_mccormick_exact_at_binary():
    for b in (0.0, 1.0):
        for c in (-3.0, 0.5, 7.0):
            m = LinearModel("mc")
            bv = m.add_var("b", b, b)
            cv = m.add_var("c", c, c)
            p = mccormick(m, "p", bv, cv, -3.0, 7.0)
            for sign in (1.0, -1.0):
                m.set_objective(expr((p, sign)))
                assert solve(m, gap=0).values[p] == pytest.approx(b * c)


def test_mccormick_rejects_empty_interval():
    m = LinearModel("mc")
    with pytest.raises(ValueError):
        mccormick(m, "p", m.add_var("b"), m.add_var("c"), 2, 1)


def test_sbc_examples():
    assert sbc_holds(route_to_matrix((2, 1, 3, 4, 6, 5)))
    assert not sbc_holds(route_to_matrix((2, 4, 3, 6, 1, 5)))
    m, fs = _fs_model(3)
    assert symmetry_breaking(m, fs) == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6))
def test_sbc_rows_accept_sbc_routes(n):
    # the checker and the model rows agree on routes the checker keeps
    kept = [r for r in itertools.permutations(range(1, n + 1)) if sbc_holds(route_to_matrix(r))]
    assert kept
    m, fs = _fs_model(n)
    symmetry_breaking(m, fs)
    for r in kept[:5]:
        vals = np.zeros(m.num_vars)
        x = route_to_matrix(r)
        for i in range(n):
            for j in range(n):
                vals[fs.x[i][j]] = x[i, j]
        assert m.check_solution(vals) == []


def test_cascade_interval_count():
    m = LinearModel("c")
    n = 3
    beta = [m.add_var(f"b_{j}", -np.inf, np.inf) for j in range(1, n + 3)]
    cascade(m, "casc", beta, n, lambda j, v: expr(constant=0.0))
    assert m.num_constraints == (n + 2) * (n + 3) // 2
