import numpy as np
import pytest

from hras.domain import CostStructure, FirstStageDecision, Scenario
from hras.moment import (MomentAmbiguity, build_mdhras, mdhras_worstcase, moment_worstcase_oracle,
                         tight_bounds)
from hras.optimize import moment_set, optimize
from hras.recourse import evaluate_recourse
from hras.saa import SaaModelSpec, build_saa, saa_objective
from hras.solver_io import solve

from conftest import flat_travel, interior_means, point_instance, random_decision, random_instance, random_scenarios


def test_tight_bounds_two_customers():
    tb = tight_bounds(CostStructure.uniform(2, 2, 1, 20, 2.0), 2)
    assert (tb.P1lower, tb.P1upper, tb.P2lower, tb.P2upper) == (-1, 22, -1, 24)
    assert tb.rho == (-1, 22) and tb.alpha == (-3, 24) and tb.alpha0 == (-3, 26)


def test_tight_bounds_degenerate_and_linear():
    tb = tight_bounds(CostStructure.uniform(3, 0, 0, 0, 0), 3)
    assert tb.rho == (0, 0) and tb.alpha == (0, 0) and tb.alpha0 == (0, 0)
    c = CostStructure.uniform(3, 2, 1, 20, 1.0)
    lo, hi = tight_bounds(c, 3, 1.0).alpha, tight_bounds(c, 3, 2.0).alpha
    assert (lo[0] - hi[0], hi[1] - lo[1]) == (1, 1)


def test_fixed_decision_matches_oracle():
    rng = np.random.default_rng(11)
    for _ in range(3):
        inst = random_instance(rng, 2)
        amb = MomentAmbiguity(*interior_means(rng, inst))
        dec = random_decision(rng, 2, inst.L)
        assert mdhras_worstcase(dec, inst, amb) == pytest.approx(moment_worstcase_oracle(dec, inst, amb), abs=1e-5)


def test_point_box_equals_saa():
    rng = np.random.default_rng(12)
    d = rng.integers(10, 40, 3).astype(float)
    t = rng.integers(10, 30, (4, 4)).astype(float)
    np.fill_diagonal(t, 0)
    inst = point_instance(d, t)
    amb = MomentAmbiguity(d, t)
    m = solve(build_mdhras(inst, amb), gap=1e-9).objective
    s = solve(build_saa(SaaModelSpec(inst, [Scenario(d, t)])), gap=1e-9).objective
    assert m == pytest.approx(s, abs=1e-6)


def test_jensen_lower_bound(example1):
    inst, dec, sc = example1
    d, t = sc.service, sc.travel
    wide = inst.with_support(d - 5, d + 5, np.where(t > 0, t - 5, 0), np.where(t > 0, t + 5, 0))
    amb = MomentAmbiguity(d, t)
    assert mdhras_worstcase(dec, wide, amb) >= evaluate_recourse(dec, sc, inst).cost - 1e-6


def test_dominates_empirical_distribution():
    rng = np.random.default_rng(13)
    inst = random_instance(rng, 3)
    scen = random_scenarios(rng, inst, 6, integer=False)
    amb = moment_set(inst, scen)
    dec = random_decision(rng, 3, inst.L)
    assert mdhras_worstcase(dec, inst, amb) >= saa_objective(dec, scen, inst) - 1e-6


def test_boundary_mean_rejected():
    rng = np.random.default_rng(14)
    inst = random_instance(rng, 2)
    d, t = interior_means(rng, inst)
    k = int(np.argmax(inst.serviceUpper - inst.serviceLower))
    d = d.copy()
    d[k] = inst.serviceUpper[k]
    with pytest.raises(ValueError, match="serviceMean"):
        build_mdhras(inst, MomentAmbiguity(d, t))


def test_double_bounds_and_enumeration_agree():
    rng = np.random.default_rng(15)
    inst = random_instance(rng, 3)
    amb = MomentAmbiguity(*interior_means(rng, inst))
    base = solve(build_mdhras(inst, amb), gap=1e-9).objective
    wide = solve(build_mdhras(inst, amb, bound_scale=2.0), gap=1e-9).objective
    assert wide == pytest.approx(base, abs=1e-6)
