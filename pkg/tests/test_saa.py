import warnings

import numpy as np
import pytest

from hras.domain import CostStructure, Scenario
from hras.formulation import decision_from_result
from hras.optimize import optimize
from hras.saa import SaaModelSpec, brute_force_saa, build_saa, saa_objective
from hras.solver_io import solve

from conftest import flat_travel, point_instance, random_instance, random_scenarios


def _two_customer(lam):
    travel = flat_travel(2, 20)
    sc = Scenario([30.0, 30.0], travel)
    return point_instance(sc.service, travel, lam=lam), [sc]


@pytest.mark.parametrize("lam,expected", [(0.0, 0.0), (1.0, 60.0)])
def test_two_customer_examples(lam, expected):
    inst, scen = _two_customer(lam)
    spec = SaaModelSpec(inst, scen)
    assert solve(build_saa(spec), gap=1e-9).objective == pytest.approx(expected, abs=1e-7)
    assert brute_force_saa(spec) == pytest.approx(expected, abs=1e-7)


def test_matches_brute_force_small():
    rng = np.random.default_rng(3)
    for _ in range(3):
        inst = random_instance(rng, 3)
        spec = SaaModelSpec(inst, random_scenarios(rng, inst, 3))
        assert solve(build_saa(spec), gap=1e-9).objective == pytest.approx(brute_force_saa(spec), rel=1e-5)


def test_single_customer_and_duplicates():
    rng = np.random.default_rng(4)
    inst = random_instance(rng, 1)
    (sc,) = random_scenarios(rng, inst, 1)
    one = brute_force_saa(SaaModelSpec(inst, [sc]))
    two = solve(build_saa(SaaModelSpec(inst, [sc, sc])), gap=1e-9).objective
    assert two == pytest.approx(one, abs=1e-7)


def test_recursion_reproduces_milp_objective():
    rng = np.random.default_rng(5)
    inst = random_instance(rng, 4)
    scen = random_scenarios(rng, inst, 4)
    res = solve(build_saa(SaaModelSpec(inst, scen)), gap=1e-9)
    dec = decision_from_result(res, inst.N)
    assert saa_objective(dec, scen, inst) == pytest.approx(res.objective, abs=1e-6)


def test_enumeration_matches_milp():
    rng = np.random.default_rng(6)
    inst = random_instance(rng, 4)
    scen = random_scenarios(rng, inst, 3)
    a = optimize("saa", inst, scen, method="enumerate")
    b = optimize("saa", inst, scen, method="milp", gap=1e-9)
    assert a.objective == pytest.approx(b.objective, rel=1e-7)


def test_spec_errors_and_warnings():
    inst, scen = _two_customer(0.0)
    with pytest.raises(ValueError):
        build_saa(SaaModelSpec(inst, []))
    far = Scenario([100.0, 30.0], scen[0].travel)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        build_saa(SaaModelSpec(inst, [far]))
    assert any("outside" in str(w.message) for w in rec)


def test_model_naming():
    inst, scen = _two_customer(1.0)
    names = set(build_saa(SaaModelSpec(inst, scen)).var_names())
    assert {"x_1_1", "a_1", "tau_1_2_1_2", "w_1_3", "u_1_1", "A_1"} <= names
