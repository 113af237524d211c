import numpy as np
import pytest

from hras.domain import Scenario
from hras.formulation import fix_decision, pi_table
from hras.optimize import optimize, optimize_radii
from hras.recourse import evaluate_recourse
from hras.solver_io import solve
from hras.wasserstein import (WassersteinAmbiguity, _best, box_worstcase, build_wdhras, g_r_value, rho_max,
                              saa_value_of, wasserstein_oracle, wdhras_worstcase)

from conftest import random_decision, random_instance, random_scenarios


def test_epigraph_term_example():
    # lambda = 0.5, sample 20, upper 25, rho 0.3: max{10, 12.5 - 1.5}
    assert _best(0.5, 15.0, 20.0, 25.0, 0.3) == pytest.approx(11.0)


@pytest.fixture
def case():
    rng = np.random.default_rng(21)
    inst = random_instance(rng, 3)
    samples = random_scenarios(rng, inst, 3)
    dec = random_decision(rng, 3, inst.L)
    return inst, samples, dec


def test_g_r_endpoints(case):
    inst, samples, dec = case
    s = samples[0]
    assert g_r_value(1e6, dec, s, inst) == pytest.approx(evaluate_recourse(dec, s, inst).cost, abs=1e-6)
    assert g_r_value(0.0, dec, s, inst) == pytest.approx(box_worstcase(dec, inst), abs=1e-6)


def test_oracle_at_zero_radius(case):
    inst, samples, dec = case
    amb = WassersteinAmbiguity(samples, 0.0)
    assert wasserstein_oracle(dec, inst, amb) == pytest.approx(saa_value_of(dec, amb, inst), abs=1e-5)


def test_fixed_decision_matches_oracle(case):
    inst, samples, dec = case
    for eps in (0.5, 5.0):
        amb = WassersteinAmbiguity(samples, eps)
        assert wdhras_worstcase(dec, inst, amb) == pytest.approx(wasserstein_oracle(dec, inst, amb), abs=1e-4)


def test_oracle_monotone_in_radius(case):
    inst, samples, dec = case
    vals = [wasserstein_oracle(dec, inst, WassersteinAmbiguity(samples, e)) for e in (0, 0.5, 5, 50)]
    assert all(b >= a - 1e-7 for a, b in zip(vals, vals[1:]))


def test_cascade_value_equals_g_r_at_optimal_rho(case):
    inst, samples, dec = case
    amb = WassersteinAmbiguity(samples, 2.0)
    res = solve(fix_decision(build_wdhras(inst, amb), dec), gap=1e-9)
    rho = res.value("rhoW")
    direct = 2.0 * rho + np.mean([g_r_value(rho, dec, s, inst) for s in samples])
    assert direct == pytest.approx(res.objective, abs=1e-5)


def test_value_covers_own_training_cost(case):
    inst, samples, _ = case
    out = optimize("wdhras", inst, samples, 5.0, method="milp", gap=1e-9)
    amb = WassersteinAmbiguity(samples, 5.0)
    assert out.objective >= saa_value_of(out.decision, amb, inst) - 1e-6


def test_radii_enumeration_matches_milp(case):
    inst, samples, _ = case
    outs = optimize_radii(inst, samples, [0.0, 0.5, 50.0])
    for o in outs:
        assert o.objective == pytest.approx(optimize("wdhras", inst, samples, o.epsilon, method="milp",
                                                     gap=1e-9).objective, rel=1e-6)


def test_checks(case):
    inst, samples, _ = case
    with pytest.raises(ValueError):
        WassersteinAmbiguity(samples, -1.0).check(inst)
    with pytest.raises(ValueError):
        WassersteinAmbiguity([], 1.0).check(inst)
    bad = Scenario(inst.serviceUpper + 1, samples[0].travel)
    with pytest.raises(ValueError, match="outside"):
        build_wdhras(inst, WassersteinAmbiguity([bad], 1.0))


def test_rho_max_dominates_coefficients(case):
    inst, _, _ = case
    c, n = inst.costs, inst.N
    pt = pi_table(c, n)
    coefs = [abs(p) for _, p in pt.items()] + [abs(p + c.travel) for _, p in pt.items()]
    assert rho_max(c, n) >= max(coefs)
