import numpy as np
import pytest

from hras.domain import CostStructure, FirstStageDecision, Instance, Scenario

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def flat_travel(n, value):
    t = np.full((n + 1, n + 1), float(value))
    np.fill_diagonal(t, 0.0)
    return t


def point_instance(service, travel, L=480.0, costs=(2.0, 1.0, 20.0), lam=0.5):
    """Instance whose support box is the single given point."""
    n = len(service)
    cs = CostStructure.uniform(n, *costs, lam)
    return Instance(n, L, cs, service, service, travel, travel)


@pytest.fixture
def example1():
    """Two customers: route (1,2), a=(0,30), all travel 20, d=(25,30)."""
    travel = flat_travel(2, 20)
    sc = Scenario([25.0, 30.0], travel)
    inst = point_instance(sc.service, travel)
    dec = FirstStageDecision.from_route((1, 2), [0.0, 30.0])
    return inst, dec, sc


def random_instance(rng, n, costs=(2.0, 1.0, 20.0), lam=0.5, L=None):
    """Integer box with some degenerate coordinates."""
    sl = rng.integers(5, 25, n).astype(float)
    sw = rng.integers(0, 25, n) * (rng.random(n) < 0.85)
    tl = rng.integers(5, 20, (n + 1, n + 1)).astype(float)
    tw = rng.integers(0, 12, (n + 1, n + 1)) * (rng.random((n + 1, n + 1)) < 0.85)
    np.fill_diagonal(tl, 0.0)
    np.fill_diagonal(tw, 0)
    L = float(rng.integers(30, 60) * n) if L is None else L
    return Instance(n, L, CostStructure.uniform(n, *costs, lam), sl, sl + sw, tl, tl + tw)


def random_scenarios(rng, inst, R, integer=True):
    out = []
    for _ in range(R):
        d = rng.uniform(inst.serviceLower, inst.serviceUpper)
        t = rng.uniform(inst.travelLower, inst.travelUpper)
        if integer:
            d, t = np.floor(d), np.floor(t)
            d = np.clip(d, inst.serviceLower, inst.serviceUpper)
            t = np.clip(t, inst.travelLower, inst.travelUpper)
        np.fill_diagonal(t, 0.0)
        out.append(Scenario(d, t))
    return out


def random_decision(rng, n, L):
    route = tuple(int(i) + 1 for i in rng.permutation(n))
    a = np.sort(rng.uniform(0, L, n))
    return FirstStageDecision.from_route(route, a)


def interior_means(rng, inst):
    """Means strictly inside non-degenerate intervals, equal to the bound otherwise."""
    f = rng.uniform(0.2, 0.8)
    d = inst.serviceLower + f * (inst.serviceUpper - inst.serviceLower)
    t = inst.travelLower + rng.uniform(0.2, 0.8, inst.travelLower.shape) * (inst.travelUpper - inst.travelLower)
    return d, t
