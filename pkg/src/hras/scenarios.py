"""Seeded instance and scenario generation, including misspecified test distributions.

Every random draw comes from a child stream keyed by (seed, purpose, index),
so changing the number of scenarios never reshuffles earlier ones.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import CostStructure, Instance, Scenario

COST_PRESETS = {"a": (2.0, 1.0, 20.0), "b": (1.0, 5.0, 7.5)}
LAMBDA_PRESETS = (0.5, 1.0, 2.0)
OOS_SETS = ("set1", "set2", "set3", "set4", "set5")
DELTAS = (0.1, 0.25, 0.5)

# stream tags
_LATENT, _TRAIN, _OOS = 1, 2, 3


@dataclass(frozen=True)
class GenConfig:
    N: int = 6
    seed: int = 0
    costs: str = "a"  # preset key or "w,u,o"
    lam: float = 0.5
    L: float = 480.0
    serviceMeanRange: tuple = (25.0, 35.0)
    serviceCv: float = 0.5
    serviceSupport: tuple = (10.0, 50.0)
    travelSupport: tuple = (15.0, 25.0)
    shiftedTravel: tuple = (25.0, 35.0)  # travel law of set2
    rounding: bool = True

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        for lo, hi in (self.serviceSupport, self.travelSupport, self.shiftedTravel):
            if not 0 <= lo <= hi:
                raise ValueError(f"support [{lo}, {hi}] must satisfy 0 <= lower <= upper")

    def cost_structure(self) -> CostStructure:
        w, u, o = parse_costs(self.costs)
        return CostStructure.uniform(self.N, w, u, o, self.lam)

    def to_dict(self) -> dict:
        return asdict(self)


def parse_costs(spec) -> tuple[float, float, float]:
    if isinstance(spec, (tuple, list)):
        w, u, o = (float(v) for v in spec)
        return w, u, o
    if spec in COST_PRESETS:
        return COST_PRESETS[spec]
    parts = str(spec).split(",")
    if len(parts) != 3:
        raise ValueError(f"cost spec {spec!r} is neither a preset ({sorted(COST_PRESETS)}) nor 'w,u,o'")
    w, u, o = (float(p) for p in parts)
    return w, u, o


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *key]))


def lognormal_params(mean: float, cv: float) -> tuple[float, float]:
    """Underlying normal (m, s) of a lognormal with the given (untruncated) mean and cv."""
    s2 = math.log1p(cv * cv)
    return math.log(mean) - s2 / 2, math.sqrt(s2)


def truncated_lognormal(rng: np.random.Generator, mean: float, cv: float, lo: float, hi: float) -> float:
    m, s = lognormal_params(mean, cv)
    while True:
        v = rng.lognormal(m, s)
        if lo <= v <= hi:
            return v


def truncated_lognormal_mean(mean: float, cv: float, lo: float, hi: float) -> float:
    """Mean of the truncated law by numerical integration."""
    from scipy import integrate, stats

    m, s = lognormal_params(mean, cv)
    dist = stats.lognorm(s=s, scale=math.exp(m))
    mass = dist.cdf(hi) - dist.cdf(lo)
    num, _ = integrate.quad(lambda v: v * dist.pdf(v), lo, hi)
    return num / mass


def gen_instance(cfg: GenConfig) -> tuple[Instance, np.ndarray]:
    """Instance with the common support box and the latent per-customer service means."""
    n = cfg.N
    lo_m, hi_m = cfg.serviceMeanRange
    mu = np.array([_rng(cfg.seed, _LATENT, i).uniform(lo_m, hi_m) for i in range(n)])
    tl = np.full((n + 1, n + 1), cfg.travelSupport[0])
    tu = np.full((n + 1, n + 1), cfg.travelSupport[1])
    np.fill_diagonal(tl, 0.0)
    np.fill_diagonal(tu, 0.0)
    inst = Instance(n, cfg.L, cfg.cost_structure(),
                    np.full(n, cfg.serviceSupport[0]), np.full(n, cfg.serviceSupport[1]), tl, tu)
    return inst, mu


def _stretch(lo: float, hi: float, delta: float) -> tuple[float, float]:
    return (1 - delta) * lo, (1 + delta) * hi


def scenario_support(cfg: GenConfig, selector: str = "set1", delta: Optional[float] = None):
    """(service interval, travel interval) that the selected law draws from."""
    selector = selector.lower()
    if selector not in OOS_SETS:
        raise ValueError(f"unknown scenario set {selector!r}")
    if selector in ("set3", "set5") and delta is None:
        raise ValueError(f"{selector} needs a support perturbation delta")
    if selector not in ("set3", "set5") and delta is not None:
        raise ValueError(f"delta only applies to set3 and set5, not {selector}")
    if delta is not None and delta < 0:
        raise ValueError("delta must be >= 0")
    sv, tv = cfg.serviceSupport, cfg.travelSupport
    if selector == "set2":
        tv = cfg.shiftedTravel
    elif selector == "set3":
        sv, tv = _stretch(*sv, delta), _stretch(*tv, delta)
    elif selector == "set5":
        sv = _stretch(*sv, delta)
    return sv, tv


def _draw(cfg: GenConfig, mu, rng, selector: str, sv, tv) -> Scenario:
    n = cfg.N
    if selector == "set4":
        d = sv[0] + (sv[1] - sv[0]) * rng.beta(0.5, 0.5, size=n)
    else:
        d = np.array([truncated_lognormal(rng, mu[i], cfg.serviceCv, *sv) for i in range(n)])
    t = rng.uniform(tv[0], tv[1], size=(n + 1, n + 1))
    np.fill_diagonal(t, 0.0)
    if cfg.rounding:
        d = np.clip(np.rint(d), *sv)
        t = np.clip(np.rint(t), *tv)
        np.fill_diagonal(t, 0.0)
    return Scenario(d, t)


def gen_scenarios(cfg: GenConfig, mu, count: int, selector: str = "set1",
                  delta: Optional[float] = None, purpose: str = "train", start: int = 0) -> list[Scenario]:
    """``count`` scenarios from the selected law; scenario k uses its own child stream.

    ``purpose`` separates training draws from out-of-sample draws of the same law.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    selector = selector.lower()
    sv, tv = scenario_support(cfg, selector, delta)
    tag = _TRAIN if purpose == "train" else _OOS
    set_id = OOS_SETS.index(selector) + 1
    dkey = int(round((delta or 0.0) * 1000))
    return [_draw(cfg, mu, _rng(cfg.seed, tag, set_id, dkey, k), selector, sv, tv)
            for k in range(start, start + count)]


def sample_means(scenarios: Sequence[Scenario]) -> tuple[np.ndarray, np.ndarray]:
    d = np.mean([s.service for s in scenarios], axis=0)
    t = np.mean([s.travel for s in scenarios], axis=0)
    return d, t


# -- serialization --------------------------------------------------------

def scenarios_to_json(scenarios: Sequence[Scenario]) -> dict:
    return {"scenarios": [s.to_dict() for s in scenarios]}


def scenarios_from_json(d) -> list[Scenario]:
    items = d["scenarios"] if isinstance(d, dict) else d
    return [Scenario.from_dict(s) for s in items]


def csv_header(n: int) -> list[str]:
    return [f"d_{i}" for i in range(1, n + 1)] + [f"t_{i}_{k}" for i in range(n + 1) for k in range(n + 1)]


def write_scenarios_csv(path, scenarios: Sequence[Scenario]) -> None:
    n = scenarios[0].N
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(n))
        for s in scenarios:
            w.writerow([_fmt(v) for v in s.service] + [_fmt(v) for v in s.travel.ravel()])


def read_scenarios_csv(path) -> list[Scenario]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = sum(h.startswith("d_") for h in header)
    out = []
    for row in body:
        vals = np.array([float(v) for v in row])
        out.append(Scenario(vals[:n], vals[n:].reshape(n + 1, n + 1)))
    return out


def _fmt(v: float) -> str:
    return "%d" % v if float(v).is_integer() else "%.17g" % v


def write_scenarios_json(path, scenarios: Sequence[Scenario]) -> None:
    with open(path, "w") as fh:
        json.dump(scenarios_to_json(scenarios), fh)
        fh.write("\n")


def read_scenarios(path) -> list[Scenario]:
    if str(path).endswith(".csv"):
        return read_scenarios_csv(path)
    with open(path) as fh:
        return scenarios_from_json(json.load(fh))
