"""Out-of-sample simulation, reliability, radius sweeps and appointment profiling."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .domain import FirstStageDecision, Instance, Scenario
from .recourse import recourse_batch
from .saa import stack
from .scenarios import GenConfig, gen_instance, gen_scenarios

DEFAULT_GRID = tuple([round(0.01 * k, 2) for k in range(1, 10)]
                     + [round(0.1 * k, 1) for k in range(1, 10)]
                     + [float(k) for k in range(1, 11)])


def nearest_rank(values, p: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ValueError("percentile of an empty sample")
    k = max(1, math.ceil(p / 100.0 * x.size - 1e-12))
    return float(x[k - 1])


def interarrival_profile(dec: FirstStageDecision) -> np.ndarray:
    """I_j = a_j - a_{j-1} with a_0 = 0."""
    return np.diff(np.concatenate([[0.0], np.asarray(dec.appointments, dtype=float)]))


@dataclass
class EvaluationReport:
    meanCost: float
    percentile20: float
    percentile80: float
    meanWait: float  # summed over positions 1..N
    meanIdle: float  # summed over positions 1..N
    meanOvertime: float
    meanTravel: float
    waitByPosition: np.ndarray  # positions 1..N+1, last is overtime
    idleByPosition: np.ndarray  # positions 1..N+1, last is slack before L
    interArrival: np.ndarray
    nScenarios: int
    replications: int = 1

    def weighted_cost(self, inst: Instance) -> float:
        c, n = inst.costs, inst.N
        return float(self.waitByPosition[:n] @ c.wait + self.idleByPosition[:n] @ c.idle
                     + c.overtime * self.meanOvertime + c.travel * self.meanTravel)

    def row(self) -> dict:
        out = {"meanCost": self.meanCost, "p20": self.percentile20, "p80": self.percentile80,
               "meanWait": self.meanWait, "meanIdle": self.meanIdle, "meanOvertime": self.meanOvertime,
               "meanTravel": self.meanTravel, "nScenarios": self.nScenarios, "replications": self.replications}
        for j, v in enumerate(self.interArrival, start=1):
            out[f"I_{j}"] = v
        return out


def out_of_sample(dec: FirstStageDecision, scenarios: Sequence[Scenario], inst: Instance) -> EvaluationReport:
    """Exact recourse on each scenario. Percentiles here are over per-scenario costs."""
    if len(scenarios) == 0:
        raise ValueError("out-of-sample evaluation needs at least one scenario")
    service, travel = stack(scenarios)
    out = recourse_batch(dec.route(), dec.appointments, service, travel, inst)
    n = inst.N
    w, u = out["wait"].mean(axis=0), out["idle"].mean(axis=0)
    return EvaluationReport(float(out["cost"].mean()), nearest_rank(out["cost"], 20),
                            nearest_rank(out["cost"], 80), float(w[:n].sum()), float(u[:n].sum()),
                            float(w[n]), float(out["travel"].mean()), w, u, interarrival_profile(dec),
                            len(scenarios))


def aggregate_reports(reports: Sequence[EvaluationReport]) -> EvaluationReport:
    """Average over replications; percentiles over per-replication mean costs."""
    if not reports:
        raise ValueError("nothing to aggregate")
    means = [r.meanCost for r in reports]

    def avg(attr):
        return np.mean([getattr(r, attr) for r in reports], axis=0)

    return EvaluationReport(float(np.mean(means)), nearest_rank(means, 20), nearest_rank(means, 80),
                            float(avg("meanWait")), float(avg("meanIdle")), float(avg("meanOvertime")),
                            float(avg("meanTravel")), avg("waitByPosition"), avg("idleByPosition"),
                            avg("interArrival"), reports[0].nScenarios, len(reports))


@dataclass
class ReliabilityResult:
    fraction: float
    instances: int
    scenarios: int
    successes: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")


def reliability(cases: Iterable[tuple], tol: float = 0.0) -> ReliabilityResult:
    """Each case is (modelValue, decision, oosScenarios, instance).

    A case succeeds when modelValue >= out-of-sample mean cost - tol.
    """
    cases = list(cases)
    if not cases:
        raise ValueError("reliability needs at least one instance")
    hits, nsc = 0, 0
    for value, dec, oos, inst in cases:
        est = out_of_sample(dec, oos, inst).meanCost
        hits += value >= est - tol
        nsc = max(nsc, len(oos))
    return ReliabilityResult(hits / len(cases), len(cases), nsc, hits)


# -- replicated experiments -------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    R: int = 5
    replications: int = 20
    oosCount: int = 2000
    oosSet: str = "set1"
    delta: Optional[float] = None
    method: str = "auto"
    gap: float = 0.02
    timeLimit: Optional[float] = None
    workers: int = 1


@dataclass(frozen=True)
class Replication:
    index: int
    inst: Instance
    mu: np.ndarray
    train: list
    oos: list


def replication_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), 7919, int(index)]).generate_state(1)[0])


def make_replication(cfg: ExperimentConfig, index: int) -> Replication:
    g = replace(cfg.gen, seed=replication_seed(cfg.gen.seed, index))
    inst, mu = gen_instance(g)
    train = gen_scenarios(g, mu, cfg.R, "set1", purpose="train")
    oos = gen_scenarios(g, mu, cfg.oosCount, cfg.oosSet, cfg.delta, purpose="oos")
    return Replication(index, inst, mu, train, oos)


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    """Ordered map; a process pool when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


@dataclass
class SweepTable:
    grid: tuple
    perReplication: np.ndarray  # (replications, len(grid)) out-of-sample mean costs
    modelValues: np.ndarray
    solveTime: np.ndarray  # per replication

    def rows(self) -> list[tuple]:
        out = []
        for k, e in enumerate(self.grid):
            col = self.perReplication[:, k]
            out.append((e, float(col.mean()), nearest_rank(col, 20), nearest_rank(col, 80)))
        return out

    def best(self) -> tuple:
        return min(self.rows(), key=lambda r: r[1])


def _sweep_one(args):
    cfg, grid, index = args
    from .optimize import optimize_radii

    rep = make_replication(cfg, index)
    outs = optimize_radii(rep.inst, rep.train, list(grid), method=cfg.method, gap=cfg.gap,
                          time_limit=cfg.timeLimit)
    costs = [out_of_sample(o.decision, rep.oos, rep.inst).meanCost for o in outs]
    return costs, [o.objective for o in outs], sum(o.wallTime for o in outs) if outs[0].method == "milp" \
        else outs[0].wallTime


def epsilon_sweep(cfg: ExperimentConfig, grid: Sequence[float] = DEFAULT_GRID) -> SweepTable:
    """W-DHRAS per replication and radius, each decision evaluated out of sample."""
    grid = tuple(sorted(float(e) for e in grid))
    if not grid:
        raise ValueError("radius grid is empty")
    res = _pmap(_sweep_one, [(cfg, grid, r) for r in range(cfg.replications)], cfg.workers)
    return SweepTable(grid, np.array([r[0] for r in res]), np.array([r[1] for r in res]),
                      np.array([r[2] for r in res]))


@dataclass
class ModelResult:
    label: str
    report: EvaluationReport
    perReplication: list  # EvaluationReport per replication
    modelValues: np.ndarray
    solveTime: np.ndarray
    decisions: list


def parse_model_label(label: str) -> tuple[str, Optional[float]]:
    """'saa', 'mdhras', or 'wdhras:<eps>'."""
    kind, _, eps = label.partition(":")
    kind = kind.strip().lower()
    if kind == "wdhras":
        if not eps:
            raise ValueError("wdhras needs a radius, e.g. wdhras:50")
        return kind, float(eps)
    if eps:
        raise ValueError(f"{kind} takes no radius")
    if kind not in ("saa", "mdhras"):
        raise ValueError(f"unknown model {label!r}")
    return kind, None


def _compare_one(args):
    cfg, labels, index = args
    from .optimize import optimize

    rep = make_replication(cfg, index)
    out = []
    for lab in labels:
        kind, eps = parse_model_label(lab)
        o = optimize(kind, rep.inst, rep.train, eps, method=cfg.method, gap=cfg.gap, time_limit=cfg.timeLimit)
        out.append((out_of_sample(o.decision, rep.oos, rep.inst), o.objective, o.wallTime, o.decision))
    return out


def compare_models(cfg: ExperimentConfig, labels: Sequence[str]) -> list[ModelResult]:
    """Solve each model on every replication and evaluate it out of sample."""
    for lab in labels:
        parse_model_label(lab)
    res = _pmap(_compare_one, [(cfg, tuple(labels), r) for r in range(cfg.replications)], cfg.workers)
    out = []
    for k, lab in enumerate(labels):
        reps = [r[k][0] for r in res]
        out.append(ModelResult(lab, aggregate_reports(reps), reps, np.array([r[k][1] for r in res]),
                               np.array([r[k][2] for r in res]), [r[k][3] for r in res]))
    return out


def reliability_experiment(cfg: ExperimentConfig, label: str) -> ReliabilityResult:
    """Fraction of replications whose model value covers the out-of-sample mean cost."""
    (mr,) = compare_models(cfg, [label])
    hits = int(sum(v >= rep.meanCost for v, rep in zip(mr.modelValues, mr.perReplication)))
    return ReliabilityResult(hits / len(mr.perReplication), len(mr.perReplication), cfg.oosCount, hits)


# -- CSV output ---------------------------------------------------------------

def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return "%.10g" % float(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_reports_csv(path, labeled: Sequence[tuple[str, EvaluationReport]]) -> None:
    rows = [(lab, rep.row()) for lab, rep in labeled]
    header = ["model"] + list(rows[0][1].keys())
    write_csv(path, header, [[lab] + list(r.values()) for lab, r in rows])


PLOT_HEADER = ("x", "series", "y", "p20", "p80")
