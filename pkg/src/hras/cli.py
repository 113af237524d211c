"""Command-line front end.

Exit codes: 0 ok, 2 configuration/usage error, 3 solver error, 4 file error.
Every option can also come from ``--config`` (JSON or TOML, keys = long option
names with dashes or underscores); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .domain import FirstStageDecision, Instance, StructureError, load_json, save_json
from .evaluation import (DEFAULT_GRID, PLOT_HEADER, ExperimentConfig, compare_models, epsilon_sweep,
                         fmt, nearest_rank, out_of_sample, parse_model_label, reliability_experiment,
                         write_csv, write_reports_csv)
from .optimize import METHODS, MODELS, build_model, optimize
from .scenarios import (COST_PRESETS, DELTAS, OOS_SETS, GenConfig, gen_instance, gen_scenarios,
                        read_scenarios, write_scenarios_csv, write_scenarios_json)
from .solver_io import SolverConfigError, SolverError, write_lp_file

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


class ConfigError(Exception):
    pass


DEFAULTS = {
    "seed": 0, "costs": "a", "lam": 0.5, "oos_count": 2000, "out": ".", "gap": 0.02,
    "time_limit": None, "method": "auto", "symmetry": False, "backend": None, "replications": 20,
    "workers": 1, "oos": None, "delta": None, "grid": None, "epsilon": None, "r": None, "n": 6,
    "models": None, "model": None,
}


def _gen_opts(p):
    p.add_argument("--n", type=int, help="number of customers")
    p.add_argument("--r", type=int, help="training scenarios per instance")
    p.add_argument("--seed", type=int)
    p.add_argument("--costs", help=f"cost preset {sorted(COST_PRESETS)} or 'wait,idle,overtime'")
    p.add_argument("--lam", type=float, help="travel cost weight")


def _oos_opts(p):
    p.add_argument("--oos", choices=OOS_SETS, help="out-of-sample law")
    p.add_argument("--delta", type=float, help=f"support stretch for set3/set5, e.g. {DELTAS}")
    p.add_argument("--oos-count", type=int, help="out-of-sample scenarios")


def _solver_opts(p):
    p.add_argument("--gap", type=float, help="relative MIP gap")
    p.add_argument("--time-limit", type=float)
    p.add_argument("--method", choices=METHODS, help="milp, enumerate (exact, per-route LPs) or auto")
    p.add_argument("--backend", help="highs, scipy or subprocess (default: $HRAS_BACKEND or highs)")


def _exp_opts(p):
    _gen_opts(p)
    _oos_opts(p)
    _solver_opts(p)
    p.add_argument("--replications", type=int, help="instances / replications")
    p.add_argument("--workers", type=int, help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hras", description="Home-service routing and appointment scheduling "
                                 "under uncertainty: generate, solve, evaluate.")
    ap.add_argument("--config", help="JSON or TOML file with option values")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance with training and optional out-of-sample scenarios")
    _gen_opts(p)
    _oos_opts(p)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("solve", help="solve one model on an instance and training scenarios")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--instance")
    p.add_argument("--scenarios")
    p.add_argument("--epsilon", type=float, help="Wasserstein radius (wdhras only)")
    p.add_argument("--symmetry", action="store_true", default=None, help="add symmetry-breaking constraints")
    _solver_opts(p)
    p.add_argument("--out")

    p = sub.add_parser("evaluate", help="evaluate a decision out of sample")
    p.add_argument("--decision")
    p.add_argument("--instance")
    p.add_argument("--scenarios")
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="out-of-sample cost of W-DHRAS over a radius grid")
    _exp_opts(p)
    p.add_argument("--grid", help="comma-separated radii (default: 28-point grid 0.01..10)")
    p.add_argument("--out")

    p = sub.add_parser("reliability", help="fraction of instances whose model value covers the true cost")
    _exp_opts(p)
    p.add_argument("--model", action="append", help="saa, mdhras or wdhras:<eps>; repeatable")
    p.add_argument("--out")

    p = sub.add_parser("report", help="compare models: out-of-sample costs and appointment profiles")
    _exp_opts(p)
    p.add_argument("--models", help="comma-separated labels, e.g. saa,mdhras,wdhras:0.5")
    p.add_argument("--out")
    return ap


def load_config(path) -> dict:
    p = Path(path)
    text = p.read_bytes()
    if p.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        try:
            data = tomllib.loads(text.decode())
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    opts = dict(DEFAULTS)
    if args.config:
        cfg = load_config(args.config)
        unknown = set(cfg) - set(vars(args)) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        opts.update(cfg)
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    return opts


def _need(opts, *keys):
    missing = [k for k in keys if opts.get(k) is None]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _gen_config(opts) -> GenConfig:
    _need(opts, "n")
    costs = opts["costs"]
    if isinstance(costs, list):
        costs = ",".join(str(c) for c in costs)
    return GenConfig(N=int(opts["n"]), seed=int(opts["seed"]), costs=costs, lam=float(opts["lam"]))


def _exp_config(opts) -> ExperimentConfig:
    _need(opts, "n", "r")
    oos = opts["oos"] or "set1"
    return ExperimentConfig(_gen_config(opts), int(opts["r"]), int(opts["replications"]), int(opts["oos_count"]),
                            oos, opts["delta"], opts["method"], float(opts["gap"]), opts["time_limit"],
                            int(opts["workers"]))


def _outdir(opts) -> Path:
    d = Path(opts["out"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _timing(out: Path, rows) -> None:
    write_csv(out / "timing.csv", ("item", "seconds"), rows)


# -- subcommands ----------------------------------------------------------------

def cmd_gen(opts) -> int:
    _need(opts, "n", "r")
    cfg = _gen_config(opts)
    if opts["delta"] is not None and opts["oos"] is None:
        raise ConfigError("--delta needs --oos set3 or set5")
    out = _outdir(opts)
    inst, mu = gen_instance(cfg)
    d = inst.to_dict()
    d["latentServiceMean"] = mu.tolist()
    d["generator"] = cfg.to_dict()
    save_json(d, out / "instance.json")
    train = gen_scenarios(cfg, mu, int(opts["r"]), purpose="train")
    write_scenarios_json(out / "train.json", train)
    write_scenarios_csv(out / "train.csv", train)
    if opts["oos"]:
        oos = gen_scenarios(cfg, mu, int(opts["oos_count"]), opts["oos"], opts["delta"], purpose="oos")
        stem = "oos_" + opts["oos"] + ("" if opts["delta"] is None else f"_{opts['delta']:g}")
        write_scenarios_json(out / f"{stem}.json", oos)
        write_scenarios_csv(out / f"{stem}.csv", oos)
    print(f"wrote instance and scenarios to {out}")
    return EXIT_OK


def _load_instance(path) -> Instance:
    return Instance.from_dict(load_json(path))


def cmd_solve(opts) -> int:
    _need(opts, "model", "instance", "scenarios")
    kind = opts["model"]
    if (kind == "wdhras") != (opts["epsilon"] is not None):
        raise ConfigError("--epsilon is required for wdhras and only allowed there")
    inst = _load_instance(opts["instance"])
    samples = read_scenarios(opts["scenarios"])
    out = _outdir(opts)
    model = build_model(kind, inst, samples, opts["epsilon"], bool(opts["symmetry"]))
    write_lp_file(model, out / "model.lp")
    res = optimize(kind, inst, samples, opts["epsilon"], method=opts["method"], gap=float(opts["gap"]),
                   time_limit=opts["time_limit"], symmetry=bool(opts["symmetry"]))
    save_json(res.decision.to_dict(), out / "decision.json")
    d = res.to_dict()
    d.update(res.extra)
    d.update(variables=model.num_vars, constraints=model.num_constraints, binaries=model.num_binaries)
    save_json(d, out / "result.json")
    print(f"{kind}: status {res.status}, objective {res.objective:.6f}, route {list(res.decision.route())}")
    return EXIT_OK


def cmd_evaluate(opts) -> int:
    _need(opts, "decision", "instance", "scenarios")
    dec = FirstStageDecision.from_dict(load_json(opts["decision"]))
    inst = _load_instance(opts["instance"])
    scen = read_scenarios(opts["scenarios"])
    rep = out_of_sample(dec, scen, inst)
    out = _outdir(opts)
    write_reports_csv(out / "report.csv", [("decision", rep)])
    n = inst.N
    write_csv(out / "positions.csv", ("position", "meanWait", "meanIdle", "interArrival"),
              [(j + 1, rep.waitByPosition[j], rep.idleByPosition[j], rep.interArrival[j] if j < n else None)
               for j in range(n + 1)])
    print(f"mean cost {rep.meanCost:.6f} over {rep.nScenarios} scenarios")
    return EXIT_OK


def cmd_sweep(opts) -> int:
    cfg = _exp_config(opts)
    grid = DEFAULT_GRID if opts["grid"] is None else _floats(opts["grid"])
    out = _outdir(opts)
    t0 = time.perf_counter()
    table = epsilon_sweep(cfg, grid)
    rows = table.rows()
    write_csv(out / "sweep.csv", ("epsilon", "mean", "p20", "p80"), rows)
    write_csv(out / "plot.csv", PLOT_HEADER, [(e, "wdhras", m, lo, hi) for e, m, lo, hi in rows])
    _timing(out, [(f"replication_{k}", t) for k, t in enumerate(table.solveTime)]
            + [("total", time.perf_counter() - t0)])
    e, m, _, _ = table.best()
    print(f"best radius {e:g}: mean out-of-sample cost {m:.4f}")
    return EXIT_OK


def cmd_reliability(opts) -> int:
    cfg = _exp_config(opts)
    labels = opts["model"] or ["saa"]
    if isinstance(labels, str):
        labels = [labels]
    for lab in labels:
        parse_model_label(lab)
    out = _outdir(opts)
    rows, timing = [], []
    for lab in labels:
        t0 = time.perf_counter()
        r = reliability_experiment(cfg, lab)
        rows.append((lab, r.fraction, r.instances, r.scenarios, r.successes))
        timing.append((lab, time.perf_counter() - t0))
    write_csv(out / "reliability.csv", ("model", "fraction", "instances", "scenarios", "successes"), rows)
    _timing(out, timing)
    for row in rows:
        print(f"{row[0]}: reliability {row[1]:.3f}")
    return EXIT_OK


def cmd_report(opts) -> int:
    cfg = _exp_config(opts)
    labels = opts["models"] or "saa,mdhras,wdhras:0.5"
    if isinstance(labels, str):
        labels = [s.strip() for s in labels.split(",") if s.strip()]
    out = _outdir(opts)
    t0 = time.perf_counter()
    results = compare_models(cfg, labels)
    write_reports_csv(out / "report.csv", [(r.label, r.report) for r in results])
    plot = []
    for r in results:
        prof = np.array([rep.interArrival for rep in r.perReplication])
        for j in range(prof.shape[1]):
            plot.append((j + 1, r.label, prof[:, j].mean(), nearest_rank(prof[:, j], 20),
                         nearest_rank(prof[:, j], 80)))
    write_csv(out / "plot.csv", PLOT_HEADER, plot)
    write_csv(out / "replications.csv", ("replication", "model", "modelValue", "oosMean"),
              [(k, r.label, v, rep.meanCost) for r in results
               for k, (v, rep) in enumerate(zip(r.modelValues, r.perReplication))])
    _timing(out, [(f"{r.label}_mean_solve", float(np.mean(r.solveTime))) for r in results]
            + [("total", time.perf_counter() - t0)])
    for r in results:
        print(f"{r.label}: mean out-of-sample cost {r.report.meanCost:.4f}")
    return EXIT_OK


def _floats(s) -> list[float]:
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    try:
        return [float(v) for v in str(s).split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"bad number list {s!r}") from e


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "evaluate": cmd_evaluate, "sweep": cmd_sweep,
            "reliability": cmd_reliability, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        if opts["backend"]:
            os.environ["HRAS_BACKEND"] = opts["backend"]
        return COMMANDS[args.command](opts)
    except json.JSONDecodeError as e:
        print(f"hras {args.command}: unreadable JSON file: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, StructureError, KeyError, TypeError) as e:
        print(f"hras {args.command}: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, SolverConfigError) as e:
        print(f"hras {args.command}: solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as e:
        print(f"hras {args.command}: file error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
