import json
import subprocess
import sys

import pytest

from hras.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SOLVER, main
from hras.domain import Scenario, save_json

from conftest import flat_travel, point_instance


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture
def gen_dir(tmp_path):
    out = tmp_path / "g"
    assert run("gen", "--n", 3, "--r", 4, "--seed", 1, "--oos", "set1", "--oos-count", 20, "--out", out) == 0
    return out


def test_gen_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("gen", "--n", 6, "--r", 50, "--seed", 1, "--out", tmp_path / d) == EXIT_OK
    for f in ("instance.json", "train.json", "train.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_gen_missing_r_is_usage_error(tmp_path, capsys):
    assert run("gen", "--n", 6, "--out", tmp_path) == EXIT_CONFIG
    assert "--r" in capsys.readouterr().err


def test_gen_stretched_set(tmp_path):
    assert run("gen", "--n", 3, "--r", 2, "--oos", "set3", "--delta", 0.25, "--oos-count", 300,
               "--out", tmp_path) == 0
    text = (tmp_path / "oos_set3_0.25.csv").read_text().splitlines()
    vals = [float(v) for row in text[1:] for v in row.split(",")[:3]]
    assert min(vals) >= 7.5 and max(vals) <= 62.5 and (min(vals) < 10 or max(vals) > 50)


def test_solve_saa_example(tmp_path):
    travel = flat_travel(2, 20)
    sc = Scenario([30.0, 30.0], travel)
    save_json(point_instance(sc.service, travel, lam=0.0), tmp_path / "inst.json")
    save_json({"scenarios": [sc.to_dict()]}, tmp_path / "scen.json")
    assert run("solve", "--model", "saa", "--instance", tmp_path / "inst.json", "--scenarios",
               tmp_path / "scen.json", "--method", "milp", "--gap", 1e-9, "--out", tmp_path / "s") == 0
    res = json.loads((tmp_path / "s" / "result.json").read_text())
    assert abs(res["objective"]) < 1e-9
    assert (tmp_path / "s" / "model.lp").read_text().startswith("\\ saa")
    assert json.loads((tmp_path / "s" / "decision.json").read_text())["route"]


def test_wdhras_zero_radius_matches_saa(gen_dir, tmp_path):
    common = ["--instance", gen_dir / "instance.json", "--scenarios", gen_dir / "train.csv", "--gap", 1e-9]
    assert run("solve", "--model", "saa", *common, "--out", tmp_path / "s") == 0
    assert run("solve", "--model", "wdhras", "--epsilon", 0, *common, "--out", tmp_path / "w") == 0
    s = json.loads((tmp_path / "s" / "result.json").read_text())["objective"]
    w = json.loads((tmp_path / "w" / "result.json").read_text())["objective"]
    assert w == pytest.approx(s, rel=1e-4)


def test_mdhras_result_fields(gen_dir, tmp_path):
    assert run("solve", "--model", "mdhras", "--instance", gen_dir / "instance.json", "--scenarios",
               gen_dir / "train.json", "--method", "milp", "--out", tmp_path / "m") == 0
    res = json.loads((tmp_path / "m" / "result.json").read_text())
    for key in ("status", "objective", "gap", "nodeCount", "wallTime", "binaries"):
        assert key in res
    assert res["gap"] <= 0.02


def test_epsilon_rules(gen_dir):
    base = ["--instance", gen_dir / "instance.json", "--scenarios", gen_dir / "train.json"]
    assert run("solve", "--model", "wdhras", *base) == EXIT_CONFIG
    assert run("solve", "--model", "saa", "--epsilon", 1, *base) == EXIT_CONFIG


def test_evaluate_single_scenario_row(gen_dir, tmp_path):
    assert run("solve", "--model", "saa", "--instance", gen_dir / "instance.json", "--scenarios",
               gen_dir / "train.json", "--out", tmp_path / "s") == 0
    scen = json.loads((gen_dir / "oos_set1.json").read_text())["scenarios"][:1]
    (tmp_path / "one.json").write_text(json.dumps({"scenarios": scen}))
    assert run("evaluate", "--decision", tmp_path / "s" / "decision.json", "--instance",
               gen_dir / "instance.json", "--scenarios", tmp_path / "one.json", "--out", tmp_path / "e") == 0
    header, row = (tmp_path / "e" / "report.csv").read_text().splitlines()
    vals = dict(zip(header.split(","), row.split(",")))
    assert vals["meanCost"] == vals["p20"] == vals["p80"] and vals["nScenarios"] == "1"


def test_missing_decision_is_file_error(gen_dir):
    assert run("evaluate", "--decision", gen_dir / "nope.json", "--instance", gen_dir / "instance.json",
               "--scenarios", gen_dir / "train.json") == EXIT_IO


def test_solver_error_exit(gen_dir, monkeypatch):
    monkeypatch.setenv("HRAS_BACKEND", "subprocess")
    monkeypatch.delenv("HRAS_SOLVER_CMD", raising=False)
    assert run("solve", "--model", "saa", "--method", "milp", "--instance", gen_dir / "instance.json",
               "--scenarios", gen_dir / "train.json", "--out", gen_dir / "x") == EXIT_SOLVER


def test_sweep_default_grid_and_determinism(tmp_path):
    args = ["sweep", "--n", 3, "--r", 2, "--replications", 2, "--oos-count", 30]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--workers", 2, "--out", tmp_path / "b") == 0
    lines = (tmp_path / "a" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "epsilon,mean,p20,p80" and len(lines) == 29
    for f in ("sweep.csv", "plot.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert (tmp_path / "a" / "plot.csv").read_text().startswith("x,series,y,p20,p80\n")


def test_reliability_single_row(tmp_path):
    assert run("reliability", "--n", 3, "--r", 2, "--replications", 20, "--oos-count", 30, "--model", "saa",
               "--out", tmp_path) == 0
    lines = (tmp_path / "reliability.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("saa,") and lines[1].split(",")[2] == "20"


def test_config_file_and_flag_precedence(tmp_path):
    (tmp_path / "c.toml").write_text('n = 3\nr = 2\nreplications = 1\noos-count = 10\nmodels = "saa"\n')
    (tmp_path / "c.json").write_text(json.dumps({"n": 3, "r": 2, "replications": 1, "oos_count": 10}))
    assert run("--config", tmp_path / "c.toml", "report", "--out", tmp_path / "t") == 0
    assert run("--config", tmp_path / "c.json", "report", "--models", "saa", "--replications", 2,
               "--out", tmp_path / "j") == 0
    rows = (tmp_path / "j" / "report.csv").read_text().splitlines()
    assert rows[1].split(",")[9] == "2"  # replications column: the flag beat the file
    (tmp_path / "bad.json").write_text('{"n": 3, "nonsense": 1}')
    assert run("--config", tmp_path / "bad.json", "gen", "--r", 1, "--out", tmp_path / "x") == EXIT_CONFIG


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "hras.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("gen", "solve", "evaluate", "sweep", "reliability", "report"):
        assert cmd in out.stdout
