import csv
import io
import json
import math

import numpy as np
import pytest

from teleopt import acceptance
from teleopt.acceptance import AcceptanceContext, run_criterion
from teleopt.analytic import closed_form_optimum, unitary_optimum
from teleopt.cli import main, read_config_file, CliError
from teleopt.optimizer import IterationConfig
from teleopt.scenario import family_scenario, format_scenario_text
from teleopt.sweep import COLUMNS

FAST = ["--oracle-restarts", "0", "--mc-samples", "200"]
KEY_COS = math.sqrt(2) - 1


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_bytes_are_reproducible(tmp_path, capsys):
    paths = [tmp_path / f"s{k}.csv" for k in range(3)]
    for path, jobs in zip(paths, ["1", "1", "2"]):
        assert run(capsys, "sweep", "--steps", "6", "--jobs", jobs, "--out", str(path), *FAST)[0] == 0
    data = [p.read_bytes() for p in paths]
    assert data[0] == data[1] == data[2]
    assert b"\r" not in data[0]


def test_sweep_to_stdout_format(capsys):
    code, out, _ = run(capsys, "sweep", "--steps", "5", "--jobs", "1", *FAST)
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == ",".join(COLUMNS)
    assert out.endswith("\n") and len(lines) == 7
    rows = read_rows(out)
    assert len(rows) == 5
    # values round-trip at full precision
    theta = float(rows[1]["theta"])
    assert theta == (math.pi / 2) / 4
    assert rows[1]["theta"] == f"{theta:.17g}"


def test_sweep_values(capsys):
    code, out, _ = run(capsys, "sweep", "--steps", "11", "--jobs", "1", *FAST)
    assert code == 0
    for row in read_rows(out):
        theta = float(row["theta"])
        f_it = float(row["f_iterative"])
        assert f_it >= float(row["f_unitary_numeric"]) - 1e-9
        assert abs(float(row["f_unitary_numeric"]) - unitary_optimum(theta)) < 1e-8
        assert abs(f_it - closed_form_optimum(theta)) < 1e-6
        assert abs(float(row["cos_theta"]) - math.cos(theta)) < 1e-15


def test_sweep_key_row(capsys):
    theta = math.acos(KEY_COS)
    code, out, _ = run(capsys, "sweep", "--theta-min", repr(theta), "--theta-max", repr(theta),
                       "--steps", "1", "--jobs", "1", *FAST)
    assert code == 0
    (row,) = read_rows(out)
    assert abs(float(row["f_iterative"]) - 0.681605) < 1e-6
    assert abs(float(row["f_unitary_closed"]) - 2 / 3) < 1e-12


def test_optimize_bell_limit(capsys):
    code, out, _ = run(capsys, "optimize", "--theta", "0", "--json", "-", *FAST)
    assert code == 0
    payload = json.loads(out[out.index("{"):])
    assert all(o["unitary"] and o["converged"] for o in payload["outcomes"])
    assert abs(payload["fidelities"]["f_optimal"] - 1) < 1e-9
    assert abs(payload["fidelities"]["f_mc"] - 1) < 1e-9


@pytest.mark.parametrize("cos_theta, unitary", [(0.3, False), (0.9, True)])
def test_optimize_unitarity_by_regime(tmp_path, capsys, cos_theta, unitary):
    path = tmp_path / "report.json"
    code, out, _ = run(capsys, "optimize", "--cos-theta", str(cos_theta), "--json", str(path), *FAST)
    assert code == 0
    assert "Choi spectrum" in out and "Kraus 0" in out
    payload = json.loads(path.read_text())
    assert all(o["unitary"] == unitary for o in payload["outcomes"])
    fid = payload["fidelities"]
    assert abs(fid["f_optimal"] - fid["f_closed_form"]) < 1e-6
    assert all(o["min_choi_eigenvalue"] > -1e-9 for o in payload["outcomes"])


def test_optimize_reports_non_convergence(capsys):
    code, out, _ = run(capsys, "optimize", "--cos-theta", "0.3", "--max-iter", "2", *FAST)
    assert code == 2
    assert "converged=False" in out


def test_optimize_scenario_file_round_trip(tmp_path, capsys):
    theta = 0.8
    path = tmp_path / "family.txt"
    path.write_text(format_scenario_text(family_scenario(theta)))
    code, out, _ = run(capsys, "optimize", "--scenario-file", str(path), "--json", "-", *FAST)
    assert code == 0
    payload = json.loads(out[out.index("{"):])
    assert payload["theta"] is None
    assert [o["label"] for o in payload["outcomes"]] == ["0", "1", "2", "3"]
    assert abs(payload["fidelities"]["f_optimal"] - closed_form_optimum(theta)) < 1e-8


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nsteps = 3\nmc-samples = 100\noracle_restarts = 0\njobs = 1\n")
    assert read_config_file(cfg) == {"steps": 3, "mc_samples": 100, "oracle_restarts": 0, "jobs": 1}
    code, out, _ = run(capsys, "sweep", "--config", str(cfg))
    assert code == 0 and len(read_rows(out)) == 3
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--steps", "2")
    assert code == 0 and len(read_rows(out)) == 2


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    with pytest.raises(CliError):
        read_config_file(bad)
    code, _, err = run(capsys, "sweep", "--config", str(bad))
    assert code == 1 and "unknown key" in err
    bad.write_text("steps\n")
    assert run(capsys, "sweep", "--config", str(bad))[0] == 1


def test_unwritable_output(tmp_path, capsys):
    code, _, err = run(capsys, "sweep", "--steps", "2", "--out", str(tmp_path / "missing" / "x.csv"), *FAST)
    assert code == 1 and "cannot write" in err


@pytest.mark.parametrize("argv", [
    ["sweep", "--theta-min", "1.0", "--theta-max", "0.5", "--steps", "3"],
    ["sweep", "--theta-max", "2.0", "--steps", "3"],
    ["sweep", "--steps", "0"],
    ["sweep", "--steps", "3", "--mixing", "1.5"],
    ["optimize", "--cos-theta", "1.5"],
    ["optimize", "--theta", "-0.1"],
    ["optimize", "--scenario-file", "/nonexistent/scenario.txt"],
])
def test_invalid_arguments_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv, *FAST)
    assert code == 1
    assert "error" in err


def test_mutually_exclusive_angles(capsys):
    with pytest.raises(SystemExit) as info:
        main(["optimize", "--theta", "0.1", "--cos-theta", "0.5"])
    assert info.value.code == 2


@pytest.mark.parametrize("outcomes, expected", [((True, True), 0), ((True, False), 1)])
def test_verify_exit_code(monkeypatch, capsys, outcomes, expected):
    fake = tuple((k + 1, f"fake {k}", lambda ctx, ok=ok: (ok, "stub")) for k, ok in enumerate(outcomes))
    monkeypatch.setattr(acceptance, "CRITERIA", fake)
    code, out, _ = run(capsys, "verify")
    assert code == expected
    assert out.count("[PASS]") == sum(outcomes)
    assert f"{sum(outcomes)}/{len(outcomes)} criteria passed" in out


def test_loose_tolerance_fails_branch_agreement():
    ctx = AcceptanceContext(iteration=IterationConfig(tolerance=1e-2, oracle_restarts=0), sweep_steps=11)
    res = run_criterion(3, ctx)
    assert not res.passed
    assert res.line().startswith("[FAIL]  3.")


def test_monte_carlo_criterion_with_few_samples():
    res = run_criterion(6, AcceptanceContext(mc_samples=100))
    assert res.passed, res.detail


def test_crashing_criterion_fails(monkeypatch):
    def boom(ctx):
        raise RuntimeError("nope")

    monkeypatch.setattr(acceptance, "CRITERIA", ((1, "boom", boom),))
    res = run_criterion(1, AcceptanceContext())
    assert not res.passed and "nope" in res.detail
