import csv
import json
import shutil
import subprocess

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plapcone import cli
from plapcone.errors import SpecError
from plapcone.problem import ProblemSpec, load, loads, parse_override

EIG_SPEC = """
[domain]
kind = interval
extent_x = 1.0
nodes_x = 129

[problem]
p = 2
"""


def write(tmp_path, text, name="spec.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run(argv):
    return cli.main([str(a) for a in argv])


def test_loads_and_defaults():
    spec = loads(EIG_SPEC)
    assert spec.p == 2.0 and spec.nodes_x == 129 and spec.f == "0"
    assert spec.mesh().n_interior == 127


@pytest.mark.parametrize(
    "text",
    [
        "[domain]\nnodes_x = 2\n",
        "[domain]\nkind = disk\n",
        "[domain]\nkind = rectangle\nnodes_x = 9\n",
        "[problem]\np = 1.5\n",
        "[problem]\nf = s^^2\n",
        "[problem]\nrho0 = 0.5*L\n",
        "[problem]\ncolour = red\n",
        "[physics]\np = 3\n",
        "[domain]\np = 3\n",
        "[solver]\nseed = one\n",
        "[solver]\ngrad_tol = -1\n",
        "no section header",
    ],
)
def test_invalid_specs(text):
    with pytest.raises(SpecError):
        loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(SpecError):
        load(tmp_path / "nope.ini")


def test_overrides():
    assert parse_override(" p = 3 ") == ("p", "3")
    with pytest.raises(SpecError):
        parse_override("p3")
    spec = ProblemSpec().with_overrides({"p": "3", "nodes_x": "17"})
    assert spec.p == 3.0 and spec.nodes_x == 17


@settings(max_examples=50, deadline=None)
@given(
    p=st.floats(min_value=2, max_value=10),
    n=st.integers(min_value=3, max_value=500),
    rect=st.booleans(),
    f=st.sampled_from(["0", "s^2", "s^(p-1)*(0.5*L + L*s/(1+s))", "x1*s^3"]),
    tol=st.floats(min_value=1e-14, max_value=1.0),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_spec_roundtrip(p, n, rect, f, tol, seed):
    extra = {"kind": "rectangle", "extent_y": 2.0, "nodes_y": n} if rect else {}
    spec = ProblemSpec(p=p, nodes_x=n, f=f, grad_tol=tol, seed=seed, **extra)
    assert loads(spec.dumps()) == spec


def test_eig_command(tmp_path, capsys):
    out = tmp_path / "out"
    assert run(["eig", "--spec", write(tmp_path, EIG_SPEC), "--out", out]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert json.loads(capsys.readouterr().out) == summary
    assert summary["status"] == "converged"
    assert summary["lambda1"] == pytest.approx(np.pi**2, rel=0.01)
    assert list(summary)[:3] == ["command", "status", "spec"]
    text = (out / "profile.csv").read_text()
    assert text.endswith("\n")
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["x1", "value"]
    assert len(rows) == 1 + 129
    assert float(rows[1][1]) == 0.0 and float(rows[-1][1]) == 0.0 and float(rows[-1][0]) == 1.0


def test_eig_profile_2d(tmp_path):
    text = "[domain]\nkind = rectangle\nextent_x = 1\nextent_y = 2\nnodes_x = 5\nnodes_y = 7\n[problem]\np = 3\n"
    out = tmp_path / "out"
    assert run(["eig", "--spec", write(tmp_path, text), "--out", out]) == 0
    rows = list(csv.reader((out / "profile.csv").read_text().splitlines()))
    assert rows[0] == ["x1", "x2", "value"] and len(rows) == 1 + 35


def test_invalid_grid_exit_code(tmp_path, capsys):
    out = tmp_path / "out"
    code = run(["eig", "--spec", write(tmp_path, "[domain]\nnodes_x = 2\n"), "--out", out])
    assert code == cli.EXIT_SPEC
    assert "at least 3 nodes" in capsys.readouterr().err
    assert json.loads((out / "summary.json").read_text())["status"] == "spec_error"


def test_bad_override_exit_code(tmp_path):
    assert run(["eig", "--spec", write(tmp_path, EIG_SPEC), "--override", "p=1"]) == cli.EXIT_SPEC


def test_hypothesis_violation_exit_code(tmp_path):
    out = tmp_path / "out"
    spec = write(tmp_path, "[domain]\nnodes_x = 17\n[problem]\np = 3\nf = s^2 - 1\n")
    assert run(["solve", "--spec", spec, "--out", out]) == cli.EXIT_HYPOTHESIS
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "hypothesis_violation" and "f(x,0) >= 0" in summary["message"]


def test_evaluation_error_exit_code(tmp_path):
    spec = write(tmp_path, "[domain]\nnodes_x = 17\n[problem]\np = 3\nf = s^2/(x1 - 0.5)^2\n")
    assert run(["solve", "--spec", spec]) == cli.EXIT_SOLVER


def test_solve_equal_slopes(tmp_path):
    out = tmp_path / "out"
    spec = write(tmp_path, "[domain]\nnodes_x = 33\n[problem]\np = 3\nf = 0.5*L*s^(p-1)\n")
    assert run(["solve", "--spec", spec, "--out", out]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "no_certificate" and summary["solution"] is None
    assert not (out / "profile.csv").exists()


def test_solve_found(tmp_path):
    out = tmp_path / "out"
    spec = write(tmp_path, "[domain]\nnodes_x = 33\n[problem]\np = 3\nf = s^2*(2*L - 1.5*L*s/(1+s))\n")
    assert run(["solve", "--spec", spec, "--out", out]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "found"
    assert summary["solution"]["residual"] <= 1e-6 and summary["solution"]["norm_p"] >= 1e-3
    assert (out / "profile.csv").exists()


@pytest.mark.parametrize(
    "rho0,rho_inf,verdicts,message,code",
    [
        ("0.5*L", "2*L", (1, 0), "nontrivial solution certified", 0),
        ("0.5*L", "0.5*L", (1, 1), "no certificate", 0),
        ("L", "2*L", (None, 0), "undefined verdict", 0),
    ],
)
def test_degree_command(tmp_path, capsys, rho0, rho_inf, verdicts, message, code):
    spec = write(tmp_path, f"[domain]\nnodes_x = 33\n[problem]\np = 3\nrho0 = {rho0}\nrho_inf = {rho_inf}\n")
    assert run(["degree", "--spec", spec]) == code
    summary = json.loads(capsys.readouterr().out)
    assert (summary["verdicts"]["zero"]["value"], summary["verdicts"]["infinity"]["value"]) == verdicts
    assert summary["message"] == message
    assert summary["lambda1"] > 0


def test_degree_command_crossing_estimate(tmp_path, capsys):
    spec = write(tmp_path, "[domain]\nnodes_x = 33\n[problem]\np = 3\nf = 2*L*x1*s^(p-1)\n")
    run(["degree", "--spec", spec])
    summary = json.loads(capsys.readouterr().out)
    assert summary["verdicts"]["zero"]["value"] is None
    assert summary["verdicts"]["zero"]["min"] < summary["lambda1"] < summary["verdicts"]["zero"]["max"]


def test_check_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["check", "--seed", 5, "--out", a]) == 0
    first = capsys.readouterr().out
    assert run(["check", "--seed", 5, "--out", b]) == 0
    assert capsys.readouterr().out == first
    assert first.count("PASS ") > 20 and "FAIL " not in first
    for name in ("summary.json", "check_report.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_check_detects_corrupted_tolerance(capsys):
    assert run(["check", "--override", "grad_tol=1"]) == cli.EXIT_UNSUCCESSFUL
    assert "FAIL resolve.stationarity" in capsys.readouterr().out


@pytest.mark.skipif(shutil.which("plapcone") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["plapcone", "eig", "--spec", str(write(tmp_path, EIG_SPEC))], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "converged"
