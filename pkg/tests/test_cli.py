import csv
import json
import os
import subprocess
import sys

import pytest

from grwlab import cli
from grwlab import config as cfgmod

DE_SITTER = """\
[fiber]
type = sphere
subdivisions = 2

[warp]
type = cosh

[init]
kind = random-bump
amplitude = 0.3
seed = 0
base = 0.0

[output]
formats = json, csv{extra}
"""

TORUS = """\
[fiber]
type = torus
resolution = 32,32

[warp]
type = exponential

[init]
kind = {kind}
amplitude = 0.3
seed = 3
base = 0.5
"""


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv(cfgmod.SEED_ENV, raising=False)


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_solve_de_sitter(tmp_path, capsys):
    cfg = _write(tmp_path, DE_SITTER.format(extra=", png"))
    out = tmp_path / "out"
    assert cli.main(["solve", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert set(cli.REPORT_KEYS) <= set(rep)
    assert rep["verdict"] == "constant" and rep["seed"] == 0
    assert rep["version"] and rep["config"]["fiber"]["type"] == "sphere"
    assert rep["theorems"] and "hypotheses" in rep["theorems"][0]
    assert (out / "residual_history.png").stat().st_size > 0
    assert "verdict: constant" in capsys.readouterr().out


def test_history_csv_format(tmp_path):
    cfg = _write(tmp_path, DE_SITTER.format(extra=""))
    out = tmp_path / "out"
    cli.main(["solve", "--config", cfg, "--out", str(out)])
    raw = (out / "residual_history.csv").read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["iteration", "residual_inf"]
    first = float(rows[1][1])
    assert repr(first) == rows[1][1] or float(repr(first)) == float(rows[1][1])
    assert len(rows[1][1].replace("e", "").replace("-", "").replace(".", "")) >= 15
    assert not list(out.glob("*.png"))
    assert not [p for p in os.listdir(out) if p.startswith(".")]


def test_constant_init_zero_iterations(tmp_path):
    cfg = _write(tmp_path, TORUS.format(kind="constant"))
    out = tmp_path / "o"
    assert cli.main(["solve", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["residual"]["iterations"] == 0


def test_seed_env_recorded(tmp_path, monkeypatch):
    monkeypatch.setenv(cfgmod.SEED_ENV, "9")
    cfg = _write(tmp_path, TORUS.format(kind="random-bump"))
    out = tmp_path / "o"
    assert cli.main(["solve", "--config", cfg, "--out", str(out)]) == 0
    assert json.loads((out / "report.json").read_text())["seed"] == 9


def test_bad_fiber_exit_1(tmp_path, capsys):
    cfg = _write(tmp_path, TORUS.format(kind="constant").replace("type = torus", "type = klein"))
    assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "fiber.type" in capsys.readouterr().err


def test_diverged_exit_2(tmp_path):
    cfg = _write(tmp_path, TORUS.format(kind="random-bump") + "\n[solver]\nmax_iter = 1\n")
    assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_exit_for_contradiction():
    class R:
        contradiction, verdict = True, "nonconstant-stationary"
    assert cli.exit_for(R()) == 3
    R.contradiction, R.verdict = False, "margin-stuck"
    assert cli.exit_for(R()) == 2


@pytest.mark.parametrize("suite", ["laplacian", "connection", "integral", "lk", "el", "maxprinciple"])
def test_verify_torus(tmp_path, suite):
    cfg = _write(tmp_path, TORUS.format(kind="random-bump"))
    out = tmp_path / "v"
    assert cli.main(["verify", "--config", cfg, "--suite", suite, "--out", str(out)]) == 0
    doc = json.loads((out / "identity_report.json").read_text())
    assert doc["suite"] == suite and doc["report"]["passed"]
    assert (out / "identity_ladder.csv").exists()


def test_verify_slice_integral(tmp_path):
    cfg = _write(tmp_path, TORUS.format(kind="constant"))
    out = tmp_path / "v"
    assert cli.main(["verify", "--config", cfg, "--suite", "integral", "--out", str(out)]) == 0
    doc = json.loads((out / "identity_report.json").read_text())
    assert doc["report"]["max_residual"] <= 1e-10


def test_verify_lk_on_sphere_exit_1(tmp_path):
    cfg = _write(tmp_path, DE_SITTER.format(extra=""))
    assert cli.main(["verify", "--config", cfg, "--suite", "lk", "--out", str(tmp_path / "v")]) == 1


def test_verify_failing_threshold_exit_2(tmp_path):
    cfg = _write(tmp_path, TORUS.format(kind="random-bump") + "\n[verify]\nthreshold = 5.0\n")
    assert cli.main(["verify", "--config", cfg, "--suite", "laplacian",
                     "--out", str(tmp_path / "v")]) == 2


def test_conditions_de_sitter(capsys):
    assert cli.main(["conditions", "--warp", "cosh", "--fiber", "sphere:2",
                     "--interval", "-1,1"]) == 0
    out = capsys.readouterr().out
    assert "NCC" in out and "mixed" in out


def test_conditions_writes_json(tmp_path):
    assert cli.main(["conditions", "--warp", "exponential", "--fiber", "torus:16,16",
                     "--interval", "-1,1", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "conditions.json").read_text())
    assert doc["report"]["hubble"]["sign"] == "non-negative"
    assert abs(doc["report"]["ncc"]["margin"]) <= 1e-12


def test_conditions_torus_cosh_ncc_fails(tmp_path):
    assert cli.main(["conditions", "--warp", "cosh", "--fiber", "torus",
                     "--interval", "-2,2", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "conditions.json").read_text())
    assert doc["report"]["ncc"]["margin"] == pytest.approx(-1.0, abs=1e-12) and not doc["report"]["ncc"]["holds"]


@pytest.mark.parametrize("args", [
    ["--warp", "polynomial:1,0.1@-1,1", "--fiber", "torus", "--interval", "-2,2"],
    ["--warp", "nope", "--fiber", "torus", "--interval", "0,1"],
    ["--warp", "cosh", "--fiber", "klein", "--interval", "0,1"],
    ["--warp", "cosh", "--fiber", "torus", "--interval", "1"],
])
def test_conditions_errors_exit_1(args):
    assert cli.main(["conditions"] + args) == 1


def test_sweep_amplitude(tmp_path):
    cfg = _write(tmp_path, DE_SITTER.format(extra=""))
    out = tmp_path / "s"
    assert cli.main(["sweep", "--config", cfg, "--axis", "init.amplitude",
                     "--values", "0.1,0.2,0.3", "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "sweep.csv").read_text().splitlines()))
    assert tuple(rows[0]) == cli.SWEEP_COLUMNS
    assert [r["verdict"] for r in rows] == ["constant"] * 3


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = _write(tmp_path, DE_SITTER.format(extra=""))
    res = {}
    for flag in ([], ["--parallel"]):
        out = tmp_path / ("p" if flag else "q")
        assert cli.main(["sweep", "--config", cfg, "--axis", "init.seed", "--values", "0,1",
                         "--out", str(out)] + flag) == 0
        rows = list(csv.DictReader((out / "sweep.csv").read_text().splitlines()))
        res[bool(flag)] = [(r["value"], r["verdict"], r["final_residual"]) for r in rows]
    assert res[True] == res[False]


@pytest.mark.parametrize("axis,values", [("fiber.type", "1,2"), ("init.amplitude", ""),
                                         ("init.amplitude", "a,b")])
def test_sweep_errors_exit_1(tmp_path, axis, values):
    cfg = _write(tmp_path, DE_SITTER.format(extra=""))
    assert cli.main(["sweep", "--config", cfg, "--axis", axis, "--values", values,
                     "--out", str(tmp_path / "s")]) == 1


def test_missing_subcommand_exit_1():
    assert cli.main([]) == 1


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "grwlab.cli", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "grwlab" in r.stdout
