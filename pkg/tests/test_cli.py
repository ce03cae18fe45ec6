import io
import json
import os
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from wavectl import __version__
from wavectl.cli import (
    EXIT_OK,
    EXIT_REJECTED,
    EXIT_TOLERANCE,
    EXIT_USAGE,
    REPORT_SCHEMA,
    field_csv,
    read_config,
    read_field_csv,
    report_json,
    run,
)

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("WAVECTL_REGEN_GOLDEN") == "1"

SIN_PERIODIC = ["solve-periodic", "--f", "sin(2*pi*x)", "--g", "sin(2*pi*x)", "--L", "1"]


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, err = call(*argv, "--json")
    return code, json.loads(out), err


def without_clock(text):
    data = json.loads(text)
    data.pop("wall_clock_s", None)
    return data


def approx_equal(a, b, path="$"):
    """Structural equality with floats compared at 1e-9 relative, 1e-12 absolute."""
    if isinstance(a, dict):
        assert isinstance(b, dict) and set(a) == set(b), path
        for k in a:
            approx_equal(a[k], b[k], f"{path}.{k}")
    elif isinstance(a, list):
        assert isinstance(b, list) and len(a) == len(b), path
        for i, (x, y) in enumerate(zip(a, b)):
            approx_equal(x, y, f"{path}[{i}]")
    elif isinstance(a, float) or isinstance(b, float):
        assert b == pytest.approx(a, rel=1e-9, abs=1e-12), path
    else:
        assert a == b, path


def golden(name, text):
    path = GOLDEN / name
    if REGEN:
        path.parent.mkdir(exist_ok=True)
        path.write_text(text)
    return path.read_text()


# -- exit codes ------------------------------------------------------------


def test_version():
    with pytest.raises(SystemExit) as info:
        from wavectl.cli import build_parser

        build_parser().parse_args(["--version"])
    assert info.value.code == 0
    assert call("--version")[0] == EXIT_OK


def test_periodic_admissible_exits_zero():
    code, rep, _ = report(*SIN_PERIODIC, "--T", "1/4")
    assert code == EXIT_OK
    assert rep["status"] == "ok"
    assert rep["admissibility"] == {"p": 1, "q": 2, "C_s": 1.0, "two_T_over_L": "1/2"}


def test_periodic_integer_ratio_exits_three():
    code, rep, err = report(*SIN_PERIODIC, "--T", "1")
    assert code == EXIT_REJECTED
    assert rep["status"] == "rejected"
    assert "integer" in rep["failure"]["reason"] and "esonan" in rep["failure"]["reason"]
    assert "REJECTED" in err


def test_resonance_violation_exits_three():
    code, rep, _ = report("solve-periodic", "--f", "sin(2*pi*x)", "--g", "0", "--L", "2", "--T", "1/2")
    assert code == EXIT_REJECTED
    assert rep["failure"]["type"] == "ResonanceError"


def test_check_dirichlet_incompatible():
    code, rep, err = report("check", "--kind", "dirichlet", "--f", "x", "--L", "1")
    assert code == EXIT_REJECTED
    assert rep["failure"]["type"] == "CompatibilityError"
    assert "f(L) = 1" in rep["failure"]["reason"]
    assert rep["compatibility"]["f(L)"] == pytest.approx(1.0)


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "--kind", "dirichlet", "--f", "sin(pi*x)", "--L", "1"],
        ["check", "--kind", "neumann", "--f", "cos(pi*x)", "--L", "1"],
        ["check", "--kind", "periodic", "--f", "0", "--T", "1/3", "--L", "1"],
        ["check", "--kind", "line", "--f", "sin(x)", "--g", "cos(x)", "--T", "1/2"],
        ["check", "--kind", "wavemap", "--f", "0", "--g=-ln(1.5 + x^2)", "--T", "1"],
    ],
)
def test_check_passes(argv):
    code, rep, _ = report(*argv)
    assert code == EXIT_OK and rep["status"] == "ok"


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "--kind", "periodic", "--f", "0", "--T", "1/2", "--L", "1"],
        ["check", "--kind", "wavemap", "--f", "1", "--g", "1", "--T", "1"],
        ["check", "--kind", "neumann", "--f", "x^2", "--L", "1"],
    ],
)
def test_check_rejects(argv):
    assert call(*argv)[0] == EXIT_REJECTED


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["solve-line", "--f", "sin(x)"],
        ["solve-line", "--f", "sin(x", "--g", "0", "--T", "1"],
        ["solve-line", "--f", "foo(x)", "--g", "0", "--T", "1"],
        ["solve-line", "--f", "y", "--g", "0", "--T", "1"],
        ["solve-line", "--f", "0", "--g", "0", "--T", "1", "--bridge", "cubic"],
        ["solve-line", "--f", "0", "--g", "0", "--T", "1", "--window", "3"],
        ["solve-line", "--f", "0", "--g", "0", "--T", "1", "--tol", "nope=1"],
        ["solve-line", "--f", "0", "--g", "0", "--T", "1", "--tol", "terminal=abc"],
        ["solve-line", "--f", "0", "--g", "0", "--T", "1", "--unknown"],
        ["solve-periodic", "--f", "0", "--g", "0", "--T", "1/4", "--L", "one"],
        ["check", "--kind", "sideways", "--f", "0"],
        ["check", "--kind", "periodic", "--f", "0", "--T", "1/4"],
        ["radial3d", "--f", "0", "--g", "0", "--T", "1", "--points", "1,2"],
    ],
)
def test_usage_errors_exit_one(argv):
    code, out, err = call(*argv)
    assert code == EXIT_USAGE
    assert "usage error" in err and out == ""


def test_tolerance_failure_exits_two():
    code, rep, err = report("solve-line", "--f", "sin(x)", "--g", "cos(x)", "--T", "1/2", "--tol", "terminal=1e-30")
    assert code == EXIT_TOLERANCE
    assert rep["status"] == "tolerance_failure"
    assert rep["tolerances"]["terminal"] == 1e-30
    assert not rep["checks"]["terminal_sup_error"]["passed"]
    assert "terminal_sup_error" in rep["failure"]["reason"]


@pytest.mark.parametrize(
    "argv",
    [
        ["wavemap", "--f", "1", "--g", "1", "--T", "1/2"],
        ["wavemap", "--f", "0", "--g=-ln(1.5 - 0.4*sin(x))", "--T", "1"],
        ["curvature-flow", "--f", "cos(2*pi*x)", "--L", "1", "--T", "1/4", "--k-target", "1"],
        ["curvature-flow", "--f", "2 + cos(2*pi*x)", "--L", "1", "--T", "1/2", "--k-target", "1"],
        ["solve-dirichlet", "--f", "x", "--g", "0", "--L", "1", "--T", "1/2"],
        ["solve-dirichlet", "--f", "sin(pi*x)", "--g", "0", "--L", "1", "--T", "1"],
    ],
)
def test_rejections_exit_three(argv):
    assert call(*argv)[0] == EXIT_REJECTED


@pytest.mark.parametrize(
    "argv",
    [
        ["solve-line", "--f", "sin(x)", "--g", "cos(x)", "--T", "1/2", "--bridge", "sine"],
        ["solve-dirichlet", "--f", "sin(pi*x)", "--g", "0", "--L", "1", "--T", "1/2"],
        ["solve-dirichlet", "--f", "x", "--g", "x", "--L", "1", "--T", "1/2", "--left", "0", "--right", "1"],
        ["solve-neumann", "--f", "cos(pi*x)", "--g", "0", "--L", "1", "--T", "1/2"],
        ["wavemap", "--f", "0", "--g=-ln(3 - cos(pi*x))", "--T", "1/2"],
        ["curvature-flow", "--f", "2 + cos(2*pi*x)", "--L", "1", "--T", "1/3", "--k-target", "2"],
        ["radial3d", "--f", "exp(-(x^2 + y^2 + z^2))", "--g", "0", "--T", "1"],
    ],
)
def test_commands_verify(argv):
    code, rep, _ = report(*argv)
    assert code == EXIT_OK, rep.get("failure")
    assert all(c["passed"] for c in rep["checks"].values())


# -- configuration ---------------------------------------------------------


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# line problem\nf = sin(x)\ng = cos(x)  # target\nT = 1/2\n\n")
    code, rep, _ = report("solve-line", "--config", str(cfg))
    assert code == EXIT_OK and rep["problem"]["T"] == "1/2"
    code, rep, _ = report("solve-line", "--config", str(cfg), "--T", "1")
    assert code == EXIT_OK and rep["problem"]["T"] == "1"


@pytest.mark.parametrize("text", ["bogus = 1\n", "f sin(x)\n", "L = 1\n"])
def test_bad_config_is_usage_error(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert call("solve-line", "--config", str(cfg), "--f", "0", "--g", "0", "--T", "1")[0] == EXIT_USAGE


def test_missing_config_is_usage_error(tmp_path):
    assert call("solve-line", "--config", str(tmp_path / "absent"))[0] == EXIT_USAGE


def test_read_config_keys(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("k-target = 2\njobs = 3\n")
    assert read_config(cfg) == {"k_target": "2", "jobs": "3"}


def test_jobs_env_overrides(monkeypatch):
    from wavectl.cli import make_config

    assert make_config(["radial3d", "--f", "0", "--g", "0", "--T", "1", "--jobs", "2"]).jobs == 2
    monkeypatch.setenv("WAVECTL_JOBS", "4")
    assert make_config(["radial3d", "--f", "0", "--g", "0", "--T", "1", "--jobs", "2"]).jobs == 4


# -- outputs ---------------------------------------------------------------


def test_report_is_deterministic(tmp_path):
    texts = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert call(*SIN_PERIODIC, "--T", "1/4", "--report", str(path))[0] == EXIT_OK
        texts.append(path.read_text())
    strip = lambda t: "\n".join(l for l in t.splitlines() if "wall_clock_s" not in l)  # noqa: E731
    assert strip(texts[0]) == strip(texts[1])


def test_csv_is_byte_identical(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        call("solve-line", "--f", "sin(x)", "--g", "cos(x)", "--T", "1/2", "--csv", str(p))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_radial_jobs_do_not_change_output(tmp_path):
    outs = []
    for jobs in ("1", "3"):
        p = tmp_path / f"r{jobs}.csv"
        argv = ["radial3d", "--f", "exp(-(x^2 + y^2 + z^2))", "--g", "0", "--T", "1", "--points", "0,0,0;1,0,0;0,0.5,0"]
        assert call(*argv, "--jobs", jobs, "--csv", str(p), "--nt", "3")[0] == EXIT_OK
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    header, rows = read_field_csv(tmp_path / "r1.csv")
    assert header == ["t", "x1", "x2", "x3", "y"] and rows.shape == (9, 5)


def test_report_schema_and_echo():
    code, rep, _ = report(*SIN_PERIODIC, "--T", "1/4", "--tol", "terminal=1e-9")
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["version"] == __version__ and rep["tool"] == "wavectl"
    assert rep["problem"] == {"f": "sin(2*pi*x)", "g": "sin(2*pi*x)", "L": "1", "T": "1/4"}
    assert rep["tolerances"]["terminal"] == 1e-9
    assert rep["checks"]["terminal_sup_error"]["tol"] == 1e-9
    assert rep["wall_clock_s"] >= 0


def test_nonfinite_metrics_become_null():
    rep = {
        "schema_version": "1",
        "tool": "wavectl",
        "version": __version__,
        "command": "check",
        "problem": {},
        "status": "ok",
        "tolerances": {},
        "checks": {"a": {"value": float("nan"), "tol": 1.0, "passed": False}},
        "metrics": {"big": float("inf"), "arr": np.array([1.0, np.nan])},
    }
    data = json.loads(report_json(rep))
    assert data["checks"]["a"]["value"] is None
    assert data["metrics"] == {"big": None, "arr": [1.0, None]}


def test_report_schema_rejects_missing_status():
    with pytest.raises(jsonschema.ValidationError):
        report_json({"schema_version": "1", "tool": "wavectl", "version": "x", "command": "check"})


def test_csv_layout_and_precision():
    text = field_csv(lambda t, x: t + x / 3, [0.0, 0.5], [0.0, 1.0, 2.0])
    lines = text.splitlines()
    assert lines[0] == "t,x,y"
    assert [l.split(",")[:2] for l in lines[1:]] == [["0", "0"], ["0", "1"], ["0", "2"], ["0.5", "0"], ["0.5", "1"], ["0.5", "2"]]
    assert lines[2].split(",")[2] == format(1 / 3, ".17g")


def test_csv_round_trip(tmp_path):
    from wavectl.line_control import LineTBVP, solve_line

    p = tmp_path / "f.csv"
    assert call("solve-line", "--f", "sin(x)", "--g", "cos(x)", "--T", "1/2", "--csv", str(p), "--nt", "6", "--nx", "41")[0] == 0
    header, rows = read_field_csv(p)
    assert header == ["t", "x", "y"] and rows.shape == (6 * 41, 3)
    sol = solve_line(LineTBVP("sin(x)", "cos(x)", 0.5, window=(-5, 5)), integral="antiderivative")
    assert np.max(np.abs(sol.field(rows[:, 0], rows[:, 1]) - rows[:, 2])) <= 1e-15
    assert np.array_equal(np.unique(rows[:, 0]), np.linspace(0, 0.5, 6))


@pytest.mark.parametrize(
    "argv, header",
    [
        (SIN_PERIODIC + ["--T", "1/4"], "t,theta,y"),
        (["curvature-flow", "--f", "2 + cos(2*pi*x)", "--L", "1", "--T", "1/3", "--k-target", "2"], "t,s,k"),
        (["solve-neumann", "--f", "cos(pi*x)", "--g", "0", "--L", "1", "--T", "1/2"], "t,x,y"),
    ],
)
def test_csv_headers(tmp_path, argv, header):
    p = tmp_path / "o.csv"
    assert call(*argv, "--csv", str(p), "--nt", "2", "--nx", "3")[0] == EXIT_OK
    assert p.read_text().splitlines()[0] == header


def test_check_has_no_csv(tmp_path):
    argv = ["check", "--kind", "periodic", "--f", "0", "--T", "1/4", "--L", "1", "--csv", str(tmp_path / "x.csv")]
    assert call(*argv)[0] == EXIT_USAGE


# -- golden files ----------------------------------------------------------


def test_golden_constant_csv(tmp_path):
    p = tmp_path / "c.csv"
    assert call("solve-line", "--f", "1", "--g", "1", "--T", "1", "--csv", str(p), "--nt", "3", "--nx", "5")[0] == 0
    assert p.read_text() == golden("constant_line.csv", p.read_text())
    _, rows = read_field_csv(p)
    assert np.all(rows[:, 2] == 1.0)


def test_golden_sin_report(tmp_path):
    p = tmp_path / "r.json"
    assert call(*SIN_PERIODIC, "--T", "1/4", "--report", str(p))[0] == EXIT_OK
    text = p.read_text()
    expected = golden("sin_periodic_report.json", text)
    approx_equal(without_clock(expected), without_clock(text))


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "wavectl", *SIN_PERIODIC, "--T", "1"], capture_output=True, text=True, timeout=120
    )
    assert proc.returncode == EXIT_REJECTED
    assert "integer" in proc.stderr
