import os
import subprocess
import sys

import numpy as np
import pytest

from remmpc.cli import EXIT_INVALID, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, main
from remmpc.scenario import bundled_path, dump_scenario, example1

EX1 = str(bundled_path())


def write(tmp_path, text, name="s.scenario"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


BASE = """
system: {A: [[1.1, 0.0], [0.0, 0.5]], B: %s}
cost: {Q: [[1, 0], [0, 1]], R: %s}
run: {x0: [0.1, 0.1], t_f: 10, l: 2}
"""


def test_check_example1(capsys):
    assert main(["check", EX1]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_check_certify(capsys):
    assert main(["check", EX1, "--certify"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "slope" in out and "spectral radius 0.788820" in out


def test_check_uncontrollable(tmp_path, capsys):
    assert main(["check", write(tmp_path, BASE % ("[[0.0], [0.0]]", "[[1.0]]"))]) == EXIT_INVALID
    assert "FAIL  controllable" in capsys.readouterr().out


def test_check_zero_r(tmp_path, capsys):
    assert main(["check", write(tmp_path, BASE % ("[[1.0], [1.0]]", "[[0.0]]"))]) == EXIT_INVALID
    assert "FAIL  R PD" in capsys.readouterr().out


def test_run_refuses_without_force(tmp_path):
    s = write(tmp_path, BASE % ("[[0.0], [0.0]]", "[[1.0]]"))
    assert main(["run", s, "--out", str(tmp_path / "o")]) == EXIT_INVALID
    assert not (tmp_path / "o").exists()


def test_run_writes_outputs_deterministically(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", EX1, "--controller", "re-mpc", "--mu", "1e3", "--out", str(a)]) == EXIT_OK
    assert main(["run", EX1, "--controller", "re-mpc", "--mu", "1e3", "--out", str(b)]) == EXIT_OK
    for name in ("trajectory.csv", "metrics.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "trajectory.png").stat().st_size > 0
    rows = (a / "metrics.csv").read_text().splitlines()
    assert float(rows[1].split(",")[4]) == pytest.approx(10.66, rel=0.05)


def test_run_c_mpc_cost(tmp_path):
    assert main(["run", EX1, "--controller", "c-mpc", "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "metrics.csv").read_text().splitlines()
    assert float(rows[1].split(",")[4]) == pytest.approx(12.13, rel=0.05)


def test_exact_unconstrained_matches_gain_path(tmp_path):
    from remmpc.controller import ControllerKind, run_closed_loop

    sf = example1(constrained=False, controller="re-mpc-exact")
    s = write(tmp_path, dump_scenario(sf))
    assert main(["run", s, "--out", str(tmp_path / "o")]) == EXIT_OK
    ref = run_closed_loop(sf.scenario, ControllerKind.exact(), route="saddle")
    rows = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()[1:]
    got = np.array([[float(v) for v in r.split(",")[1:4]] for r in rows])
    np.testing.assert_allclose(got[:, :2], ref.states[:50], atol=1e-10)
    np.testing.assert_allclose(got[:, 2], ref.inputs[:, 0], atol=1e-10)


def test_compare(tmp_path, capsys):
    assert main(["compare", EX1, "--out", str(tmp_path)]) == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["compare.csv", "compare.png", "compare.txt",
                     "trajectory_c-mpc.csv", "trajectory_re-mpc.csv"]
    rows = [r.split(",") for r in (tmp_path / "compare.csv").read_text().splitlines()[1:]]
    assert rows[0][0] == "c-mpc" and rows[1][0] == "re-mpc"
    assert float(rows[1][4]) < float(rows[0][4])
    assert float(rows[1][2]) < float(rows[0][2]) and float(rows[1][3]) < float(rows[0][3])


def test_sweep(tmp_path):
    assert main(["sweep", EX1, "--mu-list", "100,10", "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(rows) == 4
    assert (tmp_path / "trajectory_mu_100.csv").exists() and (tmp_path / "trajectory_mu_10.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate", EX1],
        ["sweep", EX1, "--mu-list", ""],
        ["sweep", EX1, "--mu-list", "1,-2"],
        ["run", EX1, "--controller", "lqr"],
        ["run", EX1, "--mu", "abc"],
        ["run", EX1, "--tol", "0"],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == EXIT_USAGE


def test_horizon_longer_than_run(tmp_path):
    s = write(tmp_path, BASE.replace("l: 2", "l: 20") % ("[[1.0], [1.0]]", "[[1.0]]"))
    assert main(["compare", s, "--out", str(tmp_path / "o")]) == EXIT_INVALID


def test_solver_failure_flushes_partial_csv(tmp_path):
    text = dump_scenario(example1()).replace("x_upper: [0.5, 0.5]", "x_upper: [0.05, 0.05]")
    text = text.replace("x_lower: [-0.45, -0.45]", "x_lower: [-0.05, -0.05]")
    s = write(tmp_path, text)
    out = tmp_path / "o"
    assert main(["run", s, "--out", str(out)]) == EXIT_SOLVER
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[-1].startswith("0,FAILED")


def test_console_entry_point_and_logging(tmp_path):
    env = dict(os.environ, REMMPC_LOG="debug")
    r = subprocess.run([sys.executable, "-m", "remmpc", "run", EX1, "--out", str(tmp_path)],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 0
    assert "DEBUG" in r.stderr
    env["REMMPC_LOG"] = "off"
    r = subprocess.run([sys.executable, "-m", "remmpc", "check", EX1], capture_output=True, text=True, env=env)
    assert r.returncode == 0 and r.stderr == ""
