import numpy as np

from remmpc.controller import ControllerKind, compute_metrics, run_closed_loop
from remmpc.report import FAILED, fmt, metrics_csv, mu_tag, render_table, trajectory_csv, write_atomic


def test_fmt():
    assert fmt(0.1 + 0.2) == "0.3"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(np.int64(4)) == "4"
    assert fmt(float("nan")) == "nan"
    assert fmt("Optimal") == "Optimal"
    assert fmt(1e-20) == "1e-20"


def test_trajectory_csv_layout(ex1):
    run = run_closed_loop(ex1, ControllerKind.penalized(1e3))
    text = trajectory_csv(run)
    lines = text.split("\n")
    assert "\r" not in text and text.endswith("\n")
    assert lines[0] == "k,x1,x2,u1,per_step_cost,h1_norm,qp_status,active_set_size"
    assert len(lines) - 2 == ex1.t_f
    assert lines[1].startswith("0,0.5,-0.1,")
    assert trajectory_csv(run_closed_loop(ex1, ControllerKind.penalized(1e3))) == text


def test_failed_sentinel(ex1):
    run = run_closed_loop(ex1, ControllerKind.classical())
    last = trajectory_csv(run, failed_step=50).rstrip("\n").split("\n")[-1]
    assert last.split(",")[0] == "50"
    assert last.split(",")[1:] == [FAILED] * 7


def test_metrics_and_table(ex1):
    base = run_closed_loop(ex1, ControllerKind.classical())
    run = run_closed_loop(ex1, ControllerKind.penalized(1e3))
    entries = [(base, compute_metrics(base, base, ex1.cost)), (run, compute_metrics(run, base, ex1.cost))]
    csv = metrics_csv(entries).split("\n")
    assert csv[0] == "controller,mu,mse_x1,mse_x2,total_cost,rc_design_matrix,steps"
    assert csv[1].startswith("c-mpc,nan,") and csv[2].startswith("re-mpc,1000,")
    table = render_table(entries).splitlines()
    assert table[0].split()[0] == "Method" and "C-MPC" in table[2] and "Re-MPC" in table[3]
    assert "Elapsed" not in render_table(entries, elapsed=False)


def test_write_atomic(tmp_path):
    p = write_atomic(tmp_path / "a" / "b.csv", "x\n1\n")
    assert p.read_bytes() == b"x\n1\n"
    assert [f.name for f in p.parent.iterdir()] == ["b.csv"]


def test_mu_tag():
    assert mu_tag(100.0) == "100"
    assert mu_tag(1e6) == "1e06"
    assert mu_tag(0.5) == "0.5"
