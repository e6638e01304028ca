"""CSV and plain-text output for closed-loop runs.

CSV conventions: comma separated, header row, LF line endings, values with
12 significant digits. Files are written to a temporary name and moved into
place so a reader never sees a half-written file.
"""

from __future__ import annotations

import csv
import io
import os
from pathlib import Path

import numpy as np

from .controller import ClosedLoopRun, RunMetrics

FAILED = "FAILED"


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if np.isnan(v):
        return "nan"
    return format(v, ".12g")


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def trajectory_header(n: int, m: int) -> list[str]:
    return (["k"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)]
            + ["per_step_cost", "h1_norm", "qp_status", "active_set_size"])


def trajectory_rows(run: ClosedLoopRun):
    for k in range(run.steps):
        yield ([k] + list(run.states[k]) + list(run.inputs[k])
               + [run.per_step_cost[k], run.h1_norms[k], run.solver_statuses[k], run.active_set_sizes[k]])


def trajectory_csv(run: ClosedLoopRun, failed_step: int | None = None) -> str:
    n, m = run.states.shape[1], run.inputs.shape[1]
    header = trajectory_header(n, m)
    rows = list(trajectory_rows(run))
    if failed_step is not None:
        rows.append([failed_step] + [FAILED] * (len(header) - 1))
    return _csv_text(header, rows)


def metrics_header(n: int) -> list[str]:
    return ["controller", "mu"] + [f"mse_x{i + 1}" for i in range(n)] + ["total_cost", "rc_design_matrix", "steps"]


def metrics_row(run: ClosedLoopRun, metrics: RunMetrics) -> list:
    mu = run.kind.mu if run.kind.mu is not None else float("nan")
    return [run.kind.name, mu] + list(metrics.mse_per_state) + [
        metrics.total_cost, metrics.rc_design_matrix, metrics.steps]


def metrics_csv(entries) -> str:
    """``entries`` is an iterable of (run, metrics) pairs."""
    entries = list(entries)
    n = entries[0][1].mse_per_state.size
    return _csv_text(metrics_header(n), [metrics_row(r, m) for r, m in entries])


def render_table(entries, elapsed=True) -> str:
    """Aligned text table: method, MSE per state, total cost, RC, local elapsed time."""
    entries = list(entries)
    n = entries[0][1].mse_per_state.size
    header = ["Method"] + [f"MSE(x{i + 1})" for i in range(n)] + ["Total cost", "RC"]
    if elapsed:
        header.append("Elapsed (s)")
    body = []
    for run, m in entries:
        row = [run.kind.label] + [f"{v:.4f}" for v in m.mse_per_state] + [
            f"{m.total_cost:.2f}", "-" if np.isnan(m.rc_design_matrix) else f"{m.rc_design_matrix:.2f}"]
        if elapsed:
            row.append(f"{run.elapsed:.3f}")
        body.append(row)
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in [header] + body]
    rule = "-" * len(lines[0])
    return "\n".join([lines[0], rule] + lines[1:]) + "\n"


def sweep_csv(result) -> str:
    n = result.baseline_metrics.mse_per_state.size
    rows = [metrics_row(result.baseline, result.baseline_metrics)]
    rows += [metrics_row(p.run, p.metrics) for p in result.points]
    return _csv_text(metrics_header(n), rows)


def mu_tag(mu: float) -> str:
    return format(mu, "g").replace("+", "")
