"""Matplotlib figures for closed-loop runs (states and applied input against k)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}


def _bounds(ax, lo, hi):
    for v in (lo, hi):
        if np.isfinite(v):
            ax.axhline(v, color="0.4", lw=0.8, ls=":")


def plot_runs(runs, path, constraints=None, title=None):
    """One panel per state plus one per input; every run overlaid."""
    runs = list(runs)
    n = runs[0].states.shape[1]
    m = runs[0].inputs.shape[1]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(n + m, 1, figsize=(6.0, 1.8 * (n + m)), sharex=True)
        axes = np.atleast_1d(axes)
        for run in runs:
            k = np.arange(run.states.shape[0])
            for i in range(n):
                axes[i].plot(k, run.states[:, i], lw=1.2, label=run.kind.label)
            ku = np.arange(run.inputs.shape[0])
            for j in range(m):
                axes[n + j].step(ku, run.inputs[:, j], where="post", lw=1.2, label=run.kind.label)
        for i in range(n):
            axes[i].set_ylabel(f"$x_{i + 1}$")
            if constraints is not None:
                _bounds(axes[i], constraints.x_lower[i], constraints.x_upper[i])
        for j in range(m):
            axes[n + j].set_ylabel(f"$u_{j + 1}$")
            if constraints is not None:
                _bounds(axes[n + j], constraints.u_lower[j], constraints.u_upper[j])
        axes[-1].set_xlabel("k")
        axes[0].legend(loc="upper right", fontsize=7)
        if title:
            axes[0].set_title(title)
        fig.tight_layout()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return path
