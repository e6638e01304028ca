"""Closed-loop Re-MPC and classical MPC, plus the benchmark metrics.

Each step builds the stacked window problem with the current terminal
weight, solves it (box-constrained QP when constraints are present, the
linear gain otherwise), applies the first input to the true plant and then
refreshes the terminal weight:

* ``re-mpc``       penalized sweep P <- K' H1 K + Q + mu Res' Res, with K the
                   penalized gain of the window at weight mu;
* ``re-mpc-exact`` exact sweep P <- K_X' Q_bar K_X + K_U' R_bar K_U + Q;
* ``c-mpc``        no update, the design matrix stays at its initial value.

The terminal-weight update always uses the unconstrained window gain, also
on steps where the QP has active inequality constraints.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .errors import LengthMismatch, RemmpcError, StepFailed
from .horizon import StackedProblem, build_stacked
from .model import Scenario
from .qp import QpProblem, QpStatus, solve_eq_qp, solve_qp
from .riccati import (
    gain_exact,
    gain_penalized,
    update_design_matrix_exact,
    update_design_matrix_penalized,
)

log = logging.getLogger(__name__)

ROUTES = ("auto", "qp", "eq-qp", "closed-form", "saddle")


@dataclass(frozen=True)
class ControllerKind:
    name: str
    mu: float | None = None

    def __post_init__(self):
        if self.name not in ("re-mpc", "re-mpc-exact", "c-mpc"):
            raise ValueError(f"unknown controller kind {self.name!r}")
        if self.name == "re-mpc" and not (self.mu is not None and self.mu > 0):
            raise ValueError("re-mpc needs a positive mu")

    @classmethod
    def penalized(cls, mu: float) -> "ControllerKind":
        return cls("re-mpc", float(mu))

    @classmethod
    def exact(cls) -> "ControllerKind":
        return cls("re-mpc-exact")

    @classmethod
    def classical(cls) -> "ControllerKind":
        return cls("c-mpc")

    @property
    def updates_design_matrix(self) -> bool:
        return self.name != "c-mpc"

    @property
    def label(self) -> str:
        if self.name == "re-mpc":
            return f"Re-MPC (mu={self.mu:g})"
        return {"re-mpc-exact": "Re-MPC (exact)", "c-mpc": "C-MPC"}[self.name]


@dataclass
class StepResult:
    u: np.ndarray
    x_pred: np.ndarray
    P_next: np.ndarray
    ubar: np.ndarray
    h1_norm: float
    qp_status: str
    active_set: list[int]
    residual: float = 0.0


@dataclass
class ClosedLoopRun:
    kind: ControllerKind
    horizon: int
    states: np.ndarray
    inputs: np.ndarray
    p_history: list = field(default_factory=list)
    h1_norms: list = field(default_factory=list)
    per_step_cost: list = field(default_factory=list)
    solver_statuses: list = field(default_factory=list)
    active_set_sizes: list = field(default_factory=list)
    predicted_states: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.inputs)


@dataclass(frozen=True)
class RunMetrics:
    mse_per_state: np.ndarray
    total_cost: float
    rc_design_matrix: float
    steps: int


def _window_mu(kind: ControllerKind, scenario: Scenario) -> float:
    return kind.mu if kind.name == "re-mpc" else np.inf


def _solve_window(sp: StackedProblem, x, scenario: Scenario, kind: ControllerKind,
                  route: str, warm_start, mu: float):
    """Returns (ubar, status, active set, gain-or-None)."""
    if route == "auto":
        if scenario.constraints is not None:
            route = "qp"
        else:
            route = "saddle" if kind.name == "re-mpc" else "closed-form"
    if route == "closed-form":
        gains = gain_exact(sp)
        return gains @ x, QpStatus.OPTIMAL.value, [], gains
    if route == "saddle":
        gains = gain_penalized(sp, mu)
        return gains @ x, QpStatus.OPTIMAL.value, [], gains
    F, g = sp.ineq()
    prob = QpProblem(sp.H1, sp.Aeq, sp.A_bar @ x, F, g)
    if route == "eq-qp":
        sol = solve_eq_qp(prob)
    elif route == "qp":
        sol = solve_qp(prob, warm_start=warm_start)
    else:
        raise ValueError(f"unknown route {route!r}")
    if not sol.ok:
        raise RemmpcError(f"QP returned status {sol.status.value}")
    return sol.ubar, sol.status.value, sol.active_set, None


def step(scenario: Scenario, kind: ControllerKind, x_k, P_k, route: str = "auto",
         warm_start=None) -> StepResult:
    """One receding-horizon step from state ``x_k`` with terminal weight ``P_k``."""
    x_k = np.asarray(x_k, dtype=float)
    mu = _window_mu(kind, scenario)
    sp = build_stacked(scenario.system, scenario.cost, P_k, scenario.l, mu, scenario.constraints)
    ubar, status, active, gains = _solve_window(sp, x_k, scenario, kind, route, warm_start, mu)
    X, U = sp.split(ubar)
    n, m = sp.n, sp.m

    residual = 0.0
    if kind.name == "c-mpc":
        P_next = np.array(P_k, dtype=float)
    elif kind.name == "re-mpc":
        if gains is None:
            gains = gain_penalized(sp, mu)
        state = update_design_matrix_penalized(sp, gains, mu)
        P_next, residual = state.P, state.residual
    else:
        if gains is None:
            gains = gain_exact(sp)
        state = update_design_matrix_exact(sp, gains)
        P_next, residual = state.P, state.residual
    return StepResult(
        u=U[:m].copy(), x_pred=X[:n].copy(), P_next=P_next, ubar=ubar,
        h1_norm=float(np.linalg.norm(sp.H1)), qp_status=status, active_set=list(active),
        residual=residual,
    )


def run_closed_loop(scenario: Scenario, kind: ControllerKind, route: str = "auto",
                    warm_start: bool = True, P0=None) -> ClosedLoopRun:
    """Simulate ``t_f`` steps of the receding-horizon loop on the true plant."""
    sys, cost = scenario.system, scenario.cost
    P = np.array(cost.P_terminal if P0 is None else P0, dtype=float)
    x = scenario.x0.copy()
    states, inputs = [x], []
    run = ClosedLoopRun(kind=kind, horizon=scenario.l, states=np.empty((0, sys.n)),
                        inputs=np.empty((0, sys.m)))
    prev_active = None
    t0 = time.perf_counter()
    for k in range(scenario.t_f):
        try:
            res = step(scenario, kind, x, P, route=route,
                       warm_start=prev_active if warm_start else None)
        except RemmpcError as exc:
            run.states, run.inputs = np.array(states), np.array(inputs).reshape(-1, sys.m)
            run.elapsed = time.perf_counter() - t0
            log.error("%s failed at step %d: %s", kind.label, k, exc)
            raise StepFailed(k, exc, partial=run) from exc
        run.p_history.append(P)
        run.h1_norms.append(res.h1_norm)
        run.per_step_cost.append(float(x @ cost.Q @ x + res.u @ cost.R @ res.u))
        run.solver_statuses.append(res.qp_status)
        run.active_set_sizes.append(len(res.active_set))
        run.predicted_states.append(res.x_pred)
        prev_active = res.active_set
        x = sys.A @ x + sys.B @ res.u
        states.append(x)
        inputs.append(res.u)
        P = res.P_next
        log.debug("k=%d u=%s |x|=%.3e", k, res.u, np.linalg.norm(x))
    run.elapsed = time.perf_counter() - t0
    run.states = np.array(states)
    run.inputs = np.array(inputs).reshape(-1, sys.m)
    return run


def _h1(run: ClosedLoopRun, cost, P) -> np.ndarray:
    l = run.horizon
    return block_diag(*([cost.Q] * (l - 1) + [P] + [cost.R] * l))


def compute_metrics(run: ClosedLoopRun, baseline: ClosedLoopRun | None, cost) -> RunMetrics:
    """MSE per state and total cost over the applied steps k = 0..t_f-1.

    ``rc_design_matrix`` is the mean over k of
    ||H1_run(k) - H1_base(k)||_F / ||H1_base(k)||_F (NaN without a baseline).
    """
    T = run.steps
    X = run.states[:T]
    U = run.inputs[:T]
    if T == 0:
        return RunMetrics(np.zeros(run.states.shape[1]), 0.0, float("nan"), 0)
    mse = np.mean(X**2, axis=0)
    total = float(np.einsum("ki,ij,kj->", X, cost.Q, X) + np.einsum("ki,ij,kj->", U, cost.R, U))
    rc = float("nan")
    if baseline is not None:
        if baseline.steps != T or baseline.horizon != run.horizon:
            raise LengthMismatch(
                f"baseline has {baseline.steps} steps / l={baseline.horizon}, run has {T} / l={run.horizon}"
            )
        ratios = []
        for P_run, P_base in zip(run.p_history, baseline.p_history):
            H_base = _h1(baseline, cost, P_base)
            ratios.append(np.linalg.norm(_h1(run, cost, P_run) - H_base) / np.linalg.norm(H_base))
        rc = float(np.mean(ratios))
    return RunMetrics(mse, total, rc, T)


@dataclass
class SweepPoint:
    mu: float
    run: ClosedLoopRun
    metrics: RunMetrics


@dataclass
class SweepResult:
    baseline: ClosedLoopRun
    baseline_metrics: RunMetrics
    points: list[SweepPoint]


def sweep_mu(scenario: Scenario, mus, route: str = "auto") -> SweepResult:
    """Penalized Re-MPC for every mu in ``mus`` against the C-MPC baseline."""
    mus = [float(mu) for mu in mus]
    if not mus:
        raise ValueError("mu list is empty")
    if any(not mu > 0 for mu in mus):
        raise ValueError("every mu must be positive")
    base = run_closed_loop(scenario, ControllerKind.classical(), route=route)
    base_metrics = compute_metrics(base, base, scenario.cost)
    points = []
    for mu in mus:
        run = run_closed_loop(scenario, ControllerKind.penalized(mu), route=route)
        points.append(SweepPoint(mu, run, compute_metrics(run, base, scenario.cost)))
    return SweepResult(base, base_metrics, points)


def max_plant_defect(run: ClosedLoopRun, scenario: Scenario) -> float:
    A, B = scenario.system.A, scenario.system.B
    X, U = run.states, run.inputs
    if not len(U):
        return 0.0
    defect = X[1 : len(U) + 1] - X[: len(U)] @ A.T - U @ B.T
    return float(np.max(np.abs(defect)))


def stays_in_boxes(run: ClosedLoopRun, scenario: Scenario, tol: float = 1e-9) -> bool:
    c = scenario.constraints
    if c is None:
        return True
    return all(c.contains_state(x, tol) for x in run.states) and all(
        c.contains_input(u, tol) for u in run.inputs
    )

