"""Regularized model predictive control with a Riccati-updated design matrix."""

from .controller import (
    ClosedLoopRun,
    ControllerKind,
    RunMetrics,
    compute_metrics,
    run_closed_loop,
    step,
    sweep_mu,
)
from .errors import RemmpcError
from .horizon import StackedProblem, build_stacked
from .model import BoxConstraints, CostSpec, LtiSystem, Scenario
from .qp import QpProblem, QpSolution, solve_eq_qp, solve_qp
from .riccati import gain_exact, gain_penalized, solve_dare, solve_steady_state
from .scenario import example1, load_scenario, parse_scenario

__version__ = "0.1.0"
