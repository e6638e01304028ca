import numpy as np
import pytest

from remmpc.controller import (
    ControllerKind,
    compute_metrics,
    max_plant_defect,
    run_closed_loop,
    step,
    stays_in_boxes,
    sweep_mu,
)
from remmpc.errors import LengthMismatch, StepFailed
from remmpc.model import BoxConstraints
from remmpc.scenario import example1

from . import oracles


@pytest.fixture(scope="module")
def runs():
    sc = example1().scenario
    return {
        "c": run_closed_loop(sc, ControllerKind.classical()),
        "re": run_closed_loop(sc, ControllerKind.penalized(1e3)),
        "ex": run_closed_loop(sc, ControllerKind.exact()),
    }


def test_kind_validation():
    with pytest.raises(ValueError):
        ControllerKind("mpc")
    with pytest.raises(ValueError):
        ControllerKind("re-mpc")
    assert ControllerKind.penalized(100).label == "Re-MPC (mu=100)"
    assert not ControllerKind.classical().updates_design_matrix


def test_run_shapes(runs):
    r = runs["re"]
    assert r.states.shape == (51, 2) and r.inputs.shape == (50, 1)
    assert len(r.p_history) == len(r.h1_norms) == len(r.solver_statuses) == 50
    assert r.steps == 50


def test_plant_follows_true_model(ex1, runs):
    for r in runs.values():
        assert max_plant_defect(r, ex1) < 1e-14


def test_boxes_respected(ex1, runs):
    for r in runs.values():
        assert stays_in_boxes(r, ex1, tol=1e-9)
    assert max(runs["re"].active_set_sizes) > 0


def test_re_mpc_regulates_to_origin(runs):
    assert np.linalg.norm(runs["re"].states[-1]) < 1e-3
    assert np.linalg.norm(runs["ex"].states[-1]) < 1e-3


def test_classical_keeps_design_matrix_fixed(runs):
    for P in runs["c"].p_history:
        np.testing.assert_array_equal(P, oracles.EX1_Q)
    assert len(set(runs["c"].h1_norms)) == 1


def test_re_mpc_design_matrix_approaches_dare(runs):
    np.testing.assert_allclose(runs["ex"].p_history[-1], oracles.EX1_DARE, rtol=1e-6)


def test_first_step_by_hand(ex1_free):
    # unconstrained first move equals the condensed window optimum under P = Q
    res = step(ex1_free, ControllerKind.exact(), ex1_free.x0, oracles.EX1_Q)
    _, U = oracles.condensed_window(oracles.EX1_A, oracles.EX1_B, oracles.EX1_Q, oracles.EX1_R,
                                    oracles.EX1_Q, 2, oracles.EX1_X0)
    assert res.u[0] == pytest.approx(U[0], abs=1e-12)
    np.testing.assert_allclose(res.P_next, oracles.finite_horizon_riccati(
        oracles.EX1_A, oracles.EX1_B, oracles.EX1_Q, oracles.EX1_R, oracles.EX1_Q, 2), rtol=1e-11)


@pytest.mark.parametrize("route", ["closed-form", "saddle", "eq-qp", "qp"])
def test_routes_agree_unconstrained(ex1_free, route):
    ref = run_closed_loop(ex1_free, ControllerKind.exact(), route="closed-form")
    r = run_closed_loop(ex1_free, ControllerKind.exact(), route=route)
    np.testing.assert_allclose(r.states, ref.states, atol=1e-10)
    np.testing.assert_allclose(r.inputs, ref.inputs, atol=1e-10)


def test_metrics_by_hand(ex1, runs):
    r = runs["re"]
    m = compute_metrics(r, runs["c"], ex1.cost)
    X, U = r.states[:50], r.inputs
    total = sum(x @ oracles.EX1_Q @ x for x in X) + float(np.sum(U**2))
    assert m.total_cost == pytest.approx(total, rel=1e-12)
    np.testing.assert_allclose(m.mse_per_state, np.mean(X**2, axis=0), rtol=1e-12)
    assert m.rc_design_matrix > 0
    assert compute_metrics(runs["c"], runs["c"], ex1.cost).rc_design_matrix == 0.0
    assert np.isnan(compute_metrics(r, None, ex1.cost).rc_design_matrix)


def test_metrics_length_mismatch(ex1, runs):
    short = run_closed_loop(example1().scenario.__class__(
        ex1.system, ex1.cost, ex1.x0, 10, 2, 1e3, ex1.constraints), ControllerKind.classical())
    with pytest.raises(LengthMismatch):
        compute_metrics(runs["re"], short, ex1.cost)


def test_self_comparison_identical_rows(ex1):
    a = run_closed_loop(ex1, ControllerKind.classical())
    b = run_closed_loop(ex1, ControllerKind.classical())
    ma, mb = compute_metrics(a, a, ex1.cost), compute_metrics(b, a, ex1.cost)
    assert ma.total_cost == mb.total_cost
    np.testing.assert_array_equal(ma.mse_per_state, mb.mse_per_state)


def test_sweep_single_mu_equals_run(ex1, runs):
    res = sweep_mu(ex1, [1e3])
    np.testing.assert_array_equal(res.points[0].run.states, runs["re"].states)
    with pytest.raises(ValueError):
        sweep_mu(ex1, [])
    with pytest.raises(ValueError):
        sweep_mu(ex1, [-1.0])


def test_infeasible_box_raises_step_failed(ex1):
    from dataclasses import replace

    tight = replace(ex1, constraints=BoxConstraints([-0.05, -0.05], [0.05, 0.05], [-0.25], [0.25]))
    with pytest.raises(StepFailed) as info:
        run_closed_loop(tight, ControllerKind.penalized(1e3))
    assert info.value.partial is not None
    assert info.value.step == 0 and info.value.partial.steps == 0
