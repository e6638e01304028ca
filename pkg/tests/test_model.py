import numpy as np
import pytest

from remmpc.errors import DimensionMismatch, EmptyBox, ScenarioError
from remmpc.model import (
    BoxConstraints,
    CostSpec,
    LtiSystem,
    Scenario,
    box_to_polytope,
    check_controllability,
    check_detectability,
    pbh_controllable,
)

from . import oracles


def test_example1_is_controllable(ex1_system):
    assert check_controllability(ex1_system)
    assert pbh_controllable(ex1_system)


def test_zero_input_matrix_not_controllable():
    sys = LtiSystem([[1.1, 0.0], [0.0, 0.5]], np.zeros((2, 1)))
    assert not check_controllability(sys)
    assert not pbh_controllable(sys)


def test_kalman_and_pbh_agree_on_random_systems(rng):
    for _ in range(30):
        A = rng.normal(size=(3, 3))
        B = rng.normal(size=(3, 1)) if rng.random() < 0.7 else np.zeros((3, 1))
        sys = LtiSystem(A, B)
        assert check_controllability(sys) == pbh_controllable(sys)


def test_uncontrollable_mode_detected():
    A = np.diag([0.5, 2.0])
    sys = LtiSystem(A, [[1.0], [0.0]])
    assert not check_controllability(sys)


def test_detectability():
    sys = LtiSystem(np.diag([1.2, 0.5]), [[1.0], [1.0]])
    assert check_detectability(sys, np.diag([1.0, 0.0]))
    assert not check_detectability(sys, np.diag([0.0, 1.0]))
    # stable hidden mode is fine
    assert check_detectability(LtiSystem(np.diag([0.9, 0.5]), [[1.0], [1.0]]), np.zeros((2, 2)))


def test_system_shape_checks():
    with pytest.raises(DimensionMismatch):
        LtiSystem(np.eye(2), np.ones((3, 1)))
    with pytest.raises((DimensionMismatch, ValueError)):
        LtiSystem(np.ones((2, 3)), np.ones((2, 1)))
    sys = LtiSystem(np.eye(2), [1.0, 2.0])
    assert (sys.n, sys.m) == (2, 1)


def test_cost_defaults_terminal_weight_to_q():
    c = CostSpec(oracles.EX1_Q, oracles.EX1_R)
    np.testing.assert_array_equal(c.P_terminal, oracles.EX1_Q)
    assert c.validate() == []


def test_cost_validate_reports_problems():
    c = CostSpec(np.eye(2), np.zeros((1, 1)))
    assert any("R" in p for p in c.validate())
    c = CostSpec(-np.eye(2), np.eye(1), np.eye(2))
    assert any("Q" in p for p in c.validate())


def test_box_to_polytope():
    F, g = box_to_polytope([-1.0, -2.0], [3.0, 4.0])
    np.testing.assert_array_equal(F, np.vstack([np.eye(2), -np.eye(2)]))
    np.testing.assert_array_equal(g, [3.0, 4.0, 1.0, 2.0])
    with pytest.raises(EmptyBox):
        box_to_polytope([1.0], [0.0])


def test_box_membership():
    box = BoxConstraints([-0.45, -0.45], [0.5, 0.5], [-0.25], [0.25])
    assert box.contains_state([0.5, -0.45])
    assert not box.contains_state([0.51, 0.0])
    assert not box.contains_input([-0.3])
    free = BoxConstraints.unbounded(2, 1)
    assert free.contains_state([1e9, -1e9])


def test_scenario_validation(ex1_system, ex1_cost):
    with pytest.raises(ScenarioError):
        Scenario(ex1_system, ex1_cost, [0.5, -0.1], t_f=5, l=6)
    with pytest.raises(ScenarioError):
        Scenario(ex1_system, ex1_cost, [0.5, -0.1], t_f=5, l=0)
    with pytest.raises(ScenarioError):
        Scenario(ex1_system, ex1_cost, [0.5, -0.1], t_f=5, l=2, mu=0.0)
    with pytest.raises(ScenarioError):
        Scenario(ex1_system, ex1_cost, [0.5], t_f=5, l=2)


def test_scenario_equality_and_immutability(ex1):
    from remmpc.scenario import example1

    assert ex1 == example1().scenario
    assert ex1 != example1(constrained=False).scenario
    with pytest.raises(ValueError):
        ex1.x0[0] = 1.0
