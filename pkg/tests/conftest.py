import numpy as np
import pytest

from remmpc.model import BoxConstraints, CostSpec, LtiSystem, Scenario
from remmpc.scenario import example1

from . import oracles


@pytest.fixture
def ex1_system():
    return LtiSystem(oracles.EX1_A, oracles.EX1_B)


@pytest.fixture
def ex1_cost():
    return CostSpec(oracles.EX1_Q, oracles.EX1_R)


@pytest.fixture
def ex1():
    return example1().scenario


@pytest.fixture
def ex1_free():
    return example1(constrained=False).scenario


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_scenario(A, B, Q, R, x0, t_f=20, l=2, mu=1e3, box=None):
    return Scenario(LtiSystem(A, B), CostSpec(Q, R), x0, t_f, l, mu,
                    None if box is None else BoxConstraints(*box))
