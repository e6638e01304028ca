import numpy as np
import pytest

from remmpc.analysis import random_lse
from remmpc.errors import RankDeficient, SingularWeight
from remmpc.pls import (
    LseProblem,
    WlsProblem,
    check_lse_uniqueness,
    normal_equations,
    solve_lse_exact,
    solve_penalized,
    solve_wls,
)

from . import oracles


def test_wls_matches_lstsq(rng):
    G = rng.normal(size=(8, 3))
    h = rng.normal(size=8)
    W = np.diag(rng.uniform(0.5, 2.0, 8))
    Wh = np.sqrt(W)
    ref = np.linalg.lstsq(Wh @ G, Wh @ h, rcond=None)[0]
    np.testing.assert_allclose(solve_wls(WlsProblem(G, h, W), check=True), ref, atol=1e-12)


def test_wls_is_stationary(rng):
    p = WlsProblem(rng.normal(size=(6, 3)), rng.normal(size=6), np.eye(6))
    eta = solve_wls(p)
    base = p.objective(eta)
    for _ in range(20):
        d = rng.normal(size=3) * 1e-6
        assert p.objective(eta + d) >= base - 1e-15


def test_wls_errors(rng):
    G = np.ones((4, 2))
    with pytest.raises(RankDeficient):
        solve_wls(WlsProblem(G, np.ones(4), np.eye(4)))
    p = WlsProblem(rng.normal(size=(4, 2)), rng.normal(size=4), np.diag([1.0, 1.0, 1.0, 0.0]))
    with pytest.raises(SingularWeight):
        solve_wls(p)
    np.testing.assert_allclose(solve_wls(p, allow_psd=True), normal_equations(p, pseudo=True))


def test_lse_exact_matches_null_space_oracle(rng):
    for _ in range(20):
        p = random_lse(rng)
        ref = oracles.lse_nullspace(p.base.G, p.base.h, p.base.W, p.F, p.phi)
        e = solve_lse_exact(p)
        np.testing.assert_allclose(e, ref, atol=1e-9)
        np.testing.assert_allclose(p.F @ e, p.phi, atol=1e-10)


def test_penalized_converges_like_one_over_mu(rng):
    p = random_lse(rng)
    exact = solve_lse_exact(p)
    errs = [np.linalg.norm(solve_penalized(p, mu) - exact) for mu in (1e3, 1e4, 1e5)]
    assert errs[1] / errs[0] == pytest.approx(0.1, rel=0.05)
    assert errs[2] / errs[1] == pytest.approx(0.1, rel=0.05)
    np.testing.assert_allclose(solve_penalized(p, np.inf), exact, atol=1e-12)


def test_penalized_matches_augmented_normal_equations(rng):
    p = random_lse(rng)
    mu = 37.0
    Gb = np.vstack([p.base.G, p.F])
    Wb = np.block([[p.base.W, np.zeros((8, 2))], [np.zeros((2, 8)), mu * np.eye(2)]])
    hb = np.concatenate([p.base.h, p.phi])
    ref = np.linalg.solve(Gb.T @ Wb @ Gb, Gb.T @ Wb @ hb)
    np.testing.assert_allclose(solve_penalized(p, mu), ref, atol=1e-10)


def test_penalized_rejects_bad_mu(rng):
    with pytest.raises(ValueError):
        solve_penalized(random_lse(rng), 0.0)


def test_uniqueness_check(rng):
    p = random_lse(rng)
    assert check_lse_uniqueness(p)
    F = np.vstack([p.F[0], p.F[0]])
    q = LseProblem(p.base, F, np.zeros(2))
    assert not check_lse_uniqueness(q)
