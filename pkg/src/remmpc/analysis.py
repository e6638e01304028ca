"""Numerical certificates for the fixed point, closed-loop stability and the penalty limit.

All randomness goes through ``numpy.random.default_rng(seed)``; a failing
certificate carries the offending instance as plain lists so it can be
replayed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matops
from .errors import AssumptionViolated, CertificationFailed
from .horizon import StackedProblem, build_stacked
from .model import CostSpec, LtiSystem, check_controllability, check_detectability
from .pls import LseProblem, WlsProblem, solve_lse_exact, solve_penalized
from .riccati import closed_loop_map, gain_exact, gain_penalized, gain_residual, solve_steady_state

SPECTRAL_RADII = (0.8, 1.0, 1.2)


def _instance(sys: LtiSystem, cost: CostSpec, **extra) -> dict:
    out = {"A": sys.A.tolist(), "B": sys.B.tolist(), "Q": cost.Q.tolist(), "R": cost.R.tolist()}
    out.update(extra)
    return out


def random_system(rng: np.random.Generator, n: int, m: int, rho: float) -> LtiSystem:
    """A with uniform [-1, 1] entries rescaled to spectral radius ``rho``; Gaussian B."""
    A = rng.uniform(-1.0, 1.0, (n, n))
    r = matops.spectral_radius(A)
    while r < 1e-6:
        A = rng.uniform(-1.0, 1.0, (n, n))
        r = matops.spectral_radius(A)
    return LtiSystem(A * (rho / r), rng.normal(size=(n, m)))


def random_pd(rng: np.random.Generator, n: int, floor: float = 0.1) -> np.ndarray:
    L = rng.normal(size=(n, n))
    return matops.symmetrize(L @ L.T / n + floor * np.eye(n))


def random_cost(rng: np.random.Generator, n: int, m: int) -> CostSpec:
    Q = random_pd(rng, n)
    return CostSpec(Q, random_pd(rng, m), Q)


def random_assumption_pair(rng: np.random.Generator, n: int, m: int, rho: float):
    """Controllable system with PD weights (hence detectable)."""
    while True:
        sys = random_system(rng, n, m, rho)
        if check_controllability(sys):
            return sys, random_cost(rng, n, m)


def random_undetectable_pair(rng: np.random.Generator, n: int, m: int):
    """Controllable system whose unstable mode (eigenvalue 1.2) Q cannot see."""
    while True:
        T = rng.normal(size=(n, n))
        if matops.rcond(T) < 1e-3:
            continue
        eig = np.concatenate([[1.2], rng.uniform(-0.9, 0.9, n - 1)])
        A = T @ np.diag(eig) @ np.linalg.inv(T)
        sys = LtiSystem(A, rng.normal(size=(n, m)))
        if not check_controllability(sys):
            continue
        v = T[:, 0] / np.linalg.norm(T[:, 0])
        M = rng.normal(size=(n, n)) @ (np.eye(n) - np.outer(v, v))
        Q = matops.symmetrize(M.T @ M)
        P_term = Q + np.eye(n)
        return sys, CostSpec(Q, random_pd(rng, m), P_term)


def _require(sys, Q):
    if not check_controllability(sys):
        raise AssumptionViolated("(A, B) is not controllable")
    if not check_detectability(sys, Q):
        raise AssumptionViolated("(A, Q) is not detectable")


@dataclass
class FixedPointReport:
    P: np.ndarray
    trials: int
    max_deviation: float
    all_pd: bool
    iterations: list[int] = field(default_factory=list)
    seed: int = 0


def certify_pd_fixed_point(sys: LtiSystem, cost: CostSpec, l: int, trials: int = 20,
                           seed: int = 0, tol: float = 1e-7) -> FixedPointReport:
    """Steady-state P reached from ``trials`` random PD starts must coincide and be PD."""
    _require(sys, cost.Q)
    rng = np.random.default_rng(seed)
    ref = solve_steady_state(sys, cost, l, check_assumptions=False)
    scale = np.linalg.norm(ref.P)
    dev, pd, its = 0.0, matops.is_pd(ref.P), [ref.iteration]
    for _ in range(trials):
        P0 = random_pd(rng, sys.n) * rng.uniform(0.1, 10.0)
        st = solve_steady_state(sys, cost, l, P0=P0, check_assumptions=False)
        its.append(st.iteration)
        dev = max(dev, np.linalg.norm(st.P - ref.P) / scale)
        pd = pd and matops.is_pd(st.P)
    report = FixedPointReport(ref.P, trials, float(dev), pd, its, seed)
    if dev > tol or not pd:
        raise CertificationFailed(
            f"fixed point not unique/PD: max relative deviation {dev:.3e}, all PD {pd}",
            _instance(sys, cost, l=l, seed=seed),
        )
    return report


@dataclass
class StabilityReport:
    P: np.ndarray
    closed_loop: np.ndarray
    spectral_radius: float
    block_radii: list[float]
    margin: float
    first_block_error: float


def certify_stability(sys: LtiSystem, cost: CostSpec, l: int, tol: float = 1e-10,
                      max_iter: int = 10000) -> StabilityReport:
    """Spectral radii of (I + B R^-1 B' P)^-1 A and of each predicted-state gain block.

    P is the steady-state terminal weight for horizon ``l``; the j-th
    predicted-state block of the window gain is the j-th power of the one-step
    closed loop at the fixed point, so every block is checked.
    """
    _require(sys, cost.Q)
    st = solve_steady_state(sys, cost, l, tol=tol, max_iter=max_iter, check_assumptions=False)
    Kcl = closed_loop_map(sys.A, sys.B, cost.R, st.P)
    rho = matops.spectral_radius(Kcl)
    gains = gain_exact(build_stacked(sys, cost, st.P, l))
    blocks = [gains.block(j, sys.n) for j in range(1, l + 1)]
    radii = [matops.spectral_radius(Kj) for Kj in blocks]
    first_err = float(np.linalg.norm(blocks[0] - Kcl))
    report = StabilityReport(st.P, Kcl, rho, radii, 1.0 - max([rho] + radii), first_err)
    if max([rho] + radii) >= 1.0:
        raise CertificationFailed(
            f"closed loop not stable: spectral radius {max([rho] + radii):.6f}",
            _instance(sys, cost, l=l),
        )
    return report


@dataclass
class MuLimitReport:
    mus: list[float]
    errors: list[float]
    residuals: list[float]
    slope: float


def fit_loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def certify_mu_limit(sp: StackedProblem, mu_grid, slope_range=(-1.3, -0.7)) -> MuLimitReport:
    """Penalized gain error vs the exact gain must decay like 1/mu, residual monotonically."""
    mus = sorted(float(mu) for mu in mu_grid)
    if len(mus) < 3:
        raise ValueError("need at least three mu values to fit a slope")
    K_ex = gain_exact(sp).K
    errs, ress = [], []
    for mu in mus:
        g = gain_penalized(sp, mu)
        errs.append(float(np.linalg.norm(g.K - K_ex)))
        ress.append(float(np.linalg.norm(gain_residual(sp, g))))
    slope = fit_loglog_slope(mus, errs)
    report = MuLimitReport(mus, errs, ress, slope)
    decreasing = all(b < a for a, b in zip(ress, ress[1:]))
    if not (slope_range[0] <= slope <= slope_range[1]) or not decreasing:
        raise CertificationFailed(
            f"penalty limit check failed: slope {slope:.3f}, residual decreasing {decreasing}",
            {"mus": mus, "errors": errs, "residuals": ress},
        )
    return report


def lse_mu_slope(p: LseProblem, mus) -> float:
    """Log-log slope of ||e_mu - e_exact|| against mu."""
    exact = solve_lse_exact(p)
    errs = [np.linalg.norm(solve_penalized(p, mu) - exact) for mu in mus]
    return fit_loglog_slope(mus, errs)


def random_lse(rng: np.random.Generator, rows: int = 8, m: int = 5, k: int = 2) -> LseProblem:
    G = rng.normal(size=(rows, m))
    W = random_pd(rng, rows, floor=0.5)
    F = rng.normal(size=(k, m))
    return LseProblem(WlsProblem(G, rng.normal(size=rows), W), F, rng.normal(size=k))
