"""Feedback gains and terminal-weight (design matrix) updates.

A gain matrix K maps the current state to the whole optimal decision
``col{X*, U*} = K x``. Two routes exist:

* :func:`gain_penalized` solves the penalized least-squares problem in
  saddle form, with the dynamics enforced at weight ``mu`` (``mu=inf`` gives
  the exact equality-constrained answer);
* :func:`gain_exact` is the mu-free closed form built on
  ``O = B1 Q_bar^-1 B1' + B2 R_bar^-1 B2'``.

The update of the terminal weight after each step is one Riccati sweep over
the window: ``P <- K' H1 K + Q + mu Res' Res`` (penalized) or
``P <- A_bar' O^-1 A_bar + Q`` (exact).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from . import matops
from .errors import AssumptionViolated, NoConvergence, NotPd, SingularKkt, SingularMatrix, SingularO
from .horizon import StackedProblem, build_stacked
from .model import CostSpec, LtiSystem, check_controllability, check_detectability
from .pls import saddle_solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GainMatrices:
    K: np.ndarray
    n_x: int

    @property
    def K_X(self) -> np.ndarray:
        return self.K[: self.n_x]

    @property
    def K_U(self) -> np.ndarray:
        return self.K[self.n_x :]

    def block(self, j: int, n: int) -> np.ndarray:
        """Gain of the j-th predicted state (1-based), i.e. x[k+j|k] = block(j) x[k]."""
        return self.K_X[(j - 1) * n : j * n]

    def __matmul__(self, x):
        return self.K @ x


@dataclass(frozen=True)
class RiccatiState:
    P: np.ndarray
    iteration: int = 0
    residual: float = 0.0


def _check_pd(P, what="updated P", tol=matops.DEFAULT_TOL):
    if not matops.is_pd(P, tol):
        raise NotPd(f"{what} is not positive definite")


def gain_penalized(sp: StackedProblem, mu: float | None = None) -> GainMatrices:
    """K = [0 I] [[Hs^-1, Bs], [Bs', 0]]^-1 [As; 0] with Hs = H1 (+) Q (+) mu I."""
    mu = sp.mu if mu is None else float(mu)
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    Bs, As = sp.script_B, sp.script_A
    pen = 0.0 if np.isinf(mu) else 1.0 / mu
    if matops.is_pd(sp.H1) and matops.is_pd(sp.Q):
        H_inv = block_diag(matops.inv(sp.H1), matops.inv(sp.Q), pen * np.eye(sp.n_x))
        K = saddle_solve(H_inv, Bs, As)
    else:
        # PSD weights: the x-slot rows of Bs are zero, so the Q block only adds a
        # constant; eliminate it and solve the reduced problem directly.
        if np.isinf(mu):
            return gain_kkt(sp)
        M = sp.H1 + mu * sp.Aeq.T @ sp.Aeq
        try:
            K = matops.solve(M, mu * sp.Aeq.T @ sp.A_bar)
        except SingularMatrix as exc:
            raise SingularKkt(str(exc)) from exc
    return GainMatrices(K, sp.n_x)


def gain_kkt(sp: StackedProblem) -> GainMatrices:
    """Gain from the KKT system of min z' H1 z s.t. Aeq z = A_bar x."""
    N, r = sp.n_dec, sp.n_x
    KKT = np.block([[2.0 * sp.H1, sp.Aeq.T], [sp.Aeq, np.zeros((r, r))]])
    rhs = np.vstack([np.zeros((N, sp.n)), sp.A_bar])
    try:
        sol = matops.solve(KKT, rhs)
    except SingularMatrix as exc:
        raise SingularKkt(f"equality-constrained KKT matrix is singular: {exc}") from exc
    return GainMatrices(sol[:N], sp.n_x)


def o_matrix(sp: StackedProblem) -> np.ndarray:
    """B1 Q_bar^-1 B1' + B2 R_bar^-1 B2'."""
    return (sp.B1_bar @ matops.solve(sp.Q_bar, sp.B1_bar.T)
            + sp.B2_bar @ matops.solve(sp.R_bar, sp.B2_bar.T))


def gain_exact(sp: StackedProblem) -> GainMatrices:
    """mu-free closed form: col{X*, U*} = diag(Q_bar, -R_bar)^-1 [B1 B2]' O^-1 A_bar x.

    Needs Q_bar and R_bar PD; with a merely PSD Q the KKT route is used.
    """
    if not (matops.is_pd(sp.Q_bar) and matops.is_pd(sp.R_bar)):
        return gain_kkt(sp)
    try:
        O = o_matrix(sp)
        lam = matops.solve(O, sp.A_bar)
    except SingularMatrix as exc:
        raise SingularO(f"O is not invertible: {exc}") from exc
    K_X = matops.solve(sp.Q_bar, sp.B1_bar.T @ lam)
    K_U = -matops.solve(sp.R_bar, sp.B2_bar.T @ lam)
    return GainMatrices(np.vstack([K_X, K_U]), sp.n_x)


def gain_residual(sp: StackedProblem, gains: GainMatrices) -> np.ndarray:
    """B1 K_X - B2 K_U - A_bar."""
    return sp.B1_bar @ gains.K_X - sp.B2_bar @ gains.K_U - sp.A_bar


def update_design_matrix_penalized(sp: StackedProblem, gains: GainMatrices,
                                   mu: float | None = None, check_pd: bool = True) -> RiccatiState:
    """P_new = K' H1 K + Q + mu Res' Res."""
    mu = sp.mu if mu is None else float(mu)
    res = gain_residual(sp, gains)
    P = gains.K.T @ sp.H1 @ gains.K + sp.Q
    if np.isfinite(mu):
        P = P + mu * res.T @ res
    P = matops.symmetrize(P)
    if check_pd:
        _check_pd(P)
    return RiccatiState(P, residual=float(np.linalg.norm(res)))


def update_design_matrix_exact(sp: StackedProblem, gains: GainMatrices,
                               check_pd: bool = True) -> RiccatiState:
    """P_new = K_X' Q_bar K_X + K_U' R_bar K_U + Q."""
    K_X, K_U = gains.K_X, gains.K_U
    P = matops.symmetrize(K_X.T @ sp.Q_bar @ K_X + K_U.T @ sp.R_bar @ K_U + sp.Q)
    if check_pd:
        _check_pd(P)
    res = gain_residual(sp, gains)
    return RiccatiState(P, residual=float(np.linalg.norm(res)))


def riccati_map(sp: StackedProblem) -> np.ndarray:
    """A_bar' O^-1 A_bar + Q, the closed form of the exact update."""
    try:
        lam = matops.solve(o_matrix(sp), sp.A_bar)
    except SingularMatrix as exc:
        raise SingularO(str(exc)) from exc
    return matops.symmetrize(sp.A_bar.T @ lam + sp.Q)


def _exact_step(sys, cost, P, l):
    sp = build_stacked(sys, cost, P, l)
    if matops.is_pd(sp.Q_bar):
        return riccati_map(sp)
    return update_design_matrix_exact(sp, gain_kkt(sp), check_pd=False).P


def _require_assumptions(sys, Q):
    if not check_controllability(sys):
        raise AssumptionViolated("(A, B) is not controllable")
    if not check_detectability(sys, Q):
        raise AssumptionViolated("(A, Q) is not detectable")


def solve_steady_state(sys: LtiSystem, cost: CostSpec, l: int, tol: float = 1e-10,
                       max_iter: int = 10000, P0=None,
                       check_assumptions: bool = True) -> RiccatiState:
    """Fixed point of P -> A_bar' O(P)^-1 A_bar + Q for horizon ``l``.

    Iterates from ``P0`` (default: the terminal weight of ``cost``) until the
    relative change drops below ``tol``.
    """
    if check_assumptions:
        _require_assumptions(sys, cost.Q)
    P = np.array(cost.P_terminal if P0 is None else P0, dtype=float)
    for it in range(1, max_iter + 1):
        P_new = _exact_step(sys, cost, P, l)
        change = np.linalg.norm(P_new - P)
        P = P_new
        if change <= tol * max(np.linalg.norm(P), np.finfo(float).tiny):
            _check_pd(P, "steady-state P")
            return RiccatiState(P, iteration=it, residual=float(change))
    raise NoConvergence(f"steady-state Riccati iteration did not settle in {max_iter} steps")


def dare_step(A, B, Q, R, P) -> np.ndarray:
    """A'PA - A'PB (R + B'PB)^-1 B'PA + Q."""
    BtP = B.T @ P
    S = R + BtP @ B
    return matops.symmetrize(A.T @ P @ A - (BtP @ A).T @ matops.solve(S, BtP @ A) + Q)


def solve_dare(sys: LtiSystem, Q, R, tol: float = 1e-10, max_iter: int = 10000,
               P0=None, check_assumptions: bool = True) -> RiccatiState:
    """Discrete algebraic Riccati equation by value iteration from P0 = Q."""
    Q = matops.as_matrix(Q)
    R = matops.as_matrix(R)
    if check_assumptions:
        _require_assumptions(sys, Q)
    P = np.array(Q if P0 is None else P0, dtype=float)
    for it in range(1, max_iter + 1):
        P_new = dare_step(sys.A, sys.B, Q, R, P)
        change = np.linalg.norm(P_new - P)
        P = P_new
        if change <= tol * max(np.linalg.norm(P), np.finfo(float).tiny):
            if check_assumptions:
                _check_pd(P, "DARE solution")
            return RiccatiState(P, iteration=it, residual=float(change))
    raise NoConvergence(f"DARE iteration did not settle in {max_iter} steps")


def woodbury_form(A, B, R, P, Q) -> np.ndarray:
    """A' (P^-1 + B R^-1 B')^-1 A + Q."""
    M = matops.inv(P) + B @ matops.solve(R, B.T)
    return matops.symmetrize(A.T @ matops.solve(M, A) + Q)


def closed_loop_map(A, B, R, P) -> np.ndarray:
    """(I + B R^-1 B' P)^-1 A, the one-step predicted closed loop under terminal weight P."""
    n = A.shape[0]
    return matops.solve(np.eye(n) + B @ matops.solve(R, B.T) @ P, A)
