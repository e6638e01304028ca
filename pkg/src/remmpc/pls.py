"""Weighted and equality-constrained least squares.

Three solvers share one saddle-point kernel:

* weighted LS        min (G e - h)' W (G e - h)
* penalized LS       same, with rows F e = phi appended at weight mu
* exact LSE          the mu -> inf limit, F e = phi enforced exactly

The saddle form keeps W^-1 (not W) in the top-left block, so the penalty
appears as 1/mu. That block simply becomes zero for mu = inf, which is the
exact equality-constrained system.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import matops
from .errors import RankDeficient, SingularKkt, SingularMatrix, SingularWeight

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WlsProblem:
    G: np.ndarray
    h: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        h = np.asarray(self.h, dtype=float)
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        if h.shape[0] != G.shape[0] or W.shape != (G.shape[0], G.shape[0]):
            raise ValueError(f"inconsistent shapes G{G.shape} h{h.shape} W{W.shape}")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "W", W)

    def objective(self, eta) -> float:
        r = self.G @ eta - self.h
        return float(r @ self.W @ r)


@dataclass(frozen=True)
class LseProblem:
    base: WlsProblem
    F: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        m = self.base.G.shape[1]
        F = np.asarray(self.F, dtype=float).reshape(-1, m)
        phi = np.asarray(self.phi, dtype=float).reshape(-1)
        if phi.shape[0] != F.shape[0]:
            raise ValueError(f"F has {F.shape[0]} rows but phi has {phi.shape[0]}")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "phi", phi)


def saddle_solve(W_inv, G, top_rhs) -> np.ndarray:
    """Solve [[W_inv, G], [G', 0]] [y; e] = [top_rhs; 0] and return e.

    ``top_rhs`` may be a vector or a matrix of right-hand sides. Raises
    :class:`SingularKkt` when the saddle matrix is numerically singular.
    """
    W_inv = np.asarray(W_inv, dtype=float)
    G = np.asarray(G, dtype=float)
    rows, cols = G.shape
    K = np.block([[W_inv, G], [G.T, np.zeros((cols, cols))]])
    top_rhs = np.asarray(top_rhs, dtype=float)
    pad = np.zeros((cols,) + top_rhs.shape[1:])
    try:
        sol = matops.solve(K, np.concatenate([top_rhs, pad]))
    except SingularMatrix as exc:
        raise SingularKkt(f"saddle-point matrix is singular: {exc}") from exc
    return sol[rows:]


def normal_equations(p: WlsProblem, pseudo: bool = False) -> np.ndarray:
    """(G' W G)^-1 G' W h, or with the pseudoinverse when ``pseudo``."""
    GtW = p.G.T @ p.W
    M = GtW @ p.G
    if pseudo:
        return matops.pinv(M) @ (GtW @ p.h)
    return matops.solve(M, GtW @ p.h)


def solve_wls(p: WlsProblem, allow_psd: bool = False, check: bool = False,
              tol: float = matops.DEFAULT_TOL) -> np.ndarray:
    """Unique minimizer of (G e - h)' W (G e - h).

    Uses the saddle form with W^-1. With ``allow_psd`` a merely PSD weight is
    handled through the pseudoinverse normal equations. ``check`` cross-checks
    the saddle answer against the normal equations.
    """
    m = p.G.shape[1]
    if matops.rank_of(p.G, tol) < m:
        raise RankDeficient(f"G has rank {matops.rank_of(p.G, tol)} < {m} columns")
    cls = matops.definiteness(p.W, tol)
    if cls is not matops.Definiteness.PD:
        if not allow_psd:
            raise SingularWeight(f"weight matrix is {cls.value}, not PD")
        return normal_equations(p, pseudo=True)
    eta = saddle_solve(matops.inv(p.W), p.G, p.h)
    if check:
        ref = normal_equations(p)
        err = np.linalg.norm(eta - ref)
        if err > 1e-9 * max(1.0, np.linalg.norm(ref)):
            raise AssertionError(f"saddle and normal-equation solutions differ by {err:.3e}")
    return eta


def _stacked_weight_inverse(p: LseProblem, mu: float) -> np.ndarray:
    k = p.F.shape[0]
    pen = 0.0 if np.isinf(mu) else 1.0 / mu
    return sla.block_diag(matops.inv(p.base.W), pen * np.eye(k))


def solve_penalized(p: LseProblem, mu: float) -> np.ndarray:
    """Method-of-weighting estimate: F e = phi appended as rows weighted by mu."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    G_bar = np.vstack([p.base.G, p.F])
    if matops.rank_of(G_bar) < G_bar.shape[1]:
        raise RankDeficient("stacked [G; F] is column rank deficient")
    h_bar = np.concatenate([p.base.h, p.phi])
    if not matops.is_pd(p.base.W):
        raise SingularWeight("weight matrix is not PD")
    return saddle_solve(_stacked_weight_inverse(p, mu), G_bar, h_bar)


def solve_lse_exact(p: LseProblem) -> np.ndarray:
    """Exact equality-constrained minimizer from the three-block saddle system."""
    G_bar = np.vstack([p.base.G, p.F])
    h_bar = np.concatenate([p.base.h, p.phi])
    if not matops.is_pd(p.base.W):
        raise SingularWeight("weight matrix is not PD")
    return saddle_solve(_stacked_weight_inverse(p, np.inf), G_bar, h_bar)


def check_lse_uniqueness(p: LseProblem, tol: float | None = 1e-10) -> bool:
    k, m = p.F.shape
    if matops.rank_of(p.F, tol) != k:
        return False
    return matops.rank_of(np.vstack([p.base.G, p.F]), tol) == m
