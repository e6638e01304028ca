"""Stacked (simultaneous) prediction-window matrices.

The decision vector is ``col{X, U}``: predicted states x[k+1..k+l] first,
then inputs u[k..k+l-1], both in chronological order. Everything that
slices a decision vector goes through :class:`StackedProblem`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .errors import DimensionMismatch
from .model import BoxConstraints, CostSpec, LtiSystem


def lower_shift(size: int, block: int = 1) -> np.ndarray:
    """Lower shift matrix moving each block of ``block`` rows one block down."""
    return np.eye(size, k=-block)


@dataclass(frozen=True)
class StackedProblem:
    l: int
    n: int
    m: int
    mu: float
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    A_bar: np.ndarray
    A_tilde: np.ndarray
    B1_bar: np.ndarray
    B2_bar: np.ndarray
    Q_bar: np.ndarray
    R_bar: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    Aeq: np.ndarray
    F_bar: np.ndarray | None
    g_bar: np.ndarray | None

    @property
    def n_x(self) -> int:
        return self.l * self.n

    @property
    def n_u(self) -> int:
        return self.l * self.m

    @property
    def n_dec(self) -> int:
        return self.n_x + self.n_u

    @property
    def script_B2(self) -> np.ndarray:
        """[[0, 0], [B1_bar, -B2_bar]]: maps the decision to (x-slot, residual)."""
        top = np.zeros((self.n, self.n_dec))
        return np.vstack([top, self.Aeq])

    @property
    def script_A2(self) -> np.ndarray:
        return np.vstack([-np.eye(self.n), self.A_bar])

    @property
    def script_B(self) -> np.ndarray:
        return np.vstack([np.eye(self.n_dec), self.script_B2])

    @property
    def script_A(self) -> np.ndarray:
        return np.vstack([np.zeros((self.n_dec, self.n)), self.script_A2])

    def split(self, ubar) -> tuple[np.ndarray, np.ndarray]:
        """Split a decision vector (or gain matrix) into its X and U parts."""
        ubar = np.asarray(ubar)
        return ubar[: self.n_x], ubar[self.n_x :]

    def join(self, X, U) -> np.ndarray:
        return np.concatenate([np.asarray(X), np.asarray(U)])

    def ineq(self) -> tuple[np.ndarray, np.ndarray]:
        """Inequality rows F_bar z <= g_bar with infinite bounds removed."""
        if self.F_bar is None:
            return np.zeros((0, self.n_dec)), np.zeros(0)
        keep = np.isfinite(self.g_bar)
        return self.F_bar[keep], self.g_bar[keep]


def build_stacked(
    sys: LtiSystem,
    cost: CostSpec,
    P_current,
    l: int,
    mu: float = np.inf,
    constraints: BoxConstraints | None = None,
) -> StackedProblem:
    """Assemble every block matrix of one prediction window of length ``l``.

    ``P_current`` is the terminal weight placed in the last block of Q_bar.
    ``mu`` only enters H2; ``mu=inf`` is allowed and denotes the exact limit.
    """
    n, m = sys.n, sys.m
    P = np.atleast_2d(np.asarray(P_current, dtype=float))
    if cost.Q.shape != (n, n) or cost.R.shape != (m, m) or P.shape != (n, n):
        raise DimensionMismatch(
            f"weights Q{cost.Q.shape} R{cost.R.shape} P{P.shape} do not fit n={n}, m={m}"
        )
    if l < 1:
        raise ValueError(f"prediction horizon must be >= 1, got {l}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    A, B, Q, R = sys.A, sys.B, cost.Q, cost.R
    ln = l * n

    A_bar = np.zeros((ln, n))
    A_bar[:n] = A
    A_tilde = np.kron(np.eye(l), A) @ lower_shift(ln, n)
    B1_bar = np.eye(ln) - A_tilde
    B2_bar = np.kron(np.eye(l), B)
    Q_bar = block_diag(*([Q] * (l - 1) + [P]))
    R_bar = np.kron(np.eye(l), R)
    H1 = block_diag(Q_bar, R_bar)
    H2 = block_diag(Q, np.diag(np.full(ln, float(mu))))
    Aeq = np.hstack([B1_bar, -B2_bar])

    F_bar = g_bar = None
    if constraints is not None:
        F_bar = block_diag(np.kron(np.eye(l), constraints.F_x), np.kron(np.eye(l), constraints.F_u))
        g_bar = np.concatenate([np.tile(constraints.g_x, l), np.tile(constraints.g_u, l)])

    return StackedProblem(
        l=l, n=n, m=m, mu=float(mu), A=A, B=B, Q=Q, R=R, P=P,
        A_bar=A_bar, A_tilde=A_tilde, B1_bar=B1_bar, B2_bar=B2_bar,
        Q_bar=Q_bar, R_bar=R_bar, H1=H1, H2=H2, Aeq=Aeq, F_bar=F_bar, g_bar=g_bar,
    )


def dynamics_residual(sp: StackedProblem, x0, ubar) -> np.ndarray:
    """B1_bar X - A_bar x0 - B2_bar U; zero iff the decision is a true rollout."""
    X, U = sp.split(ubar)
    return sp.B1_bar @ X - sp.A_bar @ np.asarray(x0) - sp.B2_bar @ U


def stage_cost(sp: StackedProblem, x0, ubar) -> float:
    """X' Q_bar X + U' R_bar U + x0' Q x0 for one prediction window."""
    X, U = sp.split(ubar)
    x0 = np.asarray(x0)
    return float(X @ sp.Q_bar @ X + U @ sp.R_bar @ U + x0 @ sp.Q @ x0)


def rollout(sys: LtiSystem, x0, U) -> np.ndarray:
    """Stacked predicted states x[1..l] obtained by simulating U from x0."""
    U = np.asarray(U, dtype=float).reshape(-1, sys.m)
    x = np.asarray(x0, dtype=float)
    out = []
    for u in U:
        x = sys.A @ x + sys.B @ u
        out.append(x)
    return np.concatenate(out) if out else np.zeros(0)
