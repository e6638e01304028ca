"""Convex QP with linear equalities and inequalities, by a primal active-set method.

    minimize    z' H z + f' z
    subject to  Aeq z = beq,  Fineq z <= gineq

H must be positive definite. Problem sizes are tiny (tens of variables),
so every working-set subproblem is solved by a dense KKT factorization.
A feasible start comes from a warm-start working set when one is supplied
and valid, else from the inequality-free optimum, else from a Phase-1 LP.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import matops
from .errors import SingularKkt, SingularMatrix

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
DUAL_CLAMP = -1e-10


class QpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    Aeq: np.ndarray | None = None
    beq: np.ndarray | None = None
    Fineq: np.ndarray | None = None
    gineq: np.ndarray | None = None
    f: np.ndarray | None = None

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        N = H.shape[0]
        object.__setattr__(self, "H", H)
        for M, v in (("Aeq", "beq"), ("Fineq", "gineq")):
            mat, vec = getattr(self, M), getattr(self, v)
            mat = np.zeros((0, N)) if mat is None else np.asarray(mat, dtype=float).reshape(-1, N)
            vec = np.zeros(0) if vec is None else np.asarray(vec, dtype=float).reshape(-1)
            if mat.shape[0] != vec.shape[0]:
                raise ValueError(f"{M} has {mat.shape[0]} rows, {v} has {vec.shape[0]}")
            object.__setattr__(self, M, mat)
            object.__setattr__(self, v, vec)
        f = np.zeros(N) if self.f is None else np.asarray(self.f, dtype=float).reshape(N)
        object.__setattr__(self, "f", f)

    @property
    def n_var(self) -> int:
        return self.H.shape[0]

    def objective(self, z) -> float:
        z = np.asarray(z)
        return float(z @ self.H @ z + self.f @ z)

    def without_inequalities(self) -> "QpProblem":
        return QpProblem(self.H, self.Aeq, self.beq, None, None, self.f)


@dataclass(frozen=True)
class QpSolution:
    ubar: np.ndarray
    active_set: list[int]
    objective: float
    status: QpStatus
    eq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ineq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status is QpStatus.OPTIMAL


def _kkt_solve(p: QpProblem, work: list[int]):
    """Minimize over {Aeq z = beq, F_W z = g_W}; returns z, eq and working multipliers."""
    N = p.n_var
    C = np.vstack([p.Aeq, p.Fineq[work]])
    d = np.concatenate([p.beq, p.gineq[work]])
    r = C.shape[0]
    K = np.block([[2.0 * p.H, C.T], [C, np.zeros((r, r))]])
    try:
        sol = matops.solve(K, np.concatenate([-p.f, d]))
    except SingularMatrix as exc:
        raise SingularKkt(f"KKT matrix singular for working set {work}: {exc}") from exc
    z = sol[:N]
    nu = sol[N : N + p.Aeq.shape[0]]
    lam = sol[N + p.Aeq.shape[0] :]
    return z, nu, lam


def _finish(p, z, work, nu, lam_w, iterations):
    lam = np.zeros(p.Fineq.shape[0])
    lam[work] = lam_w
    return QpSolution(
        ubar=z, active_set=sorted(work), objective=p.objective(z), status=QpStatus.OPTIMAL,
        eq_multipliers=nu, ineq_multipliers=lam, iterations=iterations,
    )


def solve_eq_qp(p: QpProblem) -> QpSolution:
    """Minimizer subject to the equality constraints only (inequalities ignored)."""
    if p.Aeq.shape[0] and matops.rank_of(p.Aeq) < p.Aeq.shape[0]:
        raise SingularKkt("Aeq is not full row rank")
    z, nu, _ = _kkt_solve(p, [])
    return QpSolution(z, [], p.objective(z), QpStatus.OPTIMAL, eq_multipliers=nu,
                      ineq_multipliers=np.zeros(p.Fineq.shape[0]))


def _independent_subset(p: QpProblem, candidates, tol=1e-10) -> list[int]:
    """Greedy (lowest index first) subset of rows independent of Aeq and each other."""
    chosen: list[int] = []
    base = p.Aeq
    rank = matops.rank_of(base, tol) if base.shape[0] else 0
    for i in sorted(int(c) for c in candidates):
        trial = np.vstack([base, p.Fineq[chosen + [i]]])
        if matops.rank_of(trial, tol) > rank:
            chosen.append(i)
            rank += 1
        if rank >= p.n_var:
            break
    return chosen


def _phase_one(p: QpProblem, tol: float):
    """Feasible point via an LP, or None when the feasible set is empty."""
    N = p.n_var
    res = linprog(
        np.zeros(N),
        A_ub=p.Fineq if p.Fineq.shape[0] else None,
        b_ub=p.gineq if p.Fineq.shape[0] else None,
        A_eq=p.Aeq if p.Aeq.shape[0] else None,
        b_eq=p.beq if p.Aeq.shape[0] else None,
        bounds=[(None, None)] * N,
        method="highs",
    )
    if res.status != 0:
        return None
    z = res.x
    if np.any(p.Fineq @ z > p.gineq + tol) or np.any(np.abs(p.Aeq @ z - p.beq) > tol * 10):
        return None
    return z


def _feasible(p: QpProblem, z, tol) -> bool:
    return bool(np.all(p.Fineq @ z <= p.gineq + tol))


def solve_qp(p: QpProblem, warm_start=None, max_changes: int | None = None,
             tol: float = FEAS_TOL) -> QpSolution:
    """Primal active-set method.

    ``warm_start`` is a candidate working set (e.g. the previous MPC step's
    active set); it only affects the starting point, never the optimum.
    Ties in entering and leaving constraints are broken by lowest row index.
    """
    n_in = p.Fineq.shape[0]
    if max_changes is None:
        max_changes = 3 * n_in
    if p.Aeq.shape[0] and matops.rank_of(p.Aeq) < p.Aeq.shape[0]:
        raise SingularKkt("Aeq is not full row rank")

    z = None
    work: list[int] = []
    if warm_start:
        cand = _independent_subset(p, [i for i in warm_start if 0 <= i < n_in])
        try:
            zw, _, _ = _kkt_solve(p, cand)
        except SingularKkt:
            zw = None
        if zw is not None and _feasible(p, zw, tol):
            z, work = zw, cand
    if z is None:
        z0, nu, _ = _kkt_solve(p, [])
        if _feasible(p, z0, tol):
            return _finish(p, z0, [], nu, np.zeros(0), 0)
        z = _phase_one(p, tol)
        if z is None:
            return QpSolution(np.full(p.n_var, np.nan), [], np.nan, QpStatus.INFEASIBLE)
        slack = p.gineq - p.Fineq @ z
        work = _independent_subset(p, np.flatnonzero(np.abs(slack) <= tol))

    changes = 0
    for it in range(1, 10 * (max_changes + p.n_var) + 2):
        z_w, nu, lam = _kkt_solve(p, work)
        step = z_w - z
        if np.linalg.norm(step) <= tol * max(1.0, np.linalg.norm(z)):
            z = z_w
            if lam.size == 0 or np.min(lam) >= DUAL_CLAMP:
                return _finish(p, z, work, nu, np.maximum(lam, 0.0), it)
            # leave: most negative multiplier, lowest index on ties
            order = sorted(range(len(work)), key=lambda j: (lam[j], work[j]))
            work.pop(order[0])
        else:
            alpha, block = 1.0, None
            Fp = p.Fineq @ step
            slack = p.gineq - p.Fineq @ z
            for i in range(n_in):
                if i in work or Fp[i] <= tol * np.linalg.norm(step):
                    continue
                ratio = max(slack[i], 0.0) / Fp[i]
                if ratio < alpha:
                    alpha, block = ratio, i
            z = z + alpha * step
            if block is None:
                continue
            work.append(block)
        changes += 1
        if changes > max_changes:
            log.debug("active-set change limit %d reached", max_changes)
            return QpSolution(z, sorted(work), p.objective(z), QpStatus.ITERATION_LIMIT, iterations=it)
    return QpSolution(z, sorted(work), p.objective(z), QpStatus.ITERATION_LIMIT)


def _inf_norm(v) -> float:
    return float(np.max(np.abs(v), initial=0.0))


def kkt_residuals(p: QpProblem, s: QpSolution) -> dict:
    z = s.ubar
    lam = s.ineq_multipliers if s.ineq_multipliers.size else np.zeros(p.Fineq.shape[0])
    nu = s.eq_multipliers if s.eq_multipliers.size else np.zeros(p.Aeq.shape[0])
    grad = 2.0 * p.H @ z + p.f + p.Aeq.T @ nu + p.Fineq.T @ lam
    slack = p.gineq - p.Fineq @ z
    return {
        "stationarity": _inf_norm(grad),
        "equality": float(np.max(np.abs(p.Aeq @ z - p.beq), initial=0.0)),
        "inequality": float(np.max(-slack, initial=0.0)),
        "dual": float(np.max(-lam, initial=0.0)),
        "complementarity": float(np.max(np.abs(lam * slack), initial=0.0)),
    }


def check_kkt(p: QpProblem, s: QpSolution, tol: float = 1e-8) -> bool:
    """Stationarity, primal and dual feasibility, complementary slackness within ``tol``."""
    if s.status is not QpStatus.OPTIMAL:
        return False
    r = kkt_residuals(p, s)
    scale = max(1.0, _inf_norm(p.f), _inf_norm(2.0 * p.H @ s.ubar))
    return (
        r["stationarity"] <= tol * scale
        and r["equality"] <= tol * max(1.0, _inf_norm(p.beq))
        and r["inequality"] <= tol
        and r["dual"] <= tol
        and r["complementarity"] <= tol * scale
    )
