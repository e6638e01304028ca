"""Plant, cost and constraint definitions, plus the standing-assumption checks."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from . import matops
from .errors import DimensionMismatch, EmptyBox, ScenarioError

RANK_TOL = 1e-9


def _arrays_equal(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return np.shape(a) == np.shape(b) and np.array_equal(a, b)


class _ArrayValue:
    """Mixin giving array-holding dataclasses a value equality."""

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, (np.ndarray, type(None))) or isinstance(b, np.ndarray):
                if not _arrays_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None


def _frozen_array(x, ndim):
    arr = np.array(x, dtype=float)
    if ndim == 2:
        arr = np.atleast_2d(arr)
    else:
        arr = np.atleast_1d(arr).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LtiSystem(_ArrayValue):
    """x[k+1] = A x[k] + B u[k]."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = _frozen_array(self.A, 2)
        B = _frozen_array(self.B, 2)
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            if B.shape[1] == A.shape[0] and B.shape[0] == 1:
                B = _frozen_array(B.T, 2)
            else:
                raise DimensionMismatch(f"B has {B.shape[0]} rows, A has order {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class CostSpec(_ArrayValue):
    """Stage weights Q, R and the initial terminal weight (defaults to Q)."""

    Q: np.ndarray
    R: np.ndarray
    P_terminal: np.ndarray | None = None

    def __post_init__(self):
        Q = _frozen_array(self.Q, 2)
        R = _frozen_array(self.R, 2)
        P = Q if self.P_terminal is None else _frozen_array(self.P_terminal, 2)
        if Q.shape[0] != Q.shape[1] or R.shape[0] != R.shape[1]:
            raise DimensionMismatch("Q and R must be square")
        if P.shape != Q.shape:
            raise DimensionMismatch(f"P_terminal shape {P.shape} differs from Q shape {Q.shape}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "P_terminal", P)

    def definiteness_report(self, tol: float = matops.DEFAULT_TOL) -> dict:
        """Definiteness class of each weight; ``None`` marks a non-symmetric one."""
        out = {}
        for name in ("Q", "R", "P_terminal"):
            try:
                out[name] = matops.definiteness(getattr(self, name), tol)
            except Exception:
                out[name] = None
        return out

    def validate(self, tol: float = matops.DEFAULT_TOL) -> list[str]:
        """List of violated weight requirements (Q PSD, R PD, P PD); empty when valid."""
        rep = self.definiteness_report(tol)
        problems = []
        if rep["Q"] not in (matops.Definiteness.PD, matops.Definiteness.PSD):
            problems.append("Q is not symmetric positive semidefinite")
        if rep["R"] is not matops.Definiteness.PD:
            problems.append("R is not symmetric positive definite")
        if rep["P_terminal"] is not matops.Definiteness.PD:
            problems.append("P_terminal is not symmetric positive definite")
        return problems


def box_to_polytope(lower, upper) -> tuple[np.ndarray, np.ndarray]:
    """Return (F, g) with F = [I; -I], g = [upper; -lower]."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float)).ravel()
    upper = np.atleast_1d(np.asarray(upper, dtype=float)).ravel()
    if lower.shape != upper.shape:
        raise DimensionMismatch("lower and upper bounds differ in length")
    bad = np.flatnonzero(lower > upper)
    if bad.size:
        raise EmptyBox(f"lower > upper at components {bad.tolist()}")
    d = lower.size
    F = np.vstack([np.eye(d), -np.eye(d)])
    g = np.concatenate([upper, -lower])
    return F, g


@dataclass(frozen=True, eq=False)
class BoxConstraints(_ArrayValue):
    """Componentwise state and input bounds, kept in both raw and F v <= g form.

    A missing side of a bound is infinite; rows with infinite g are dropped
    when the QP is assembled.
    """

    x_lower: np.ndarray
    x_upper: np.ndarray
    u_lower: np.ndarray
    u_upper: np.ndarray
    F_x: np.ndarray = field(init=False)
    g_x: np.ndarray = field(init=False)
    F_u: np.ndarray = field(init=False)
    g_u: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("x_lower", "x_upper", "u_lower", "u_upper"):
            arr = np.atleast_1d(np.array(getattr(self, name), dtype=float)).ravel()
            if np.any(np.isnan(arr)):
                raise ValueError(f"{name} contains NaN")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        F_x, g_x = box_to_polytope(self.x_lower, self.x_upper)
        F_u, g_u = box_to_polytope(self.u_lower, self.u_upper)
        for name, val in (("F_x", F_x), ("g_x", g_x), ("F_u", F_u), ("g_u", g_u)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def unbounded(cls, n: int, m: int) -> "BoxConstraints":
        return cls(np.full(n, -np.inf), np.full(n, np.inf), np.full(m, -np.inf), np.full(m, np.inf))

    def contains_state(self, x, tol: float = 1e-9) -> bool:
        return bool(np.all(self.F_x @ np.asarray(x) <= self.g_x + tol))

    def contains_input(self, u, tol: float = 1e-9) -> bool:
        return bool(np.all(self.F_u @ np.asarray(u) <= self.g_u + tol))


@dataclass(frozen=True, eq=False)
class Scenario(_ArrayValue):
    system: LtiSystem
    cost: CostSpec
    x0: np.ndarray
    t_f: int
    l: int
    mu: float = 1e3
    constraints: BoxConstraints | None = None
    name: str = "scenario"

    def __post_init__(self):
        x0 = _frozen_array(self.x0, 1)
        object.__setattr__(self, "x0", x0)
        n, m = self.system.n, self.system.m
        if x0.size != n:
            raise ScenarioError(f"x0 has length {x0.size}, state dimension is {n}")
        if self.cost.Q.shape != (n, n) or self.cost.R.shape != (m, m):
            raise DimensionMismatch(
                f"cost shapes Q{self.cost.Q.shape} R{self.cost.R.shape} do not fit n={n}, m={m}"
            )
        if self.constraints is not None:
            c = self.constraints
            if c.x_lower.size != n or c.u_lower.size != m:
                raise DimensionMismatch("constraint bound lengths do not match n, m")
        if int(self.l) != self.l or int(self.t_f) != self.t_f:
            raise ScenarioError("t_f and l must be integers")
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "t_f", int(self.t_f))
        if not 0 < self.l <= self.t_f:
            raise ScenarioError(f"need 0 < l <= t_f, got l={self.l}, t_f={self.t_f}")
        if not self.mu > 0:
            raise ScenarioError(f"mu must be positive, got {self.mu}")
        object.__setattr__(self, "mu", float(self.mu))


def controllability_matrix(sys: LtiSystem) -> np.ndarray:
    blocks = [sys.B]
    for _ in range(sys.n - 1):
        blocks.append(sys.A @ blocks[-1])
    return np.hstack(blocks)


def check_controllability(sys: LtiSystem, tol: float = RANK_TOL) -> bool:
    """Kalman rank test: rank [B, AB, ..., A^(n-1) B] = n."""
    return matops.rank_of(controllability_matrix(sys), tol) == sys.n


def pbh_controllable(sys: LtiSystem, tol: float = RANK_TOL) -> bool:
    """PBH form: rank [zI - A, B] = n at every eigenvalue z of A."""
    n = sys.n
    for z in np.linalg.eigvals(sys.A):
        M = np.hstack([z * np.eye(n) - sys.A, sys.B.astype(complex)])
        if matops.rank_of(M, tol) < n:
            return False
    return True


def check_detectability(sys: LtiSystem, Q, tol: float = RANK_TOL) -> bool:
    """rank [zI - A; Q] = n for every eigenvalue z of A with |z| >= 1."""
    Q = matops.as_matrix(Q)
    n = sys.n
    for z in np.linalg.eigvals(sys.A):
        if abs(z) < 1.0 - tol:
            continue
        M = np.vstack([z * np.eye(n) - sys.A, Q.astype(complex)])
        if matops.rank_of(M, tol) < n:
            return False
    return True
