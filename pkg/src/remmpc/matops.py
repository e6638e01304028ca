"""Small dense linear-algebra kernel.

Every matrix in the package is a plain 2-D ``numpy.ndarray``; the problems
handled here are tiny (a few dozen rows), so everything is dense and
factorization based.
"""

from __future__ import annotations

import enum
import warnings

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import NoConvergence, NotSymmetric, SingularMatrix

DEFAULT_TOL = 1e-10
RCOND_MIN = 1e-14


class Definiteness(enum.Enum):
    PD = "PD"
    PSD = "PSD"
    INDEFINITE = "Indefinite"


def as_matrix(M) -> np.ndarray:
    """Coerce scalars, vectors and nested lists into a finite 2-D float array."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _lu(M):
    # singularity is judged by the condition estimate, not scipy's warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(M, check_finite=False)


def rcond(M: np.ndarray) -> float:
    """Reciprocal 1-norm condition estimate of a square matrix (LAPACK gecon)."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 1.0
    anorm = np.linalg.norm(M, 1)
    if anorm == 0.0:
        return 0.0
    lu, _piv = _lu(M)
    rc, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0:
        return 0.0
    return float(rc)


def solve(M, rhs, rcond_min: float = RCOND_MIN) -> np.ndarray:
    """Solve ``M @ X = rhs`` with partial-pivoted LU.

    Raises :class:`SingularMatrix` when the reciprocal condition estimate
    falls below ``rcond_min``. A 1-D ``rhs`` gives a 1-D result.
    """
    M = np.asarray(M, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"solve needs a square matrix, got {M.shape}")
    if rhs.shape[0] != M.shape[0]:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, matrix order is {M.shape[0]}")
    if M.shape[0] == 0:
        return np.zeros_like(rhs)
    lu_piv = _lu(M)
    anorm = np.linalg.norm(M, 1)
    rc = 0.0
    if anorm > 0.0:
        rc, info = lapack.dgecon(lu_piv[0], anorm, norm="1")
        rc = rc if info == 0 else 0.0
    if rc < rcond_min:
        raise SingularMatrix(f"matrix is numerically singular (rcond={rc:.3e})")
    return sla.lu_solve(lu_piv, rhs, check_finite=False)


def inv(M, rcond_min: float = RCOND_MIN) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return solve(M, np.eye(M.shape[0]), rcond_min=rcond_min)


def pinv(M, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD, dropping singular values below tol * s_max."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rows, cols = M.shape
    if M.size == 0:
        return np.zeros((cols, rows))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((cols, rows))
    keep = s > tol * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def is_symmetric(M, tol: float = DEFAULT_TOL) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return np.linalg.norm(M - M.T) <= tol * np.linalg.norm(M)


def symmetrize(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def definiteness(M, tol: float = DEFAULT_TOL) -> Definiteness:
    """Classify a symmetric matrix as PD, PSD or indefinite.

    PD means a Cholesky factorization succeeds and every pivot exceeds
    ``tol`` relative to the largest entry. Otherwise the smallest eigenvalue
    decides between PSD and indefinite.
    """
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise NotSymmetric(f"matrix of shape {M.shape} is not square")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if np.linalg.norm(M - M.T) > tol * np.linalg.norm(M):
        raise NotSymmetric("matrix is not symmetric within tolerance")
    if scale == 0.0:
        return Definiteness.PSD
    S = symmetrize(M)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        pass
    else:
        if np.all(np.diag(L) ** 2 > tol * scale):
            return Definiteness.PD
    lam_min = np.linalg.eigvalsh(S)[0]
    return Definiteness.PSD if lam_min >= -tol * scale else Definiteness.INDEFINITE


def is_pd(M, tol: float = DEFAULT_TOL) -> bool:
    try:
        return definiteness(M, tol) is Definiteness.PD
    except NotSymmetric:
        return False


def spectral_radius(M) -> float:
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got {M.shape}")
    try:
        lam = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(np.abs(lam))) if lam.size else 0.0


def rank_of(M, tol: float | None = None) -> int:
    """Number of singular values above ``tol * s_max``.

    ``tol=None`` uses ``max(rows, cols) * eps`` like ``numpy.linalg.matrix_rank``.
    Complex input is accepted (PBH-style tests evaluate at complex eigenvalues).
    """
    M = np.atleast_2d(np.asarray(M))
    if not np.iscomplexobj(M):
        M = M.astype(float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    if tol is None:
        tol = max(M.shape) * np.finfo(float).eps
    return int(np.sum(s > tol * s[0]))


def null_space(M, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis for the null space of M, as columns."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    cols = M.shape[1]
    if M.size == 0:
        return np.eye(cols)
    r = rank_of(M, tol)
    _, _, Vt = np.linalg.svd(M, full_matrices=True)
    return Vt[r:].T.copy()
