"""Krylov and banded solvers for the per-level systems ``(kappa D + A) x = rhs``.

Matrices are stored as :class:`scipy.sparse.csr_matrix` (sorted indices);
the iterations themselves are written out here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from fracl1.exceptions import SolverError

__all__ = ["SolveStats", "as_csr", "solve_spd", "solve_general", "solve_tridiagonal", "DEFAULT_TOL"]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    residual: float
    converged: bool
    method: str = "cg"


def as_csr(A) -> sp.csr_matrix:
    A = sp.csr_matrix(A, dtype=float)
    if not A.has_sorted_indices:
        A.sort_indices()
    return A


def _relres(A, x, b, bnorm):
    return float(np.linalg.norm(b - A @ x) / bnorm)


def _check_rows(A: sp.csr_matrix) -> None:
    if A.shape[0] != A.shape[1]:
        raise SolverError(f"matrix must be square, got shape {A.shape}")
    nz_per_row = np.diff(A.indptr)
    abs_rows = np.asarray(abs(A).sum(axis=1)).ravel()
    if np.any(nz_per_row == 0) or np.any(abs_rows == 0.0):
        raise SolverError("matrix has a zero row and is singular")


def solve_spd(A, rhs, tol: float = DEFAULT_TOL, maxit: int | None = None, x0=None):
    """Jacobi-preconditioned conjugate gradients.

    Stops once ``||rhs - A x|| <= tol ||rhs||``.  The returned residual is
    recomputed from the final iterate.

    Raises
    ------
    SolverError
        On a nonpositive diagonal, breakdown, or when ``maxit`` is reached.
    """
    A = as_csr(A)
    b = np.asarray(rhs, dtype=float)
    n = b.shape[0]
    if maxit is None:
        maxit = max(10 * n, 100)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveStats(0, 0.0, True, "cg")
    dinv = A.diagonal()
    if np.any(dinv <= 0.0):
        raise SolverError("CG needs a positive diagonal")
    dinv = 1.0 / dinv

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    if np.linalg.norm(r) <= tol * bnorm:
        return x, SolveStats(0, _relres(A, x, b, bnorm), True, "cg")
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxit + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0.0:
            raise SolverError("CG breakdown: matrix is not positive definite",
                              stats=SolveStats(it, _relres(A, x, b, bnorm), False, "cg"))
        step = rz / pAp
        x += step * p
        r -= step * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            res = _relres(A, x, b, bnorm)
            if res <= tol:
                return x, SolveStats(it, res, True, "cg")
            r = b - A @ x  # recursive residual drifted; restart from the true one
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    stats = SolveStats(maxit, _relres(A, x, b, bnorm), False, "cg")
    raise SolverError(f"CG did not converge in {maxit} iterations (residual {stats.residual:.3e})", stats=stats)


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas algorithm; ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = len(diag)
    c = np.empty(n)
    d = np.empty(n)
    piv = diag[0]
    if piv == 0.0:
        raise SolverError("zero pivot in tridiagonal solve")
    c[0] = upper[0] / piv if n > 1 else 0.0
    d[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i] * c[i - 1]
        if piv == 0.0:
            raise SolverError("zero pivot in tridiagonal solve")
        c[i] = upper[i] / piv if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def _bandwidth(A: sp.csr_matrix) -> int:
    if A.nnz == 0:
        return 0
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    return int(np.max(np.abs(A.indices - rows)))


def _bicgstab(A, b, tol, maxit, x0):
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    dinv = A.diagonal()
    if np.any(dinv == 0.0):
        raise SolverError("BiCGSTAB with Jacobi preconditioning needs a nonzero diagonal")
    dinv = 1.0 / dinv
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    if np.linalg.norm(r) <= tol * bnorm:
        return x, SolveStats(0, _relres(A, x, b, bnorm), True, "bicgstab")
    r0 = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    for it in range(1, maxit + 1):
        rho_new = r0 @ r
        if rho_new == 0.0:
            raise SolverError("BiCGSTAB breakdown (rho = 0)",
                              stats=SolveStats(it, _relres(A, x, b, bnorm), False, "bicgstab"))
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * v)
        phat = dinv * p
        v = A @ phat
        denom = r0 @ v
        if denom == 0.0:
            raise SolverError("BiCGSTAB breakdown (r0.v = 0)",
                              stats=SolveStats(it, _relres(A, x, b, bnorm), False, "bicgstab"))
        alpha = rho / denom
        s = r - alpha * v
        if np.linalg.norm(s) <= tol * bnorm:
            x += alpha * phat
            res = _relres(A, x, b, bnorm)
            if res <= tol:
                return x, SolveStats(it, res, True, "bicgstab")
            r = b - A @ x
            continue
        shat = dinv * s
        t = A @ shat
        tt = t @ t
        if tt == 0.0:
            raise SolverError("BiCGSTAB breakdown (t = 0)",
                              stats=SolveStats(it, _relres(A, x, b, bnorm), False, "bicgstab"))
        omega = (t @ s) / tt
        x += alpha * phat + omega * shat
        r = s - omega * t
        if np.linalg.norm(r) <= tol * bnorm:
            res = _relres(A, x, b, bnorm)
            if res <= tol:
                return x, SolveStats(it, res, True, "bicgstab")
            r = b - A @ x
        if omega == 0.0:
            raise SolverError("BiCGSTAB breakdown (omega = 0)",
                              stats=SolveStats(it, _relres(A, x, b, bnorm), False, "bicgstab"))
    stats = SolveStats(maxit, _relres(A, x, b, bnorm), False, "bicgstab")
    raise SolverError(f"BiCGSTAB did not converge in {maxit} iterations (residual {stats.residual:.3e})",
                      stats=stats)


def solve_general(A, rhs, tol: float = DEFAULT_TOL, maxit: int | None = None, x0=None, method: str = "auto"):
    """Solve a nonsymmetric sparse system.

    ``method="auto"`` uses the Thomas algorithm for tridiagonal matrices
    (the 1D finite-difference case) and Jacobi-preconditioned BiCGSTAB
    otherwise.

    Raises
    ------
    SolverError
        For a zero row, a zero pivot, breakdown or non-convergence.
    """
    A = as_csr(A)
    b = np.asarray(rhs, dtype=float)
    n = b.shape[0]
    _check_rows(A)
    if maxit is None:
        maxit = max(10 * n, 100)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveStats(0, 0.0, True, method)
    if method == "banded" or (method == "auto" and _bandwidth(A) <= 1):
        diag = A.diagonal()
        lower = np.zeros(n)
        upper = np.zeros(n)
        lower[1:] = A.diagonal(-1)
        upper[:-1] = A.diagonal(1)
        x = solve_tridiagonal(lower, diag, upper, b)
        return x, SolveStats(1, _relres(A, x, b, bnorm), True, "banded")
    return _bicgstab(A, b, tol, maxit, x0)
