"""L1 time stepping for ``D^alpha u + L u = f`` with an FD or lumped FEM operator.

Each level solves::

    (kappa[m, m] D + A) U^m = D f(t_m) - B g(t_m) + D * sum_j (kappa[m, j] - kappa[m, j-1]) U^{j-1}

where ``D`` is the identity (finite differences) or the lumped mass
(finite elements) and ``B g`` carries the Dirichlet data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from fracl1.caputo_l1 import L1Operator
from fracl1.exceptions import InvalidParameterError, SolverError
from fracl1.linear_algebra import DEFAULT_TOL, _bandwidth, solve_general, solve_spd
from fracl1.temporal_mesh import TemporalMesh

__all__ = ["EvolutionProblem", "SolutionTrace", "evolve", "nodal_errors", "NodalErrors"]

logger = logging.getLogger(__name__)


@dataclass
class EvolutionProblem:
    """Data for one evolution run.

    Callables take points ``x`` of shape ``(n, d)`` and a scalar time.
    ``g`` defaults to zero Dirichlet data and ``u0`` to zero.
    """

    alpha: float
    mesh: TemporalMesh
    system: object
    f: Callable
    g: Optional[Callable] = None
    u0: Optional[Callable] = None
    exact: Optional[Callable] = None
    tol: float = DEFAULT_TOL
    maxit: Optional[int] = None
    thin: int = 1
    compensated: bool = False


@dataclass
class SolutionTrace:
    """Stored levels (every ``thin``-th one plus the last) and error profiles."""

    levels: np.ndarray
    values: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    err_max: Optional[np.ndarray] = None
    err_l2: Optional[np.ndarray] = None
    iterations: Optional[np.ndarray] = None

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


@dataclass(frozen=True)
class NodalErrors:
    max: float
    per_level: np.ndarray
    l2: np.ndarray

    @property
    def l2_max(self) -> float:
        return float(np.max(self.l2[1:])) if self.l2.size > 1 else 0.0


def _diag_positions(A: sp.csr_matrix) -> np.ndarray:
    pos = np.empty(A.shape[0], dtype=np.int64)
    for i in range(A.shape[0]):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        k = np.searchsorted(A.indices[lo:hi], i)
        if k >= hi - lo or A.indices[lo + k] != i:
            raise InvalidParameterError(f"operator row {i} has no stored diagonal entry")
        pos[i] = lo + k
    return pos


def evolve(problem: EvolutionProblem) -> SolutionTrace:
    """Advance the problem over every level of its temporal mesh.

    Symmetric systems use preconditioned CG warm-started from the previous
    level; nonsymmetric ones BiCGSTAB; tridiagonal ones the Thomas algorithm.

    Raises
    ------
    SolverError
        If the linear solve fails; the exception carries the level index.
    """
    system = problem.system
    mesh = problem.mesh
    op = L1Operator(problem.alpha, mesh, compensated=problem.compensated)
    x_int = system.interior_points
    x_bnd = system.boundary_points
    n, M = system.n, mesh.M
    D = system.mass
    A = system.A.tocsr()
    A.sort_indices()
    diag_pos = _diag_positions(A)
    base_diag = A.data[diag_pos].copy()
    S = A.copy()
    # tridiagonal (1D) systems go to the direct banded solve
    use_cg = getattr(system, "symmetric", False) and _bandwidth(A) > 1
    thin = max(int(problem.thin), 1)

    H = np.empty((M + 1, n))
    H[0] = problem.u0(x_int, 0.0) if problem.u0 is not None else 0.0
    keep = sorted(set(range(0, M + 1, thin)) | {M})
    stored = {}
    if 0 in keep:
        stored[0] = H[0].copy()

    err_max = err_l2 = None
    if problem.exact is not None:
        err_max = np.zeros(M + 1)
        err_l2 = np.zeros(M + 1)
        w = system.l2_weights
        e0 = H[0] - problem.exact(x_int, 0.0)
        err_max[0] = np.max(np.abs(e0)) if n else 0.0
        err_l2[0] = np.sqrt(np.sum(w * e0**2))
    iters = np.zeros(M + 1, dtype=np.int64)
    scratch = np.empty(M)
    acc = np.empty(n)

    for m in range(1, M + 1):
        t = mesh.nodes[m]
        kmm = op.kappa_diag(m)
        hist = op.history_rhs(H, m, scratch=scratch, out=acc)
        rhs = system.load(np.asarray(problem.f(x_int, t), dtype=float) * np.ones(n)) + D * hist
        if problem.g is not None and system.B.shape[1]:
            rhs -= system.B @ (np.asarray(problem.g(x_bnd, t), dtype=float) * np.ones(x_bnd.shape[0]))
        S.data[diag_pos] = base_diag + kmm * D
        try:
            if use_cg:
                U, stats = solve_spd(S, rhs, tol=problem.tol, maxit=problem.maxit, x0=H[m - 1])
            else:
                U, stats = solve_general(S, rhs, tol=problem.tol, maxit=problem.maxit, x0=H[m - 1])
        except SolverError as exc:
            raise SolverError(str(exc), level=m, stats=exc.stats) from exc
        H[m] = U
        iters[m] = stats.iterations
        if m in keep:
            stored[m] = U.copy()
        if err_max is not None:
            e = U - problem.exact(x_int, t)
            err_max[m] = np.max(np.abs(e)) if n else 0.0
            err_l2[m] = np.sqrt(np.sum(w * e**2))

    levels = np.array(keep)
    return SolutionTrace(
        levels=levels,
        values=np.array([stored[k] for k in keep]),
        times=mesh.nodes[levels],
        err_max=err_max,
        err_l2=err_l2,
        iterations=iters,
    )


def nodal_errors(trace: SolutionTrace, exact: Callable, points: np.ndarray, weights: np.ndarray | None = None) -> NodalErrors:
    """Max-nodal error over stored levels ``m >= 1`` plus per-level profiles.

    ``weights`` are the quadrature weights of the discrete L2 norm
    (``h**d`` for finite differences, lumped masses for finite elements).
    """
    if weights is None:
        weights = np.ones(points.shape[0])
    per = np.zeros(trace.levels.size)
    l2 = np.zeros(trace.levels.size)
    for k, (lvl, t) in enumerate(zip(trace.levels, trace.times)):
        e = trace.values[k] - exact(points, t)
        per[k] = np.max(np.abs(e)) if e.size else 0.0
        l2[k] = np.sqrt(np.sum(weights * e**2))
    mask = trace.levels >= 1
    return NodalErrors(max=float(per[mask].max()) if mask.any() else 0.0, per_level=per, l2=l2)
