"""Finite-difference spatial operator on tensor grids of the unit cube.

The operator acting on interior node ``z`` is::

    L_h U(z) = sum_k h^-2 { a_k(z + h/2 e_k) [U(z) - U(z + h e_k)]
                          + a_k(z - h/2 e_k) [U(z) - U(z - h e_k)] }
             + sum_k (2h)^-1 b_k(z) [U(z + h e_k) - U(z - h e_k)] + c(z) U(z)

Dirichlet values are eliminated: stencil legs that land on the boundary are
collected in a separate coupling matrix so that ``A @ U_int + B @ g`` equals
``L_h U`` on the interior.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from fracl1.exceptions import AdmissibilityError, InvalidParameterError

__all__ = [
    "TensorGrid",
    "FdCoefficients",
    "FdSystem",
    "assemble_fd",
    "admissibility",
    "check_m_matrix",
    "truncation_probe",
    "evaluate",
]

logger = logging.getLogger(__name__)

Coef = Union[float, Callable]


def evaluate(fun: Coef, points: np.ndarray) -> np.ndarray:
    """Evaluate a constant or a callable ``fun(x)`` at ``points`` of shape ``(n, d)``."""
    points = np.atleast_2d(points)
    if callable(fun):
        val = fun(points)
    else:
        val = fun
    return np.broadcast_to(np.asarray(val, dtype=float), (points.shape[0],)).copy()


class TensorGrid:
    """Uniform grid ``{i h}_{i=0}^N`` in each of ``d`` directions, ``h = 1/N``.

    Interior nodes are numbered lexicographically with the first coordinate
    running fastest; boundary nodes likewise, in their own numbering.
    """

    def __init__(self, d: int, N: int):
        if d not in (1, 2, 3):
            raise InvalidParameterError(f"dimension must be 1, 2 or 3, got {d}")
        if int(N) != N or N < 2:
            raise InvalidParameterError(f"N must be an integer >= 2, got {N}")
        self.d = int(d)
        self.N = int(N)
        self.h = 1.0 / self.N
        # full-grid multi-indices, first axis fastest
        idx = np.array(list(itertools.product(range(self.N + 1), repeat=self.d)))[:, ::-1]
        on_bnd = np.any((idx == 0) | (idx == self.N), axis=1)
        self.full_index = idx
        self.interior_mask = ~on_bnd
        full_to_int = np.full(idx.shape[0], -1)
        full_to_int[~on_bnd] = np.arange(int((~on_bnd).sum()))
        full_to_bnd = np.full(idx.shape[0], -1)
        full_to_bnd[on_bnd] = np.arange(int(on_bnd.sum()))
        self._full_to_int = full_to_int
        self._full_to_bnd = full_to_bnd

    @property
    def n_interior(self) -> int:
        return (self.N - 1) ** self.d

    @property
    def n_boundary(self) -> int:
        return (self.N + 1) ** self.d - self.n_interior

    def flat(self, multi: np.ndarray) -> np.ndarray:
        """Full-grid linear index of integer multi-indices (first axis fastest)."""
        multi = np.atleast_2d(multi)
        stride = (self.N + 1) ** np.arange(self.d)
        return multi @ stride

    def interior_indices(self) -> np.ndarray:
        return self.full_index[self.interior_mask]

    def interior_points(self) -> np.ndarray:
        return self.interior_indices() * self.h

    def boundary_points(self) -> np.ndarray:
        return self.full_index[~self.interior_mask] * self.h

    def all_points(self) -> np.ndarray:
        return self.full_index * self.h

    def to_interior(self, full_ids: np.ndarray) -> np.ndarray:
        return self._full_to_int[full_ids]

    def to_boundary(self, full_ids: np.ndarray) -> np.ndarray:
        return self._full_to_bnd[full_ids]


@dataclass
class FdCoefficients:
    """Coefficients of ``L u = sum_k -(a_k u_k)_k + b_k u_k + c u``.

    Each entry is a constant or a callable ``fun(x)`` taking points of
    shape ``(n, d)``.  ``a`` and ``b`` may be a single value applied to
    every axis.  ``da`` optionally gives ``d a_k / d x_k`` for manufactured
    right-hand sides.
    """

    a: Union[Coef, Sequence[Coef]] = 1.0
    b: Union[Coef, Sequence[Coef]] = 0.0
    c: Coef = 0.0
    da: Union[Coef, Sequence[Coef], None] = None

    def axis(self, name: str, k: int, d: int) -> Coef:
        val = getattr(self, name)
        if isinstance(val, (list, tuple)):
            if len(val) != d:
                raise InvalidParameterError(f"coefficient {name} has {len(val)} entries for d={d}")
            return val[k]
        return val

    def convection_free(self, d: int) -> bool:
        for k in range(d):
            bk = self.axis("b", k, d)
            if callable(bk) or float(bk) != 0.0:
                return False
        return True


@dataclass
class FdSystem:
    """Assembled operator on the interior plus its boundary coupling."""

    grid: TensorGrid
    coeffs: FdCoefficients
    A: sp.csr_matrix
    B: sp.csr_matrix
    symmetric: bool
    admissible: bool
    interior_points: np.ndarray = field(repr=False)
    boundary_points: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def mass(self) -> np.ndarray:
        return np.ones(self.n)

    @property
    def l2_weights(self) -> np.ndarray:
        return np.full(self.n, self.grid.h**self.grid.d)

    def load(self, values: np.ndarray) -> np.ndarray:
        return values

    def apply(self, U: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
        """``L_h`` applied to interior values ``U`` with boundary values ``g``."""
        out = self.A @ U
        if g is not None:
            out = out + self.B @ g
        return out


def admissibility(grid: TensorGrid, coeffs: FdCoefficients) -> tuple[bool, float]:
    """Return ``(ok, bound)`` where ``bound = max_k ||b_k|| ||1/a_k|| / 2`` on grid samples."""
    pts = grid.interior_points()
    bound = 0.0
    for k in range(grid.d):
        e = np.zeros(grid.d)
        e[k] = 0.5 * grid.h
        a_half = np.concatenate([
            evaluate(coeffs.axis("a", k, grid.d), pts + e),
            evaluate(coeffs.axis("a", k, grid.d), pts - e),
        ])
        b_node = evaluate(coeffs.axis("b", k, grid.d), pts)
        if np.any(a_half <= 0.0):
            raise InvalidParameterError(f"diffusion coefficient a_{k + 1} must be positive")
        bound = max(bound, 0.5 * np.max(np.abs(b_node)) * np.max(1.0 / a_half))
    return (1.0 / grid.h >= bound), bound


def assemble_fd(grid: TensorGrid, coeffs: FdCoefficients | None = None, on_violation: str = "warn") -> FdSystem:
    """Assemble ``L_h`` on the interior nodes of ``grid``.

    Parameters
    ----------
    on_violation : {"warn", "raise"}
        What to do when ``1/h < max_k ||b_k|| ||1/a_k|| / 2``.
    """
    if coeffs is None:
        coeffs = FdCoefficients()
    if on_violation not in ("warn", "raise"):
        raise InvalidParameterError("on_violation must be 'warn' or 'raise'")
    ok, bound = admissibility(grid, coeffs)
    if not ok:
        msg = f"1/h = {1.0 / grid.h:g} < {bound:g}; the stencil is not an M-matrix"
        if on_violation == "raise":
            raise AdmissibilityError(msg)
        logger.warning(msg)

    d, h = grid.d, grid.h
    idx = grid.interior_indices()
    pts = idx * h
    n = idx.shape[0]
    rows_i = np.arange(n)
    diag = evaluate(coeffs.c, pts)
    irows, icols, ivals = [], [], []
    brows, bcols, bvals = [], [], []
    for k in range(d):
        e = np.zeros(d)
        e[k] = 0.5 * h
        ak = coeffs.axis("a", k, d)
        a_plus = evaluate(ak, pts + e)
        a_minus = evaluate(ak, pts - e)
        if np.any(a_plus <= 0.0) or np.any(a_minus <= 0.0):
            raise InvalidParameterError(f"diffusion coefficient a_{k + 1} must be positive")
        bk = evaluate(coeffs.axis("b", k, d), pts)
        diag += (a_plus + a_minus) / h**2
        for sign, a_side in ((1, a_plus), (-1, a_minus)):
            val = -a_side / h**2 + sign * bk / (2.0 * h)
            nb = idx.copy()
            nb[:, k] += sign
            full = grid.flat(nb)
            inside = grid.interior_mask[full]
            irows.append(rows_i[inside])
            icols.append(grid.to_interior(full[inside]))
            ivals.append(val[inside])
            brows.append(rows_i[~inside])
            bcols.append(grid.to_boundary(full[~inside]))
            bvals.append(val[~inside])
    irows.append(rows_i)
    icols.append(rows_i)
    ivals.append(diag)
    A = sp.csr_matrix(
        (np.concatenate(ivals), (np.concatenate(irows), np.concatenate(icols))), shape=(n, n)
    )
    A.sort_indices()
    B = sp.csr_matrix(
        (np.concatenate(bvals), (np.concatenate(brows), np.concatenate(bcols))), shape=(n, grid.n_boundary)
    )
    B.sort_indices()
    return FdSystem(
        grid=grid,
        coeffs=coeffs,
        A=A,
        B=B,
        symmetric=coeffs.convection_free(d),
        admissible=ok,
        interior_points=pts,
        boundary_points=grid.boundary_points(),
    )


def check_m_matrix(op, shift: float = 0.0) -> bool:
    """True iff ``op + shift*I`` has positive diagonal, nonpositive
    off-diagonal entries and nonnegative row sums."""
    if isinstance(op, FdSystem):
        op = op.A
    S = sp.csr_matrix(op, dtype=float, copy=True)
    S = S + shift * sp.identity(S.shape[0], format="csr")
    diag = S.diagonal()
    if np.any(diag <= 0.0):
        return False
    off = S - sp.diags(diag)
    off.eliminate_zeros()
    if off.nnz and np.max(off.data) > 0.0:
        return False
    return bool(np.all(np.asarray(S.sum(axis=1)).ravel() >= 0.0))


def truncation_probe(grid: TensorGrid, coeffs: FdCoefficients, v: Callable, Lv: Callable) -> float:
    """``max |(L_h - L) v|`` over the interior nodes for an analytic pair ``(v, L v)``."""
    system = assemble_fd(grid, coeffs)
    U = evaluate(v, system.interior_points)
    g = evaluate(v, system.boundary_points)
    exact = evaluate(Lv, system.interior_points)
    return float(np.max(np.abs(system.apply(U, g) - exact)))
