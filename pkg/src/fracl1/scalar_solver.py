"""L1 solver for ``D^alpha u = f(t), u(0) = u0`` and its truncation indicators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from fracl1.caputo_l1 import L1Operator
from fracl1.exceptions import InvalidParameterError
from fracl1.temporal_mesh import TemporalMesh

__all__ = ["ScalarProblem", "PsiIndicators", "solve", "psi_indicators", "nodal_error"]


@dataclass
class ScalarProblem:
    """Scalar fractional problem.

    ``f`` must accept numpy arrays.  ``exact``, ``du`` and ``d2u`` are the
    optional exact solution and its first two time derivatives.
    """

    alpha: float
    u0: float
    f: Callable
    exact: Optional[Callable] = None
    du: Optional[Callable] = None
    d2u: Optional[Callable] = None


@dataclass(frozen=True)
class PsiIndicators:
    psi: np.ndarray

    def max(self) -> float:
        return float(np.max(self.psi))


def solve(problem: ScalarProblem, mesh: TemporalMesh, compensated: bool = False) -> np.ndarray:
    """Return ``U^0..U^M`` with ``U^m = (f(t_m) + history) / kappa[m, m]``."""
    op = L1Operator(problem.alpha, mesh, compensated=compensated)
    F = np.asarray(problem.f(mesh.nodes[1:]), dtype=float) * np.ones(mesh.M)
    return op.solve_forward(F, v0=problem.u0)


def nodal_error(problem: ScalarProblem, mesh: TemporalMesh, U: np.ndarray) -> np.ndarray:
    """``|u(t_m) - U^m|`` for ``m = 0..M``."""
    if problem.exact is None:
        raise InvalidParameterError("problem has no exact solution")
    return np.abs(np.asarray(problem.exact(mesh.nodes), dtype=float) - U)


def _interior_samples(lo: float, hi: float, k: int) -> np.ndarray:
    # Chebyshev-Lobatto points pulled 1e-3 of the width away from both ends
    off = 1e-3 * (hi - lo)
    x = 0.5 * (1.0 - np.cos(np.pi * np.arange(k) / (k - 1)))
    return (lo + off) + x * ((hi - lo) - 2.0 * off)


def psi_indicators(problem: ScalarProblem, mesh: TemporalMesh, samples_per_interval: int = 16) -> PsiIndicators:
    """Sampled truncation indicators ``psi^1..psi^M``.

    ``psi^1 = tau_1**alpha * sup_{(0, t_1)} s**(1-alpha) |delta u(t_1) - u'(s)|``
    and ``psi^j = tau_j**(2-alpha) t_j**alpha sup_{(t_{j-1}, t_j)} |u''|``
    for ``j >= 2``; every supremum is taken over ``samples_per_interval``
    points.
    """
    if problem.exact is None or problem.du is None or problem.d2u is None:
        raise InvalidParameterError("psi indicators need exact, du and d2u callbacks")
    if samples_per_interval < 2:
        raise InvalidParameterError("samples_per_interval must be >= 2")
    a = problem.alpha
    t, tau = mesh.nodes, mesh.widths
    k = samples_per_interval
    psi = np.empty(mesh.M)

    s = _interior_samples(0.0, t[1], k)
    slope = (problem.exact(t[1]) - problem.exact(t[0])) / tau[0]
    psi[0] = tau[0] ** a * np.max(s ** (1.0 - a) * np.abs(slope - np.asarray(problem.du(s))))

    if mesh.M > 1:
        x = 0.5 * (1.0 - np.cos(np.pi * np.arange(k) / (k - 1)))
        lo, hi = t[1:-1], t[2:]
        off = 1e-3 * (hi - lo)
        S = (lo + off)[:, None] + x[None, :] * ((hi - lo) - 2.0 * off)[:, None]
        sup = np.max(np.abs(np.asarray(problem.d2u(S))) * np.ones_like(S), axis=1)
        psi[1:] = tau[1:] ** (2.0 - a) * t[2:] ** a * sup
    return PsiIndicators(psi=psi)
