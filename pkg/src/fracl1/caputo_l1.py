"""The L1 discretisation of the Caputo derivative on an arbitrary mesh.

For a mesh ``0 = t_0 < ... < t_M`` the discrete operator is written as::

    delta^alpha V^m = kappa[m, m] V^m - sum_{j=1}^{m} (kappa[m, j] - kappa[m, j-1]) V^{j-1}

where ``kappa[m, j]`` is the mean of ``(t_m - s)**(-alpha) / Gamma(1 - alpha)``
over ``(t_{j-1}, t_j)`` and ``kappa[m, 0] = 0``.  The weights are evaluated in
closed form on demand; nothing of size ``O(M^2)`` is stored.
"""

from __future__ import annotations

import numpy as np

from fracl1._kernels import weighted_history_sum
from fracl1.exceptions import DomainError, IndexRangeError, InvalidParameterError
from fracl1.special_fn import gamma, pow_diff
from fracl1.temporal_mesh import TemporalMesh

__all__ = [
    "L1Operator",
    "kappa",
    "apply",
    "history_rhs",
    "caputo_power_oracle",
    "rl_integral",
]


class L1Operator:
    """L1 operator of order ``alpha`` bound to a temporal mesh.

    Parameters
    ----------
    alpha : float
        Fractional order in ``(0, 1)``.
    mesh : TemporalMesh
    compensated : bool
        Use Kahan summation in :meth:`history_rhs`.  The default plain
        summation is already deterministic (fixed order ``j = 1..m``).
    """

    def __init__(self, alpha: float, mesh: TemporalMesh, compensated: bool = False):
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
        self.alpha = alpha
        self.mesh = mesh
        self.compensated = bool(compensated)
        self._g2 = gamma(2.0 - alpha)

    @property
    def M(self) -> int:
        return self.mesh.M

    def _check_level(self, m: int) -> int:
        if not 1 <= m <= self.mesh.M:
            raise IndexRangeError(f"level m={m} outside 1..{self.mesh.M}")
        return int(m)

    def kappa(self, m: int, j: int) -> float:
        m = self._check_level(m)
        if not 0 <= j <= m:
            raise IndexRangeError(f"index j={j} outside 0..{m}")
        if j == 0:
            return 0.0
        if j == m:
            return self.kappa_diag(m)
        t = self.mesh.nodes
        tau = self.mesh.widths[j - 1]
        num = pow_diff(t[m] - t[j - 1], t[m] - t[j], 1.0 - self.alpha, diff=tau)
        return num / (tau * self._g2)

    def kappa_row(self, m: int, out: np.ndarray | None = None) -> np.ndarray:
        """``kappa[m, 0..m]`` as an array of length ``m + 1``."""
        m = self._check_level(m)
        if out is None:
            out = np.empty(m + 1)
        t = self.mesh.nodes
        tau = self.mesh.widths[:m]
        a = t[m] - t[:m]
        b = t[m] - t[1 : m + 1]
        b[-1] = 0.0
        out[0] = 0.0
        out[1 : m + 1] = pow_diff(a, b, 1.0 - self.alpha, diff=tau) / (tau * self._g2)
        # same value as kappa_diag, so constant histories cancel to rounding
        out[m] = self.mesh.widths[m - 1] ** (-self.alpha) / self._g2
        return out

    def kappa_diag(self, m: int) -> float:
        """``kappa[m, m] = tau_m**(-alpha) / Gamma(2 - alpha)``."""
        m = self._check_level(m)
        return self.mesh.widths[m - 1] ** (-self.alpha) / self._g2

    def history_weights(self, m: int, out: np.ndarray | None = None) -> np.ndarray:
        """``kappa[m, j] - kappa[m, j-1]`` for ``j = 1..m`` (length ``m``)."""
        row = self.kappa_row(m)
        if out is None:
            out = np.empty(m)
        np.subtract(row[1:], row[:-1], out=out[:m])
        return out

    def history_rhs(self, hist, m: int, scratch: np.ndarray | None = None, out=None):
        """``sum_{j=1}^{m} (kappa[m, j] - kappa[m, j-1]) V^{j-1}``.

        ``hist`` holds at least levels ``0..m-1`` along axis 0; extra levels
        are ignored.  Scalar histories give a float, vector histories an
        array.  ``scratch`` (length >= ``m``) avoids reallocating weights.
        """
        m = self._check_level(m)
        H = np.asarray(hist, dtype=float)
        if H.shape[0] < m:
            raise InvalidParameterError(f"history has {H.shape[0]} levels, level {m} needs {m}")
        scalar = H.ndim == 1
        H2 = H.reshape(H.shape[0], -1)
        if not H2.flags.c_contiguous:
            H2 = np.ascontiguousarray(H2)
        w = self.history_weights(m, out=scratch)
        res = weighted_history_sum(w, H2, m, out=out, compensated=self.compensated)
        if scalar:
            return float(res[0])
        return res.reshape(H.shape[1:])

    def apply(self, hist, m: int):
        """``delta^alpha V^m`` from levels ``0..m`` of ``hist``."""
        m = self._check_level(m)
        H = np.asarray(hist, dtype=float)
        if H.shape[0] < m + 1:
            raise InvalidParameterError(f"history has {H.shape[0]} levels, level {m} needs {m + 1}")
        return self.kappa_diag(m) * H[m] - self.history_rhs(H, m)

    def apply_all(self, hist) -> np.ndarray:
        """``delta^alpha V^j`` for ``j = 1..M`` (one row per level)."""
        H = np.asarray(hist, dtype=float)
        return np.array([self.apply(H, m) for m in range(1, self.mesh.M + 1)])

    def solve_forward(self, F, v0=0.0) -> np.ndarray:
        """Solve ``delta^alpha V^j = F^j`` (``j = 1..M``) with ``V^0 = v0``.

        ``F`` has shape ``(M,)`` or ``(M, n)``; the result has ``M + 1`` rows.
        """
        F = np.asarray(F, dtype=float)
        M = self.mesh.M
        if F.shape[0] != M:
            raise InvalidParameterError(f"F must have {M} rows, got {F.shape[0]}")
        V = np.empty((M + 1,) + F.shape[1:])
        V[0] = v0
        H = V.reshape(M + 1, -1)
        scratch = np.empty(M)
        acc = np.empty(H.shape[1])
        for m in range(1, M + 1):
            rhs = self.history_rhs(H, m, scratch=scratch, out=acc)
            H[m] = (F[m - 1].reshape(-1) + rhs) / self.kappa_diag(m)
        return V


def kappa(op: L1Operator, m: int, j: int) -> float:
    return op.kappa(m, j)


def apply(op: L1Operator, hist, m: int):
    return op.apply(hist, m)


def history_rhs(op: L1Operator, hist, m: int, scratch=None):
    return op.history_rhs(hist, m, scratch=scratch)


def caputo_power_oracle(alpha: float, beta: float, t):
    """Exact Caputo derivative of ``t**beta``: ``Gamma(beta+1)/Gamma(beta+1-alpha) t**(beta-alpha)``.

    ``beta = 0`` is allowed and returns zero (constants).
    """
    if beta == 0.0:
        return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
    if beta < alpha:
        raise DomainError(f"power rule oracle needs beta >= alpha, got beta={beta}, alpha={alpha}")
    c = gamma(beta + 1.0) / gamma(beta + 1.0 - alpha)
    return c * np.asarray(t, dtype=float) ** (beta - alpha) if np.ndim(t) else c * float(t) ** (beta - alpha)


def rl_integral(alpha: float, lam, mesh: TemporalMesh, t: float) -> float:
    """Riemann-Liouville integral ``J^{1-alpha}`` of a piecewise-constant function at a node.

    ``lam[j-1]`` is the value on ``(t_{j-1}, t_j]``.  The integral is summed
    interval by interval in closed form, so the result is exact up to
    rounding.

    Raises
    ------
    InvalidParameterError
        If ``t`` is not a mesh node or ``lam`` is too short.
    """
    m = mesh.index_of(t)
    lam = np.asarray(lam, dtype=float)
    if m == 0:
        return 0.0
    if lam.shape[0] < m:
        raise InvalidParameterError(f"lambda covers {lam.shape[0]} intervals, need {m}")
    nodes = mesh.nodes
    a = nodes[m] - nodes[:m]
    b = nodes[m] - nodes[1 : m + 1]
    b[-1] = 0.0
    pieces = pow_diff(a, b, 1.0 - alpha, diff=mesh.widths[:m])
    return float(np.sum(lam[:m] * pieces) / gamma(2.0 - alpha))
