"""Graded, uniform and quasi-graded temporal meshes on ``[0, T]``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fracl1.exceptions import InvalidParameterError
from fracl1.special_fn import pow_diff

__all__ = ["TemporalMesh", "graded", "uniform", "quasi_graded", "width_bound_check", "WidthBoundReport"]


@dataclass(frozen=True)
class TemporalMesh:
    """Nodes ``0 = t_0 < ... < t_M = T`` and widths ``tau_j = t_j - t_{j-1}``.

    ``widths[0]`` is ``tau_1``; ``nodes`` has ``M + 1`` entries.  Instances
    are immutable; the arrays are flagged read-only.
    """

    T: float
    M: int
    r: float
    nodes: np.ndarray = field(repr=False)
    widths: np.ndarray = field(repr=False)
    kind: str = "graded"

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.widths.setflags(write=False)

    @classmethod
    def from_nodes(cls, nodes, r: float = 1.0, kind: str = "custom") -> "TemporalMesh":
        """Build a mesh from explicit nodes; ``nodes[0]`` must be 0."""
        t = np.array(nodes, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise InvalidParameterError("a mesh needs at least two nodes")
        if t[0] != 0.0:
            raise InvalidParameterError("first node must be 0")
        if np.any(np.diff(t) <= 0.0):
            raise InvalidParameterError("nodes must be strictly increasing")
        return cls(T=float(t[-1]), M=t.size - 1, r=float(r), nodes=t, widths=np.diff(t), kind=kind)

    @property
    def is_uniform(self) -> bool:
        return self.kind in ("graded", "uniform") and self.r == 1.0

    def node(self, j: int) -> float:
        return float(self.nodes[j])

    def width(self, j: int) -> float:
        """``tau_j`` for ``1 <= j <= M``."""
        if not 1 <= j <= self.M:
            raise IndexError(f"width index {j} outside 1..{self.M}")
        return float(self.widths[j - 1])

    def index_of(self, t: float, rtol: float = 1e-13) -> int:
        """Return ``m`` with ``t_m == t`` (within ``rtol * T``), else raise."""
        m = int(np.argmin(np.abs(self.nodes - t)))
        if abs(self.nodes[m] - t) > rtol * self.T:
            raise InvalidParameterError(f"t={t!r} is not a mesh node")
        return m

    def to_dict(self) -> dict:
        return {"T": self.T, "M": self.M, "r": self.r, "kind": self.kind}


def _check_T(T: float) -> float:
    T = float(T)
    if not np.isfinite(T) or T <= 0.0:
        raise InvalidParameterError(f"final time T must be positive, got {T!r}")
    return T


def graded(T: float, M: int, r: float) -> TemporalMesh:
    """Graded mesh ``t_j = T (j/M)**r``; ``r = 1`` gives the uniform mesh."""
    T = _check_T(T)
    if int(M) != M or M < 1:
        raise InvalidParameterError(f"step count M must be a positive integer, got {M!r}")
    M = int(M)
    r = float(r)
    if not np.isfinite(r) or r < 1.0:
        raise InvalidParameterError(f"grading exponent r must be >= 1, got {r!r}")
    j = np.arange(M + 1, dtype=float)
    t = np.empty(M + 1)
    t[0] = 0.0
    if r == 1.0:
        t[1:] = T * (j[1:] / M)
    else:
        t[1:] = T * np.exp(r * np.log(j[1:] / M))
    t[M] = T
    if r == 1.0:
        tau = np.full(M, T / M)
    else:
        # widths from the factored power difference, not from node subtraction
        tau = T * pow_diff(j[1:] / M, j[:-1] / M, r, diff=np.full(M, 1.0 / M))
    return TemporalMesh(T=T, M=M, r=r, nodes=t, widths=tau, kind="graded")


def uniform(T: float, M: int) -> TemporalMesh:
    return graded(T, M, 1.0)


def quasi_graded(T: float, xi, r: float) -> TemporalMesh:
    """Mesh ``t_j = T * xi_j**r`` for a strictly increasing ``xi`` from 0 to 1."""
    T = _check_T(T)
    r = float(r)
    if not np.isfinite(r) or r < 1.0:
        raise InvalidParameterError(f"grading exponent r must be >= 1, got {r!r}")
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size < 2:
        raise InvalidParameterError("xi needs at least two entries")
    if xi[0] != 0.0 or xi[-1] != 1.0:
        raise InvalidParameterError("xi must start at 0 and end at 1")
    if np.any(np.diff(xi) <= 0.0):
        raise InvalidParameterError("xi must be strictly increasing")
    t = T * xi**r
    t[-1] = T
    tau = T * pow_diff(xi[1:], xi[:-1], r, diff=np.diff(xi))
    if np.any(tau <= 0.0) or np.any(np.diff(t) <= 0.0):
        raise InvalidParameterError("graded nodes collapsed in floating point")
    return TemporalMesh(T=T, M=xi.size - 1, r=r, nodes=t, widths=tau, kind="quasi_graded")


@dataclass(frozen=True)
class WidthBoundReport:
    max_ratio: float
    min_ratio: float
    ratios: np.ndarray = field(repr=False)


def width_bound_check(mesh: TemporalMesh) -> WidthBoundReport:
    """Min and max over ``j`` of ``tau_j M t_j**(1/r - 1) / T**(1/r)``.

    Both stay bounded away from 0 and infinity uniformly in ``M`` for the
    graded family.
    """
    t = mesh.nodes[1:]
    ratios = mesh.widths * mesh.M * t ** (1.0 / mesh.r - 1.0) / mesh.T ** (1.0 / mesh.r)
    return WidthBoundReport(max_ratio=float(ratios.max()), min_ratio=float(ratios.min()), ratios=ratios)
