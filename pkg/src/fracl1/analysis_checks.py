"""Numerical certificates for the stability estimates behind the L1 scheme.

* ``check_lemma_stability``: ``max_m |V^m - V^0| <= Gamma(1-alpha) max_j t_j^alpha |F^j|``
  for ``delta^alpha V^j = F^j`` on any mesh.
* ``check_barrier`` / ``certify_barrier``: positivity of
  ``delta^alpha B^j t_j^(alpha+1) / tau^alpha`` for the barrier
  ``B(s) = min{(s/t_p) t_p^-beta, s^-beta}``, ``beta = 1 - alpha``.
* ``check_comparison``: ``delta^alpha V^j <= J^(1-alpha) lambda_bar(t_j)``
  implies ``V^m - V^0 <= sum_{j<=m} tau_j lambda^j``.
* ``check_uniform_decay``: the forward solve of
  ``delta^alpha V^j = tau^gamma t_j^(-gamma-1)`` stays ``O(t_j^(alpha-1))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from fracl1.caputo_l1 import L1Operator
from fracl1.exceptions import InvalidParameterError
from fracl1.special_fn import gamma
from fracl1.temporal_mesh import TemporalMesh, graded, uniform

__all__ = [
    "StabilityReport",
    "check_lemma_stability",
    "BarrierSpec",
    "BarrierReport",
    "check_barrier",
    "BarrierCertificate",
    "certify_barrier",
    "ComparisonReport",
    "check_comparison",
    "DecayReport",
    "check_uniform_decay",
    "DecaySweep",
    "uniform_decay_sweep",
    "CheckRow",
    "run_checks",
]

_P_SCAN = (2, 4, 8, 16, 32)
_M_SWEEP = (64, 128, 256, 512, 1024)


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


# --------------------------------------------------------------------------
# explicit-constant stability


@dataclass(frozen=True)
class StabilityReport:
    lhs: np.ndarray
    rhs: np.ndarray
    passed: np.ndarray

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))

    @property
    def worst_ratio(self) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(self.rhs > 0, self.lhs / self.rhs, np.where(self.lhs > 0, np.inf, 0.0))
        return float(np.max(q))


def check_lemma_stability(alpha: float, mesh: TemporalMesh, F, v0: float = 0.0) -> StabilityReport:
    """Solve ``delta^alpha V^j = F^j`` and compare with ``Gamma(1-alpha) max_j t_j^alpha |F^j|``.

    ``F`` has shape ``(M,)`` or ``(M, k)``; each column is an independent
    instance and gets its own entry in the report.
    """
    alpha = _check_alpha(alpha)
    F = np.asarray(F, dtype=float)
    vec = F.ndim == 2
    F2 = F if vec else F[:, None]
    V = L1Operator(alpha, mesh).solve_forward(F2, v0=v0)
    lhs = np.max(np.abs(V[1:] - V[0]), axis=0)
    tw = mesh.nodes[1:, None] ** alpha
    rhs = gamma(1.0 - alpha) * np.max(tw * np.abs(F2), axis=0)
    # allow for rounding in the forward solve
    passed = lhs <= rhs * (1.0 + 1e-12) + 1e-300
    return StabilityReport(lhs=lhs, rhs=rhs, passed=passed)


# --------------------------------------------------------------------------
# barrier


@dataclass(frozen=True)
class BarrierSpec:
    alpha: float
    p: int
    mesh: TemporalMesh

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.mesh.is_uniform:
            raise InvalidParameterError("the barrier check needs a uniform mesh")
        if int(self.p) != self.p or self.p < 2 or self.p > self.mesh.M // 2:
            raise InvalidParameterError(f"p must be an integer in [2, M/2] = [2, {self.mesh.M // 2}], got {self.p}")

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha

    def values(self) -> np.ndarray:
        """``B^0..B^M``; ``B^0 = 0``."""
        t = self.mesh.nodes
        tp = t[self.p]
        B = np.zeros_like(t)
        s = t[1:]
        B[1:] = np.minimum((s / tp) * tp ** (-self.beta), s ** (-self.beta))
        return B


@dataclass(frozen=True)
class BarrierReport:
    alpha: float
    p: int
    M: int
    min_ratio: float
    max_scaled: float
    ratios: np.ndarray = field(repr=False)


def check_barrier(spec: BarrierSpec) -> BarrierReport:
    """``min_j delta^alpha B^j t_j^(alpha+1) / tau^alpha`` and ``max_j B^j t_j^(1-alpha)``."""
    mesh = spec.mesh
    B = spec.values()
    dB = L1Operator(spec.alpha, mesh).apply_all(B)
    t = mesh.nodes[1:]
    tau = mesh.widths[0]
    ratios = dB * t ** (spec.alpha + 1.0) / tau**spec.alpha
    scaled = B[1:] * t ** (1.0 - spec.alpha)
    return BarrierReport(spec.alpha, int(spec.p), mesh.M, float(ratios.min()), float(scaled.max()), ratios)


@dataclass(frozen=True)
class BarrierCertificate:
    alpha: float
    p: Optional[int]
    Ms: tuple
    min_ratios: tuple
    max_scaled: tuple
    passed: bool


def certify_barrier(alpha: float, T: float = 1.0, Ms: Sequence[int] = _M_SWEEP,
                    ps: Sequence[int] = _P_SCAN) -> BarrierCertificate:
    """Smallest ``p`` whose min ratio is positive for every ``M`` and changes by
    less than a factor 2 between consecutive ``M``."""
    last = None
    for p in ps:
        reps = [check_barrier(BarrierSpec(alpha, p, uniform(T, M))) for M in Ms]
        mins = tuple(r.min_ratio for r in reps)
        maxs = tuple(r.max_scaled for r in reps)
        pos = all(v > 0.0 for v in mins)
        stable = pos and all(max(a, b) / min(a, b) <= 2.0 for a, b in zip(mins[:-1], mins[1:]))
        bounded = all(v <= 1.0 + 1e-12 for v in maxs)
        last = (mins, maxs)
        if pos and stable and bounded:
            return BarrierCertificate(alpha, int(p), tuple(Ms), mins, maxs, True)
    return BarrierCertificate(alpha, None, tuple(Ms), last[0], last[1], False)


# --------------------------------------------------------------------------
# comparison with the Riemann-Liouville integral


def _rl_matrix_rows(alpha: float, mesh: TemporalMesh) -> L1Operator:
    return L1Operator(alpha, mesh)


@dataclass(frozen=True)
class ComparisonReport:
    status: str  # "pass", "fail" or "hypothesis-failed"
    lhs: np.ndarray
    bound: np.ndarray
    hypothesis_gap: float

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def max_excess(self) -> float:
        return float(np.max(self.lhs - self.bound))


def rl_integral_all(alpha: float, lam, mesh: TemporalMesh) -> np.ndarray:
    """``J^(1-alpha) lambda_bar(t_m)`` for ``m = 1..M``.

    On each interval the integral of ``(t_m - s)^(-alpha) / Gamma(1-alpha)``
    equals ``tau_j kappa[m, j]``.
    """
    op = L1Operator(alpha, mesh)
    lam = np.asarray(lam, dtype=float)
    out = np.empty(mesh.M)
    for m in range(1, mesh.M + 1):
        row = op.kappa_row(m)[1:]
        out[m - 1] = np.dot(lam[:m] * mesh.widths[:m], row)
    return out


def check_comparison(alpha: float, mesh: TemporalMesh, lam, V, hyp_tol: float = 1e-10,
                     tol: float = 1e-10) -> ComparisonReport:
    """Check the comparison principle for a given history ``V^0..V^M``.

    The hypothesis ``delta^alpha V^j <= J^(1-alpha) lambda_bar(t_j)`` is
    tested first (relative slack ``hyp_tol``); when it fails the status is
    ``"hypothesis-failed"`` rather than ``"fail"``.
    """
    alpha = _check_alpha(alpha)
    lam = np.asarray(lam, dtype=float)
    V = np.asarray(V, dtype=float)
    if lam.shape[0] != mesh.M or V.shape[0] != mesh.M + 1:
        raise InvalidParameterError("lambda needs M entries and V needs M + 1")
    if np.any(lam < 0.0):
        raise InvalidParameterError("lambda must be nonnegative")
    dV = L1Operator(alpha, mesh).apply_all(V)
    J = rl_integral_all(alpha, lam, mesh)
    scale = np.maximum(np.abs(J), 1.0)
    gap = float(np.max((dV - J) / scale))
    lhs = V[1:] - V[0]
    bound = np.cumsum(mesh.widths * lam)
    if gap > hyp_tol:
        return ComparisonReport("hypothesis-failed", lhs, bound, gap)
    ok = bool(np.all(lhs <= bound + tol))
    return ComparisonReport("pass" if ok else "fail", lhs, bound, gap)


# --------------------------------------------------------------------------
# uniform-mesh decay


@dataclass(frozen=True)
class DecayReport:
    alpha: float
    gamma: float
    M: int
    max_scaled: float


def check_uniform_decay(alpha: float, gamma_: float, M: int, T: float = 1.0) -> DecayReport:
    """Solve ``delta^alpha V^j = tau^gamma t_j^(-gamma-1)`` on a uniform mesh and
    report ``max_j V^j t_j^(1-alpha)``."""
    alpha = _check_alpha(alpha)
    if not 0.0 < gamma_ <= alpha:
        raise InvalidParameterError(f"gamma must lie in (0, alpha] = (0, {alpha}], got {gamma_}")
    mesh = uniform(T, M)
    t = mesh.nodes[1:]
    F = mesh.widths[0] ** gamma_ * t ** (-gamma_ - 1.0)
    V = L1Operator(alpha, mesh).solve_forward(F)
    return DecayReport(alpha, gamma_, M, float(np.max(V[1:] * t ** (1.0 - alpha))))


@dataclass(frozen=True)
class DecaySweep:
    reports: tuple
    passed: bool

    @property
    def values(self) -> tuple:
        return tuple(r.max_scaled for r in self.reports)


def uniform_decay_sweep(alpha: float, gamma_: float, Ms: Iterable[int] = (64, 128, 256, 512),
                        T: float = 1.0) -> DecaySweep:
    """Bounded within a factor 2 across the sweep."""
    reps = tuple(check_uniform_decay(alpha, gamma_, M, T) for M in Ms)
    v = np.array([r.max_scaled for r in reps])
    ok = bool(np.all(v > 0) and v.max() / v.min() <= 2.0)
    return DecaySweep(reps, ok)


# --------------------------------------------------------------------------
# table


@dataclass(frozen=True)
class CheckRow:
    check: str
    params: str
    value: float
    passed: bool


def run_checks(alphas: Sequence[float] = (0.3, 0.5, 0.7), grades: Sequence[float] = (1.0, 2.0, 3.0),
               n_random: int = 1000, M: int = 64, seed: int = 0) -> list:
    """One row per check and parameter combination."""
    rng = np.random.default_rng(seed)
    rows = []
    for a in alphas:
        for r in grades:
            mesh = graded(1.0, M, r)
            F = rng.uniform(-1.0, 1.0, size=(M, n_random))
            rep = check_lemma_stability(a, mesh, F)
            rows.append(CheckRow("stability", f"alpha={a} r={r} n={n_random}", rep.worst_ratio, rep.all_passed))
    for a in alphas:
        cert = certify_barrier(a)
        rows.append(CheckRow("barrier", f"alpha={a} p={cert.p}", min(cert.min_ratios), cert.passed))
    for a in alphas:
        mesh = graded(1.0, M, (2.0 - a) / a)
        J = rl_integral_all(a, np.ones(M), mesh)
        V = L1Operator(a, mesh).solve_forward(J)
        rep = check_comparison(a, mesh, np.ones(M), V)
        tight = float(np.max(np.abs(rep.lhs - rep.bound)))
        rows.append(CheckRow("comparison-equality", f"alpha={a}", tight, rep.passed and tight <= 1e-10))
        worst, ok = -np.inf, True
        for _ in range(max(n_random // 10, 1)):
            lam = rng.uniform(0.0, 1.0, size=M)
            V = L1Operator(a, mesh).solve_forward(0.5 * rl_integral_all(a, lam, mesh))
            rep = check_comparison(a, mesh, lam, V)
            worst = max(worst, rep.max_excess)
            ok &= rep.passed and rep.max_excess < 0.0
        rows.append(CheckRow("comparison-strict", f"alpha={a}", worst, ok))
    for a, g in ((0.3, 0.3), (0.5, 0.5), (0.7, 0.7), (0.7, 0.3)):
        sw = uniform_decay_sweep(a, g)
        rows.append(CheckRow("uniform-decay", f"alpha={a} gamma={g}", max(sw.values), sw.passed))
    return rows
