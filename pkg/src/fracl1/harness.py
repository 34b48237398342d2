"""Convergence studies: configuration, sweeps, rate tables and their output formats.

A study is described by a JSON document::

    {
      "alpha": 0.5, "T": 1.0, "r": "optimal",
      "M": [64, 128, 256],
      "solution": "t_alpha",
      "space": {"kind": "scalar"}
             | {"kind": "fd", "d": 2, "N": [8, 16], "coefficients": {"a": 1, "b": 0, "c": 0}}
             | {"kind": "fem", "N": [16], "mesh": null, "c": 0},
      "sweep": "M" | "N",
      "rate_mode": "exact" | "double_mesh",
      "tol": 1e-10
    }

``r`` may be a number or ``"optimal"``, meaning ``(2 - alpha) / alpha``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from fracl1 import manufactured
from fracl1.exceptions import ConfigError, InvalidParameterError
from fracl1.fd_space import FdCoefficients, TensorGrid, assemble_fd
from fracl1.fem_space import assemble_fem, load_mesh, structured_mesh
from fracl1.linear_algebra import DEFAULT_TOL
from fracl1.scalar_solver import solve as scalar_solve
from fracl1.temporal_mesh import TemporalMesh, graded
from fracl1.time_stepper import EvolutionProblem, evolve

__all__ = [
    "StudyConfig",
    "ConvergenceReport",
    "ReportRow",
    "run_study",
    "estimate_rate",
    "emit",
    "parse_csv",
    "optimal_grading",
    "load_config",
]

logger = logging.getLogger(__name__)

ROUNDOFF = 1e-11
CSV_HEADER = ("param", "err_max", "err_l2", "rate_max", "rate_l2")


def optimal_grading(alpha: float) -> float:
    return (2.0 - alpha) / alpha


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class StudyConfig:
    alpha: float
    T: float = 1.0
    r: float = 1.0
    M: tuple = (64, 128, 256)
    solution: str = "t_alpha"
    space: dict = field(default_factory=lambda: {"kind": "scalar"})
    sweep: str = "M"
    rate_mode: str = "exact"
    tol: float = DEFAULT_TOL
    out: Optional[str] = None

    @property
    def kind(self) -> str:
        return self.space.get("kind", "scalar")

    @property
    def N_list(self) -> tuple:
        return tuple(self.space.get("N", ()))

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        """Validate a parsed JSON document; errors name the offending field."""
        if not isinstance(data, dict):
            raise ConfigError("$", "config must be a JSON object")
        known = {"alpha", "T", "r", "M", "solution", "space", "sweep", "rate_mode", "tol", "out", "checks"}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        if "alpha" not in data:
            raise ConfigError("alpha", "required field missing")
        alpha = _number(data["alpha"], "alpha")
        if not 0.0 < alpha < 1.0:
            raise ConfigError("alpha", f"must lie in (0, 1), got {alpha}")
        T = _number(data.get("T", 1.0), "T")
        if T <= 0.0:
            raise ConfigError("T", "must be positive")
        r_raw = data.get("r", 1.0)
        if r_raw == "optimal":
            r = optimal_grading(alpha)
        else:
            r = _number(r_raw, "r")
            if r < 1.0:
                raise ConfigError("r", "grading exponent must be >= 1 or \"optimal\"")
        Ms = _int_list(data.get("M", [64, 128, 256]), "M")
        solution = data.get("solution", "t_alpha")
        if solution not in manufactured.REGISTRY:
            raise ConfigError("solution", f"unknown manufactured solution {solution!r}")
        space = dict(data.get("space", {"kind": "scalar"}))
        kind = space.get("kind", "scalar")
        if kind not in ("scalar", "fd", "fem"):
            raise ConfigError("space.kind", f"must be scalar, fd or fem, got {kind!r}")
        sol = manufactured.get(solution)
        if kind == "scalar" and not sol.is_scalar:
            raise ConfigError("solution", f"{solution!r} is a space-time solution; use an fd or fem space")
        if kind != "scalar":
            if sol.is_scalar:
                raise ConfigError("solution", f"{solution!r} is a scalar solution; use space.kind = scalar")
            space["N"] = list(_int_list(space.get("N", [16]), "space.N"))
            if kind == "fd":
                d = space.get("d", 2)
                if d not in (1, 2, 3):
                    raise ConfigError("space.d", "must be 1, 2 or 3")
                if d not in sol.profile.dims:
                    raise ConfigError("space.d", f"{solution!r} is not defined for d={d}")
                coeffs = space.get("coefficients", {})
                if not isinstance(coeffs, dict):
                    raise ConfigError("space.coefficients", "must be an object")
                for k, v in coeffs.items():
                    if k not in ("a", "b", "c"):
                        raise ConfigError(f"space.coefficients.{k}", "unknown coefficient")
                    vals = v if isinstance(v, list) else [v]
                    for i, x in enumerate(vals):
                        _number(x, f"space.coefficients.{k}" + (f"[{i}]" if isinstance(v, list) else ""))
            else:
                if 2 not in sol.profile.dims:
                    raise ConfigError("solution", "finite elements need a 2D solution")
                c = _number(space.get("c", 0.0), "space.c")
                if c < 0.0:
                    raise ConfigError("space.c", "must be nonnegative")
        sweep = data.get("sweep", "M")
        if sweep not in ("M", "N"):
            raise ConfigError("sweep", "must be 'M' or 'N'")
        if sweep == "N" and kind == "scalar":
            raise ConfigError("sweep", "a scalar study can only sweep M")
        if sweep == "N" and kind == "fem" and space.get("mesh"):
            raise ConfigError("sweep", "an imported mesh cannot be refined")
        rate_mode = data.get("rate_mode", "exact")
        if rate_mode not in ("exact", "double_mesh"):
            raise ConfigError("rate_mode", "must be 'exact' or 'double_mesh'")
        tol = _number(data.get("tol", DEFAULT_TOL), "tol")
        if not 0.0 < tol < 1.0:
            raise ConfigError("tol", "must lie in (0, 1)")
        return cls(alpha=alpha, T=T, r=r, M=Ms, solution=solution, space=space, sweep=sweep,
                   rate_mode=rate_mode, tol=tol, out=data.get("out"))


def _number(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    return float(v)


def _int_list(v, path: str) -> tuple:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a nonempty list of integers")
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, int):
            raise ConfigError(f"{path}[{i}]", f"expected an integer, got {x!r}")
        if x < 2:
            raise ConfigError(f"{path}[{i}]", "entries must be >= 2")
    if any(b <= a for a, b in zip(v[:-1], v[1:])):
        raise ConfigError(path, "entries must be strictly increasing")
    return tuple(v)


def load_config(path) -> StudyConfig:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"{p}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return StudyConfig.from_dict(data)


# --------------------------------------------------------------------------
# reports


def estimate_rate(e_coarse: float, e_fine: float) -> float:
    """``log2(e_coarse / e_fine)``."""
    if not (e_coarse > 0.0 and e_fine > 0.0):
        raise InvalidParameterError(f"errors must be positive, got {e_coarse!r}, {e_fine!r}")
    return math.log2(e_coarse / e_fine)


@dataclass(frozen=True)
class ReportRow:
    param: int
    err_max: float
    err_l2: float
    rate_max: float = math.nan
    rate_l2: float = math.nan


@dataclass
class ConvergenceReport:
    """Rows in refinement order.  Rates are attached to the finer row of a
    pair and exist only when the parameter doubles and both errors are
    above round-off."""

    param_name: str
    rows: list
    label: str = ""
    roundoff: bool = False
    notes: list = field(default_factory=list)

    @classmethod
    def from_errors(cls, param_name, params, err_max, err_l2, label="", roundoff=ROUNDOFF):
        rows, flagged = [], False
        for k, (p, em, el) in enumerate(zip(params, err_max, err_l2)):
            rm = rl = math.nan
            if k > 0 and p == 2 * params[k - 1]:
                if min(err_max[k - 1], em) > roundoff:
                    rm = estimate_rate(err_max[k - 1], em)
                if min(err_l2[k - 1], el) > roundoff:
                    rl = estimate_rate(err_l2[k - 1], el)
            rows.append(ReportRow(int(p), float(em), float(el), rm, rl))
        notes = []
        if any(e <= roundoff for e in err_max):
            flagged = True
            notes.append(f"errors at or below {roundoff:g} are round-off; rates omitted")
        return cls(param_name, rows, label, flagged, notes)

    @property
    def params(self) -> list:
        return [r.param for r in self.rows]

    @property
    def rates(self) -> np.ndarray:
        return np.array([r.rate_max for r in self.rows[1:]])

    @property
    def finest_rate(self) -> float:
        return float(self.rows[-1].rate_max) if len(self.rows) > 1 else math.nan


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def emit(report: ConvergenceReport, fmt: str = "csv", path=None) -> str:
    """Render ``report`` as ``csv``, ``markdown`` or ``plotdata`` and optionally write it."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([r.param, _fmt(r.err_max), _fmt(r.err_l2), _fmt(r.rate_max), _fmt(r.rate_l2)])
        text = buf.getvalue()
    elif fmt == "markdown":
        text = _markdown(report)
    elif fmt == "plotdata":
        lines = [f"# series err_max ({report.label or report.param_name})", "# log10(param) log10(err)"]
        lines += [f"{math.log10(r.param):.12g} {math.log10(r.err_max):.12g}" for r in report.rows if r.err_max > 0]
        lines += ["", "", f"# series err_l2 ({report.label or report.param_name})", "# log10(param) log10(err)"]
        lines += [f"{math.log10(r.param):.12g} {math.log10(r.err_l2):.12g}" for r in report.rows if r.err_l2 > 0]
        text = "\n".join(lines) + "\n"
    else:
        raise InvalidParameterError(f"unknown format {fmt!r}; use csv, markdown or plotdata")
    if path is not None:
        Path(path).write_text(text)
    return text


def _markdown(report: ConvergenceReport) -> str:
    # errors on one row, rates on the row beneath, one column per refinement
    head = f"| {report.label or ''} | " + " | ".join(f"{report.param_name}={p}" for p in report.params) + " |"
    sep = "|---" * (len(report.rows) + 1) + "|"
    errs = "| err_max | " + " | ".join(f"{r.err_max:.3e}" for r in report.rows) + " |"
    rates = "| rate | " + " | ".join("" if math.isnan(r.rate_max) else f"{r.rate_max:.3f}" for r in report.rows) + " |"
    lines = [head, sep, errs, rates]
    for n in report.notes:
        lines.append(f"\n_{n}_")
    return "\n".join(lines) + "\n"


def parse_csv(text: str, param_name: str = "param") -> ConvergenceReport:
    """Inverse of ``emit(report, "csv")``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise InvalidParameterError(f"unexpected CSV header {header!r}")
    rows = []
    for rec in reader:
        vals = [float(x) if x else math.nan for x in rec[1:]]
        rows.append(ReportRow(int(rec[0]), *vals))
    return ConvergenceReport(param_name, rows)


# --------------------------------------------------------------------------
# running


@dataclass
class _Run:
    nodes_values: np.ndarray  # levels x points
    err_max: float
    err_l2: float


def _fd_coefficients(space: dict) -> FdCoefficients:
    c = space.get("coefficients", {})
    conv = lambda v: tuple(v) if isinstance(v, list) else v  # noqa: E731
    return FdCoefficients(a=conv(c.get("a", 1.0)), b=conv(c.get("b", 0.0)), c=c.get("c", 0.0))


def _spatial_system(cfg: StudyConfig, N: int):
    if cfg.kind == "fd":
        return assemble_fd(TensorGrid(cfg.space.get("d", 2), N), _fd_coefficients(cfg.space))
    mesh = load_mesh(cfg.space["mesh"]) if cfg.space.get("mesh") else structured_mesh(N)
    return assemble_fem(mesh, cfg.space.get("c", 0.0))


def _run_once(cfg: StudyConfig, M: int, N: Optional[int], keep_all: bool = False) -> _Run:
    sol = manufactured.get(cfg.solution)
    mesh = graded(cfg.T, M, cfg.r)
    if cfg.kind == "scalar":
        prob = sol.scalar_problem(cfg.alpha)
        U = scalar_solve(prob, mesh)
        e = np.abs(U - prob.exact(mesh.nodes))[1:]
        return _Run(U[:, None], float(e.max()), float(np.sqrt(np.sum(mesh.widths * e**2))))
    system = _spatial_system(cfg, N)
    if cfg.kind == "fd":
        coeffs, d = _fd_coefficients(cfg.space), cfg.space.get("d", 2)
    else:
        coeffs, d = FdCoefficients(c=cfg.space.get("c", 0.0)), 2
    u = sol.exact(cfg.alpha)
    prob = EvolutionProblem(
        alpha=cfg.alpha, mesh=mesh, system=system, f=sol.source(cfg.alpha, coeffs, d),
        g=None if sol.profile.homogeneous else u, u0=u, exact=u, tol=cfg.tol,
        thin=1 if keep_all else M,
    )
    tr = evolve(prob)
    return _Run(tr.values, float(tr.err_max[1:].max()), float(tr.err_l2[1:].max()))


def run_study(cfg: StudyConfig, threads: int = 1) -> ConvergenceReport:
    """One solver run per refinement value, tabulated in parameter order.

    With ``rate_mode="double_mesh"`` (M sweeps only) the error of row ``M``
    is ``max_m |U_M^m - U_2M^(2m)|``, the difference to a run with twice as
    many steps on the nested graded mesh; this isolates the temporal error
    from a fixed spatial floor.
    """
    if cfg.sweep == "M":
        N = cfg.N_list[-1] if cfg.kind != "scalar" else None
        params = list(cfg.M)
        jobs = [(M, N) for M in params]
        if cfg.rate_mode == "double_mesh":
            jobs += [(2 * params[-1], N)]
    else:
        M = cfg.M[-1]
        params = list(cfg.N_list)
        jobs = [(M, N) for N in params]
    keep = cfg.rate_mode == "double_mesh" and cfg.sweep == "M"

    def work(job):
        return _run_once(cfg, job[0], job[1], keep_all=keep)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            runs = list(ex.map(work, jobs))
    else:
        runs = [work(j) for j in jobs]

    label = f"{cfg.solution} alpha={cfg.alpha:g} r={cfg.r:.4g} {cfg.kind}"
    if cfg.sweep == "M" and cfg.rate_mode == "double_mesh":
        em, el = [], []
        by_M = dict(zip([j[0] for j in jobs], runs))
        for M in params:
            fine = by_M.get(2 * M) or _run_once(cfg, 2 * M, N, keep_all=True)
            diff = runs[params.index(M)].nodes_values[1:] - fine.nodes_values[2::2]
            em.append(float(np.max(np.abs(diff))))
            el.append(float(np.sqrt(np.mean(diff**2))))
        rep = ConvergenceReport.from_errors("M", params, em, el, label + " (double mesh)")
    else:
        runs = runs[: len(params)]
        rep = ConvergenceReport.from_errors(cfg.sweep, params, [r.err_max for r in runs],
                                            [r.err_l2 for r in runs], label)
    return rep


def with_overrides(cfg: StudyConfig, **kw) -> StudyConfig:
    return replace(cfg, **kw)
