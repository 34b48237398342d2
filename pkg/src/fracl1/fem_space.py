"""Lumped-mass P1 finite elements for ``L = -Laplace + c`` on 2D triangulations.

Mesh text format (whitespace separated, ``#`` starts a comment)::

    V F
    x y b        # V vertex lines, b = 1 marks a Dirichlet vertex
    i j k        # F triangle lines, 0-based vertex indices
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from fracl1.exceptions import InvalidParameterError, MeshError

__all__ = [
    "Triangulation",
    "FemSystem",
    "structured_mesh",
    "assemble_fem",
    "check_a_infty",
    "check_delaunay",
    "import_mesh",
    "load_mesh",
    "export_mesh",
    "AInftyReport",
    "DelaunayReport",
]

_DELAUNAY_TOL = 1e-12


@dataclass
class Triangulation:
    """Vertices ``(nv, 2)``, counter-clockwise triangles ``(nt, 3)``, boundary flags ``(nv,)``."""

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.boundary = np.asarray(self.boundary, dtype=bool)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def interior(self) -> np.ndarray:
        """Indices of the free (non-Dirichlet) vertices."""
        return np.flatnonzero(~self.boundary)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def edges(self) -> dict:
        """Map ``(i, j)`` with ``i < j`` to the list of ``(triangle, opposite vertex)``."""
        out: dict = {}
        for t, tri in enumerate(self.triangles):
            for k in range(3):
                i, j, o = tri[(k + 1) % 3], tri[(k + 2) % 3], tri[k]
                key = (min(i, j), max(i, j))
                out.setdefault(key, []).append((t, o))
        return out

    def angles(self) -> np.ndarray:
        """Interior angles ``(nt, 3)``; column ``k`` is the angle at local vertex ``k``."""
        p = self.vertices[self.triangles]
        ang = np.empty(self.triangles.shape)
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
            ang[:, k] = np.arctan2(cross, np.einsum("ij,ij->i", u, v))
        return ang

    def validate(self) -> None:
        """Check orientation, edge manifoldness and boundary flags."""
        nv = self.n_vertices
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= nv):
            raise MeshError("triangle references a vertex out of range")
        areas = self.signed_areas()
        if np.any(areas <= 0.0):
            bad = int(np.flatnonzero(areas <= 0.0)[0])
            raise MeshError(f"triangle {bad} is degenerate or clockwise")
        used = np.zeros(nv, dtype=bool)
        used[self.triangles.ravel()] = True
        if not np.all(used):
            raise MeshError(f"vertex {int(np.flatnonzero(~used)[0])} belongs to no triangle")
        for (i, j), owners in self.edges().items():
            if len(owners) > 2:
                raise MeshError(f"edge ({i}, {j}) is shared by {len(owners)} triangles")
            if len(owners) == 1 and not (self.boundary[i] and self.boundary[j]):
                raise MeshError(f"boundary edge ({i}, {j}) has a vertex not flagged as boundary")


def structured_mesh(N: int) -> Triangulation:
    """Unit square, ``N x N`` cells, each cut along its lower-left to upper-right diagonal."""
    if int(N) != N or N < 2:
        raise InvalidParameterError(f"structured mesh needs N >= 2, got {N}")
    N = int(N)
    ii, jj = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="xy")
    verts = np.column_stack([ii.ravel() / N, jj.ravel() / N])
    vid = lambda i, j: j * (N + 1) + i  # noqa: E731
    tris = []
    for j in range(N):
        for i in range(N):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    bnd = (ii.ravel() == 0) | (ii.ravel() == N) | (jj.ravel() == 0) | (jj.ravel() == N)
    return Triangulation(verts, np.array(tris), bnd)


def _local_stiffness(mesh: Triangulation):
    p = mesh.vertices[mesh.triangles]
    area = mesh.signed_areas()
    # gradient of barycentric k is perp(p_{k+2} - p_{k+1}) / (2 area)
    g = np.empty((mesh.n_triangles, 3, 2))
    for k in range(3):
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        g[:, k, 0] = -e[:, 1]
        g[:, k, 1] = e[:, 0]
    K = np.einsum("tid,tjd->tij", g, g) / (4.0 * area)[:, None, None]
    return K, area


@dataclass
class FemSystem:
    """Interior stiffness ``A``, boundary coupling ``B`` and lumped masses.

    ``A`` includes the lumped reaction term ``c(z) m_z`` on its diagonal.
    ``K_full`` is the pure Laplacian stiffness over all vertices and
    ``mass_full`` the lumped mass of every vertex.
    """

    mesh: Triangulation
    A: sp.csr_matrix
    B: sp.csr_matrix
    K_full: sp.csr_matrix
    mass_full: np.ndarray
    c_values: np.ndarray = field(repr=False)
    symmetric: bool = True

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def mass(self) -> np.ndarray:
        return self.mass_full[self.mesh.interior]

    @property
    def l2_weights(self) -> np.ndarray:
        return self.mass

    @property
    def interior_points(self) -> np.ndarray:
        return self.mesh.vertices[self.mesh.interior]

    @property
    def boundary_points(self) -> np.ndarray:
        return self.mesh.vertices[self.mesh.boundary]

    def load(self, values: np.ndarray) -> np.ndarray:
        """Lumped load vector ``m_z f(z)``."""
        return self.mass * values


def assemble_fem(mesh: Triangulation, c: Union[float, Callable] = 0.0) -> FemSystem:
    """Assemble the lumped-mass P1 system for ``-Laplace + c``.

    Raises
    ------
    MeshError
        If a triangle has zero (or negative) area.
    InvalidParameterError
        If ``c`` is negative at a vertex.
    """
    K_loc, area = _local_stiffness(mesh)
    if np.any(area <= 0.0):
        raise MeshError(f"triangle {int(np.flatnonzero(area <= 0.0)[0])} has nonpositive area")
    nv = mesh.n_vertices
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    K = sp.csr_matrix((K_loc.ravel(), (rows, cols)), shape=(nv, nv))
    K.sum_duplicates()
    K.sort_indices()
    mass = np.zeros(nv)
    np.add.at(mass, mesh.triangles.ravel(), np.repeat(area / 3.0, 3))

    if callable(c):
        cv = np.asarray(c(mesh.vertices), dtype=float) * np.ones(nv)
    else:
        cv = np.full(nv, float(c))
    if np.any(cv < 0.0):
        raise InvalidParameterError("reaction coefficient c must be nonnegative")

    inner = mesh.interior
    bnd = np.flatnonzero(mesh.boundary)
    A = (K[inner][:, inner] + sp.diags(cv[inner] * mass[inner])).tocsr()
    A.sort_indices()
    B = K[inner][:, bnd].tocsr()
    B.sort_indices()
    return FemSystem(mesh=mesh, A=A, B=B, K_full=K, mass_full=mass, c_values=cv)


@dataclass(frozen=True)
class AInftyReport:
    worst: float
    location: tuple | None
    passed: bool
    note: str


def check_a_infty(system: FemSystem, kappa11: float) -> AInftyReport:
    """Largest off-diagonal entry of ``A + kappa11 * diag(m)`` over interior pairs.

    With lumped mass the ``kappa11`` term sits on the diagonal only, so the
    verdict coincides with the sign pattern of the stiffness matrix.
    """
    S = (system.A + kappa11 * sp.diags(system.mass)).tocoo()
    off = S.row != S.col
    note = "lumped mass is diagonal: verdict depends on stiffness off-diagonal signs only"
    if not np.any(off):
        return AInftyReport(-math.inf, None, True, note)
    vals = S.data[off]
    k = int(np.argmax(vals))
    inner = system.mesh.interior
    loc = (int(inner[S.row[off][k]]), int(inner[S.col[off][k]]))
    return AInftyReport(float(vals[k]), loc, bool(vals[k] <= 0.0), note)


@dataclass(frozen=True)
class DelaunayReport:
    edges: list
    sums: np.ndarray
    passed: bool

    @property
    def worst(self) -> float:
        return float(self.sums.max()) if self.sums.size else 0.0


def check_delaunay(mesh: Triangulation) -> DelaunayReport:
    """Sum of the two angles opposite every interior edge; passes when all are ``<= pi``."""
    ang = mesh.angles()
    edges, sums = [], []
    for (i, j), owners in mesh.edges().items():
        if len(owners) != 2:
            continue
        total = 0.0
        for t, o in owners:
            k = int(np.flatnonzero(mesh.triangles[t] == o)[0])
            total += ang[t, k]
        edges.append((i, j))
        sums.append(total)
    sums = np.array(sums)
    return DelaunayReport(edges, sums, bool(np.all(sums <= math.pi + _DELAUNAY_TOL)))


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def import_mesh(text: str) -> Triangulation:
    """Parse a mesh in the documented text format.

    Clockwise triangles are reoriented; malformed lines raise
    :class:`MeshError` naming the line number.
    """
    lines = list(_tokens(text))
    if not lines:
        raise MeshError("empty mesh file", line=1)
    lineno, head = lines[0]
    try:
        if len(head) != 2:
            raise ValueError
        nv, nf = int(head[0]), int(head[1])
    except ValueError:
        raise MeshError("header must be 'V F'", line=lineno) from None
    if nv < 3 or nf < 1:
        raise MeshError("need at least 3 vertices and 1 triangle", line=lineno)
    if len(lines) < 1 + nv + nf:
        last = lines[-1][0]
        raise MeshError(f"expected {nv} vertex and {nf} triangle lines, file ends early", line=last)
    verts = np.empty((nv, 2))
    bnd = np.empty(nv, dtype=bool)
    for k in range(nv):
        lineno, tok = lines[1 + k]
        try:
            if len(tok) != 3:
                raise ValueError
            verts[k] = float(tok[0]), float(tok[1])
            flag = int(tok[2])
            if flag not in (0, 1):
                raise ValueError
            bnd[k] = bool(flag)
        except ValueError:
            raise MeshError("vertex line must be 'x y b' with b in {0, 1}", line=lineno) from None
    tris = np.empty((nf, 3), dtype=np.int64)
    for k in range(nf):
        lineno, tok = lines[1 + nv + k]
        try:
            if len(tok) != 3:
                raise ValueError
            tri = [int(s) for s in tok]
        except ValueError:
            raise MeshError("triangle line must be three integer vertex indices", line=lineno) from None
        for v in tri:
            if not 0 <= v < nv:
                raise MeshError(f"vertex index {v} out of range 0..{nv - 1}", line=lineno)
        if len(set(tri)) != 3:
            raise MeshError("triangle repeats a vertex", line=lineno)
        tris[k] = tri
    if len(lines) > 1 + nv + nf:
        raise MeshError("unexpected content after the last triangle", line=lines[1 + nv + nf][0])

    mesh = Triangulation(verts, tris, bnd)
    area = mesh.signed_areas()
    flip = area < 0.0
    mesh.triangles[flip] = mesh.triangles[flip][:, [0, 2, 1]]
    mesh.validate()
    return mesh


def load_mesh(path) -> Triangulation:
    return import_mesh(Path(path).read_text(encoding="utf-8"))


def export_mesh(mesh: Triangulation) -> str:
    out = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    for (x, y), b in zip(mesh.vertices, mesh.boundary):
        out.append(f"{float(x)!r} {float(y)!r} {int(b)}")
    for tri in mesh.triangles:
        out.append(" ".join(str(int(v)) for v in tri))
    return "\n".join(out) + "\n"
