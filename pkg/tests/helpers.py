"""Mesh families and coefficient fields shared across test modules."""

import numpy as np
from scipy.spatial import Delaunay

from fracl1.fd_space import FdCoefficients
from fracl1.fem_space import Triangulation


def obtuse_pair():
    """Six vertices; the edge between the two interior vertices faces two
    118-degree angles, so its cotangent weight is positive."""
    v = np.array([[-0.5, 0.0], [0.5, 0.0], [0.0, 0.3], [0.0, -0.3], [-1.5, 0.0], [1.5, 0.0]])
    t = np.array([[0, 1, 2], [1, 0, 3], [0, 2, 4], [0, 4, 3], [1, 5, 2], [1, 3, 5]])
    b = np.array([False, False, True, True, True, True])
    return Triangulation(v, t, b)


def perturbed_delaunay(N, rng, amp=0.25):
    """Jittered square grid, Delaunay-triangulated; boundary vertices stay put."""
    x = np.linspace(0, 1, N + 1)
    X, Y = np.meshgrid(x, x, indexing="xy")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    bnd = np.any((pts == 0) | (pts == 1), axis=1)
    pts[~bnd] += rng.uniform(-amp, amp, (int((~bnd).sum()), 2)) / N
    tri = Delaunay(pts).simplices
    return Triangulation(pts, tri.astype(np.int64), bnd)


def equilateral_patch():
    """Hexagon of six equilateral triangles around one interior vertex."""
    ang = np.arange(6) * np.pi / 3
    v = np.vstack([[0.0, 0.0], np.column_stack([np.cos(ang), np.sin(ang)])])
    t = np.array([[0, 1 + k, 1 + (k + 1) % 6] for k in range(6)])
    return Triangulation(v, t, np.array([False] + [True] * 6))


def random_coefficients(rng, d, bmax):
    """Smooth positive a_k, bounded b_k and nonnegative c built from random trig modes."""
    pa = rng.uniform(0, 2 * np.pi, (d, d))
    pb = rng.uniform(0, 2 * np.pi, (d, d))
    amp = rng.uniform(0.2, 0.8, d)
    a = [lambda x, k=k: 1.0 + amp[k] * np.sin(x @ pa[k]) for k in range(d)]
    b = [lambda x, k=k: bmax * np.cos(x @ pb[k] + k) for k in range(d)]
    cc = rng.uniform(0, 3)
    c = lambda x: cc * (1.0 + np.sin(3 * x[:, 0])) / 2  # noqa: E731
    return FdCoefficients(a=a, b=b, c=c)
