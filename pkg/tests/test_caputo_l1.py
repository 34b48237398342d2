import math

import numpy as np
import pytest
from scipy import integrate

from fracl1.caputo_l1 import L1Operator, apply, caputo_power_oracle, history_rhs, kappa, rl_integral
from fracl1.exceptions import DomainError, IndexRangeError, InvalidParameterError
from fracl1.special_fn import gamma
from fracl1.temporal_mesh import TemporalMesh, graded, uniform


def kappa_quad(alpha, mesh, m, j):
    """Average of (t_m - s)^-alpha / Gamma(1-alpha) over (t_{j-1}, t_j), by quadrature."""
    t = mesh.nodes
    # substitute u = t_m - s; the singular last interval uses an algebraic weight
    lo, hi = t[m] - t[j], t[m] - t[j - 1]
    val, _ = integrate.quad(lambda u: 1.0, lo, hi, weight="alg", wvar=(-alpha, 0), epsabs=0, epsrel=1e-13) \
        if lo == 0.0 else integrate.quad(lambda u: u ** (-alpha), lo, hi, epsabs=0, epsrel=1e-13)
    return val / (mesh.widths[j - 1] * math.gamma(1.0 - alpha))


def test_kappa_examples():
    op = L1Operator(0.5, uniform(5.0, 5))
    assert op.kappa(1, 1) == pytest.approx(1.1283791671, rel=1e-10)
    # quadrature and 30-digit oracles both give 0.46738995451021...
    assert op.kappa(2, 1) == pytest.approx(kappa_quad(0.5, op.mesh, 2, 1), rel=1e-12)
    assert op.kappa(2, 1) == pytest.approx((math.sqrt(2) - 1) / math.gamma(1.5), rel=1e-14)
    for m in range(1, 6):
        assert op.kappa(m, 0) == 0.0
        assert kappa(op, m, m) == pytest.approx(1.0 / gamma(1.5), rel=1e-14)


def test_kappa_matches_quadrature(rng):
    for _ in range(40):
        alpha = rng.uniform(0.1, 0.9)
        mesh = graded(rng.uniform(0.5, 3.0), int(rng.integers(2, 60)), rng.uniform(1.0, 4.0))
        m = int(rng.integers(1, mesh.M + 1))
        j = int(rng.integers(1, m + 1))
        op = L1Operator(alpha, mesh)
        assert op.kappa(m, j) == pytest.approx(kappa_quad(alpha, mesh, m, j), rel=1e-9)


def test_kappa_index_errors():
    op = L1Operator(0.5, uniform(1.0, 4))
    for m, j in ((0, 0), (5, 1), (2, 3), (2, -1)):
        with pytest.raises(IndexRangeError):
            op.kappa(m, j)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
def test_alpha_range(alpha):
    with pytest.raises(InvalidParameterError):
        L1Operator(alpha, uniform(1.0, 4))


@pytest.mark.parametrize("alpha", np.round(np.arange(0.1, 1.0, 0.1), 1))
@pytest.mark.parametrize("r", [1.0, 2.5])
def test_rows_monotone_and_telescoping(alpha, r):
    op = L1Operator(alpha, graded(1.0, 256, r))
    for m in range(1, 257):
        row = op.kappa_row(m)
        assert row[0] == 0.0
        assert np.all(np.diff(row) >= 0.0)
        assert np.sum(op.history_weights(m)) == pytest.approx(op.kappa_diag(m), rel=1e-12)


@pytest.mark.parametrize("mesh", [uniform(1.0, 30), graded(2.0, 40, 3.0), graded(1.0, 512, 5.6667)])
def test_constant_history(mesh):
    op = L1Operator(0.4, mesh)
    c = -3.25
    H = np.full(mesh.M + 1, c)
    for m in (1, 2, mesh.M // 2, mesh.M):
        assert abs(op.apply(H, m)) <= 1e-12 * abs(c) * op.kappa_diag(m)
        assert op.history_rhs(H, m) == pytest.approx(c * op.kappa_diag(m), rel=1e-12)


def test_linear_exactness_example():
    op = L1Operator(0.5, uniform(1.0, 4))
    assert apply(op, op.mesh.nodes, 4) == pytest.approx(1.1283791671, rel=1e-10)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("mesh", [uniform(1.0, 64), graded(1.0, 64, 2.0), graded(3.0, 200, 4.0)])
def test_linear_exactness(alpha, mesh):
    b = -1.9
    op = L1Operator(alpha, mesh)
    D = op.apply_all(b * mesh.nodes)
    expected = b * mesh.nodes[1:] ** (1 - alpha) / gamma(2 - alpha)
    np.testing.assert_allclose(D, expected, rtol=1e-11)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("r", [1.0, 2.0, 4.0, 9.0])
def test_affine_exactness(alpha, r):
    # a + b t_j is rounded before the operator sees it, and the m-term sum
    # cancels terms of size |a| kappa_mm: the standard recursive-summation
    # bound (m + 2) eps |a| kappa_mm dwarfs b t^(1-alpha) near t = 0 on steep meshes
    a, b = 0.7, -1.9
    mesh = graded(3.0, 200, r)
    op = L1Operator(alpha, mesh)
    D = op.apply_all(a + b * mesh.nodes)
    expected = b * mesh.nodes[1:] ** (1 - alpha) / gamma(2 - alpha)
    kd = np.array([op.kappa_diag(m) for m in range(1, mesh.M + 1)])
    slack = (np.arange(1, mesh.M + 1) + 2) * np.finfo(float).eps * abs(a) * kd
    assert np.all(np.abs(D - expected) <= 1e-11 * np.abs(expected) + slack)


def test_history_rhs_identity(rng):
    mesh = graded(1.0, 50, 2.0)
    op = L1Operator(0.6, mesh)
    H = rng.standard_normal((51, 7))
    assert np.allclose(history_rhs(op, H, 1), op.kappa(1, 1) * H[0], rtol=1e-14)
    for m in (1, 13, 50):
        lhs = op.apply(H, m)
        rhs = op.kappa_diag(m) * H[m] - op.history_rhs(H, m)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-11)
        # against the plain difference-quotient sum
        dq = np.diff(H[: m + 1], axis=0) / mesh.widths[:m, None]
        direct = sum(op.kappa(m, j) * mesh.widths[j - 1] * dq[j - 1] for j in range(1, m + 1))
        np.testing.assert_allclose(lhs, direct, rtol=1e-10, atol=1e-10)


def test_history_length_errors():
    op = L1Operator(0.5, uniform(1.0, 8))
    with pytest.raises(InvalidParameterError):
        op.history_rhs(np.zeros(3), 5)
    with pytest.raises(InvalidParameterError):
        op.apply(np.zeros(5), 5)


def test_compensated_matches_plain(rng):
    mesh = graded(1.0, 300, 3.0)
    H = rng.standard_normal((301, 5))
    a = L1Operator(0.3, mesh).history_rhs(H, 300)
    b = L1Operator(0.3, mesh, compensated=True).history_rhs(H, 300)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_solve_forward_roundtrip(rng):
    mesh = graded(1.0, 40, 2.0)
    op = L1Operator(0.35, mesh)
    F = rng.standard_normal((40, 3))
    V = op.solve_forward(F, v0=0.5)
    np.testing.assert_allclose(op.apply_all(V), F, atol=1e-11)
    assert np.all(V[0] == 0.5)


def caputo_quad(alpha, beta, t):
    val, _ = integrate.quad(lambda s: beta * s ** (beta - 1), 0, t, weight="alg", wvar=(0, -alpha),
                            epsabs=0, epsrel=1e-12) if beta >= 1 else \
        integrate.quad(lambda s: beta, 0, t, weight="alg", wvar=(beta - 1, -alpha), epsabs=0, epsrel=1e-12)
    return val / math.gamma(1 - alpha)


def test_power_oracle():
    for t in (0.1, 1.0, 7.0):
        assert caputo_power_oracle(0.5, 0.5, t) == pytest.approx(0.8862269255, rel=1e-10)
    assert caputo_power_oracle(0.3, 2.0, 1.0) == pytest.approx(1.294761, rel=1e-6)
    for alpha, beta, t in ((0.3, 2.0, 1.0), (0.6, 1.0, 2.0), (0.5, 0.5, 0.3), (0.7, 1.4, 1.5), (0.2, 0.9, 0.8)):
        assert caputo_power_oracle(alpha, beta, t) == pytest.approx(caputo_quad(alpha, beta, t), rel=1e-9)
    assert caputo_power_oracle(0.5, 0.0, 2.0) == 0.0
    with pytest.raises(DomainError):
        caputo_power_oracle(0.5, 0.3, 1.0)


def test_rl_integral():
    mesh = graded(1.0, 16, 2.0)
    for m in (1, 5, 16):
        t = mesh.nodes[m]
        assert rl_integral(0.4, np.ones(16), mesh, t) == pytest.approx(t**0.6 / gamma(1.6), rel=1e-12)
        assert rl_integral(0.4, np.zeros(16), mesh, t) == 0.0
    u = uniform(3.0, 3)
    assert rl_integral(0.5, [1.0, 0.0, 0.0], u, 2.0) == pytest.approx(0.467389954510218, rel=1e-13)
    with pytest.raises(InvalidParameterError):
        rl_integral(0.5, np.ones(3), u, 1.5)


def test_rl_integral_quadrature(rng):
    mesh = graded(2.0, 12, 1.8)
    lam = rng.uniform(0, 1, 12)
    m = 9
    t = mesh.nodes
    total = 0.0
    for j in range(1, m + 1):
        v, _ = integrate.quad(lambda s: (t[m] - s) ** (-0.3), t[j - 1], t[j],
                              epsabs=0, epsrel=1e-12, limit=200)
        total += lam[j - 1] * v
    assert rl_integral(0.3, lam, mesh, t[m]) == pytest.approx(total / math.gamma(0.7), rel=1e-9)


def test_module_functions():
    op = L1Operator(0.5, TemporalMesh.from_nodes([0, 0.5, 1.0]))
    H = np.array([0.0, 1.0, 2.0])
    assert apply(op, H, 2) == pytest.approx(op.apply(H, 2))
