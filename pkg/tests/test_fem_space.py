import math

import numpy as np
import pytest

from fracl1.exceptions import InvalidParameterError, MeshError
from fracl1.fd_space import TensorGrid, assemble_fd
from fracl1.fem_space import (
    Triangulation,
    _local_stiffness,
    assemble_fem,
    check_a_infty,
    check_delaunay,
    export_mesh,
    import_mesh,
    load_mesh,
    structured_mesh,
)
from helpers import equilateral_patch, obtuse_pair, perturbed_delaunay


def test_structured_counts():
    m = structured_mesh(2)
    assert (m.n_vertices, m.n_triangles, int((~m.boundary).sum())) == (9, 8, 1)
    with pytest.raises(InvalidParameterError):
        structured_mesh(1)


@pytest.mark.parametrize("N", [2, 5])
def test_structured_angles(N):
    deg = np.sort(np.degrees(structured_mesh(N).angles()), axis=1)
    np.testing.assert_allclose(deg, np.tile([45.0, 45.0, 90.0], (2 * N * N, 1)), atol=1e-12)


def test_single_hat_value():
    sysm = assemble_fem(structured_mesh(2))
    assert sysm.A.shape == (1, 1)
    assert sysm.A[0, 0] == pytest.approx(4.0, rel=1e-14)


def test_reference_triangle_stiffness():
    m = Triangulation(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]), np.ones(3, bool))
    K, area = _local_stiffness(m)
    np.testing.assert_allclose(K[0], 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]), atol=1e-15)
    assert area[0] == pytest.approx(0.5)


@pytest.mark.parametrize("N", [3, 8])
def test_structured_equals_five_point(N):
    fem = assemble_fem(structured_mesh(N))
    fd = assemble_fd(TensorGrid(2, N))
    h2 = (1.0 / N) ** 2
    # same interior ordering: first coordinate fastest
    np.testing.assert_allclose(fem.interior_points, fd.interior_points, atol=1e-15)
    assert abs(fem.A / h2 - fd.A).max() <= 1e-10
    np.testing.assert_allclose(fem.mass, h2, rtol=1e-13)
    off = fem.A - np.diag(fem.A.diagonal())
    assert off.max() <= 0.0


def test_reaction_adds_lumped_mass():
    m = structured_mesh(5)
    a0, a1 = assemble_fem(m), assemble_fem(m, c=1.0)
    np.testing.assert_allclose((a1.A - a0.A).diagonal(), a0.mass, rtol=1e-13)
    assert abs((a1.A - a0.A) - np.diag((a1.A - a0.A).diagonal())).max() == 0.0
    with pytest.raises(InvalidParameterError):
        assemble_fem(m, c=lambda x: x[:, 0] - 0.5)


def mesh_families(rng):
    yield "structured", structured_mesh(6)
    for k in range(4):
        yield f"perturbed{k}", perturbed_delaunay(7, rng)
    yield "equilateral", equilateral_patch()
    yield "obtuse", obtuse_pair()


def test_lumped_mass_total_and_null_space(rng):
    for name, m in mesh_families(rng):
        sysm = assemble_fem(m)
        area = np.abs(m.signed_areas()).sum()
        assert sysm.mass_full.sum() == pytest.approx(area, rel=1e-12), name
        assert np.all(sysm.mass_full > 0)
        assert np.max(np.abs(sysm.K_full @ np.ones(m.n_vertices))) <= 1e-11, name
        row = sysm.A @ np.ones(sysm.n) + sysm.B @ np.ones(sysm.B.shape[1])
        assert np.max(np.abs(row)) <= 1e-11


def test_patch_test(rng):
    for name, m in mesh_families(rng):
        K = assemble_fem(m).K_full
        a, b, c = 0.3, -1.2, 2.5
        v = a + b * m.vertices[:, 0] + c * m.vertices[:, 1]
        area = np.abs(m.signed_areas()).sum()
        assert v @ (K @ v) == pytest.approx(area * (b * b + c * c), rel=1e-11), name


def test_a_infty_and_delaunay_agree(rng):
    seen = set()
    for name, m in mesh_families(rng):
        for kappa11 in (0.0, 1.0, 1e3):
            a = check_a_infty(assemble_fem(m), kappa11)
            d = check_delaunay(m)
            assert a.passed == d.passed, name
            seen.add(a.passed)
        assert "lumped" in a.note
    assert seen == {True, False}


def test_obtuse_counterexample():
    m = obtuse_pair()
    m.validate()
    a = check_a_infty(assemble_fem(m), 1.0)
    assert not a.passed and a.worst > 0
    assert set(a.location) == {0, 1}
    # hand value: -(cot A + cot B)/2 with A = B = 2 atan(5/3)
    ang = 2 * math.atan(0.5 / 0.3)
    assert a.worst == pytest.approx(-(1 / math.tan(ang)), rel=1e-12)
    d = check_delaunay(m)
    assert not d.passed and d.worst == pytest.approx(2 * ang, rel=1e-12)


def test_delaunay_values():
    d = check_delaunay(structured_mesh(4))
    assert d.passed
    diag = [s for (i, j), s in zip(d.edges, d.sums) if abs(s - math.pi) < 1e-9]
    assert len(diag) == 16
    e = check_delaunay(equilateral_patch())
    np.testing.assert_allclose(e.sums, 2 * math.pi / 3, rtol=1e-12)


TRI = """# one triangle
3 1
0 0 1
1 0 1
0 1 1
0 1 2
"""


def test_import_roundtrip(tmp_path):
    m = import_mesh(TRI)
    assert m.n_triangles == 1
    p = tmp_path / "m.txt"
    p.write_text(export_mesh(structured_mesh(3)))
    m2 = load_mesh(p)
    np.testing.assert_array_equal(m2.triangles, structured_mesh(3).triangles)


def test_import_flips_clockwise():
    m = import_mesh(TRI.replace("0 1 2\n", "0 2 1\n"))
    assert m.signed_areas()[0] > 0


@pytest.mark.parametrize(
    "text, line",
    [
        (TRI.replace("0 1 2\n", "0 1 7\n"), 6),
        (TRI.replace("1 0 1\n", "1 zero 1\n"), 4),
        (TRI.replace("3 1\n", "3\n"), 2),
        (TRI + "0 1 2\n", 7),
    ],
)
def test_import_errors_name_line(text, line):
    with pytest.raises(MeshError) as exc:
        import_mesh(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_topology_errors():
    # dangling vertex
    with pytest.raises(MeshError):
        import_mesh("4 1\n0 0 1\n1 0 1\n0 1 1\n5 5 1\n0 1 2\n")
    # degenerate triangle
    with pytest.raises(MeshError):
        import_mesh("3 1\n0 0 1\n1 0 1\n2 0 1\n0 1 2\n")
    # vertex on a boundary edge not flagged
    with pytest.raises(MeshError):
        import_mesh("3 1\n0 0 0\n1 0 1\n0 1 1\n0 1 2\n")
