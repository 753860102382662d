import numpy as np
import pytest

from kirchfrac.exceptions import ParameterDomainError
from kirchfrac.fem import (
    QUAD_DEG2,
    ErrorIntegrator,
    assemble_mass,
    assemble_stiffness,
    build_square_mesh,
    interpolate,
    l2_project,
    load_vector,
    norms,
    ritz_project_u0,
    write_field_table,
)

from oracles import dense_fem, dense_load, triangle_rule


def bubble(x, y):
    return (x - x**2) * (y - y**2)


def bubble_grad(x, y):
    return (1 - 2 * x) * (y - y**2), (x - x**2) * (1 - 2 * y)


def sines(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def sines_grad(x, y):
    return (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
            np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))


def p1_evaluator(tri, v):
    """Pointwise evaluation of a P1 field on the lower-left/upper-right split."""
    full = tri.to_full(v).reshape(tri.M, tri.M)    # [j, i]
    h = tri.h

    def fe(x, y):
        i = np.minimum((x / h).astype(int), tri.M - 2)
        j = np.minimum((y / h).astype(int), tri.M - 2)
        xi, eta = x / h - i, y / h - j
        u00, u10 = full[j, i], full[j, i + 1]
        u01, u11 = full[j + 1, i], full[j + 1, i + 1]
        lower = u00 + xi * (u10 - u00) + eta * (u11 - u10)
        upper = u00 + eta * (u01 - u00) + xi * (u11 - u01)
        return np.where(xi >= eta, lower, upper)

    return fe


@pytest.mark.parametrize("M, n_tri, n_dof", [(3, 8, 1), (5, 32, 9), (17, 512, 225)])
def test_counts(M, n_tri, n_dof):
    tri = build_square_mesh(M)
    assert tri.triangles.shape == (n_tri, 3)
    assert tri.n_dofs == n_dof == tri.interior_nodes.size
    assert tri.h == pytest.approx(1 / (M - 1))
    assert tri.areas.sum() == pytest.approx(1.0, rel=1e-14)


def test_rejects_tiny_mesh():
    with pytest.raises(ParameterDomainError):
        build_square_mesh(2)


def test_full_matrices():
    tri = build_square_mesh(6)
    mass = assemble_mass(tri, full=True)
    stiff = assemble_stiffness(tri, full=True)
    ones = np.ones(tri.n_nodes)
    assert ones @ mass @ ones == pytest.approx(1.0, rel=1e-14)
    assert np.abs(stiff @ ones).max() <= 1e-12
    assert abs(mass - mass.T).max() <= 1e-16
    assert abs(stiff - stiff.T).max() <= 1e-14


@pytest.mark.parametrize("M", [3, 5, 7])
def test_matrices_match_dense_oracle(M):
    tri = build_square_mesh(M)
    mass, stiff, _, _ = dense_fem(M)
    np.testing.assert_allclose(assemble_mass(tri).toarray(), mass, atol=1e-15)
    np.testing.assert_allclose(assemble_stiffness(tri).toarray(), stiff, atol=1e-13)


def test_single_dof_values():
    tri = build_square_mesh(3)
    # basis hat of the midpoint: mass 6 * (area/6) = h^2/2, stiffness 4
    assert assemble_mass(tri).toarray()[0, 0] == pytest.approx(0.125, rel=1e-14)
    assert assemble_stiffness(tri).toarray()[0, 0] == pytest.approx(4.0, rel=1e-14)


@pytest.mark.parametrize("M", [5, 9])
def test_spd(M):
    tri = build_square_mesh(M)
    np.linalg.cholesky(assemble_mass(tri).toarray())
    np.linalg.cholesky(assemble_stiffness(tri).toarray())


@pytest.mark.parametrize("M", [3, 6])
def test_load_matches_dense_oracle(M):
    tri = build_square_mesh(M)
    _, _, elements, interior = dense_fem(M)

    def f(x, y):
        return np.exp(x) * (1 + y**2)

    np.testing.assert_allclose(load_vector(tri, f), dense_load(elements, interior, f), rtol=1e-6)


def test_load_exact_for_quartic_integrand():
    tri = build_square_mesh(5)
    # f * phi is degree <= 4 per triangle, so the rule is exact
    f = lambda x, y: x**3 + x * y**2
    _, _, elements, interior = dense_fem(5)
    np.testing.assert_allclose(load_vector(tri, f), dense_load(elements, interior, f), rtol=1e-13)


def test_degree_two_rule_is_less_accurate():
    tri = build_square_mesh(5)
    f = lambda x, y: x**3 * y
    _, _, elements, interior = dense_fem(5)
    ref = dense_load(elements, interior, f)
    err4 = np.abs(load_vector(tri, f) - ref).max()
    err2 = np.abs(load_vector(tri, f, rule=QUAD_DEG2) - ref).max()
    assert err4 < 1e-14 < err2


def test_reference_rule_integrates_polynomials():
    pts, w = triangle_rule()
    assert w.sum() == pytest.approx(0.5, rel=1e-14)
    assert np.sum(w * pts[:, 0] ** 2 * pts[:, 1]) == pytest.approx(1 / 60, rel=1e-13)


def test_l2_projection_orthogonality():
    tri = build_square_mesh(9)
    mass = assemble_mass(tri)
    p = l2_project(tri, sines, mass)
    np.testing.assert_allclose(mass @ p, load_vector(tri, sines), atol=1e-14)
    # a finite element function projects onto itself
    assert np.allclose(l2_project(tri, lambda x, y: 0 * x), 0.0)
    v = interpolate(tri, bubble)
    np.testing.assert_allclose(l2_project(tri, p1_evaluator(tri, v)), v, atol=1e-13)


def test_ritz_projection_identity():
    tri = build_square_mesh(9)
    stiff = assemble_stiffness(tri)
    ritz = ritz_project_u0(tri, sines, sines_grad, stiff)
    numeric = ritz_project_u0(tri, sines)
    np.testing.assert_allclose(numeric, ritz, atol=1e-8)
    # Galerkin orthogonality against every basis function
    from kirchfrac.fem import gradient_load_vector
    np.testing.assert_allclose(stiff @ ritz, gradient_load_vector(tri, sines_grad), atol=1e-13)


def test_norms_of_bubble():
    tri = build_square_mesh(33)
    l2, h1 = norms(tri, interpolate(tri, bubble))
    assert l2 == pytest.approx(np.sqrt(1 / 900), rel=1e-2)
    assert h1 == pytest.approx(np.sqrt(1 / 45), rel=1e-2)


def test_interpolation_rates():
    errs = []
    hs = []
    for M in (9, 17, 33):
        tri = build_square_mesh(M)
        errs.append(ErrorIntegrator(tri).errors(interpolate(tri, sines), sines, sines_grad))
        hs.append(tri.h)
    errs = np.array(errs)
    rates = np.log(errs[:-1] / errs[1:]) / np.log(2)
    assert np.all(np.abs(rates[:, 0] - 2) <= 0.15)
    assert np.all(np.abs(rates[:, 1] - 1) <= 0.15)


def test_error_of_exact_linear_field_is_zero():
    tri = build_square_mesh(5)
    zero = np.zeros(tri.n_dofs)
    l2, h1 = ErrorIntegrator(tri).errors(zero, lambda x, y: 0 * x, lambda x, y: (0 * x, 0 * y))
    assert l2 == 0.0 and h1 == 0.0


def test_field_table(tmp_path):
    tri = build_square_mesh(4)
    path = tmp_path / "u.txt"
    write_field_table(path, tri, np.arange(tri.n_dofs, dtype=float))
    data = np.loadtxt(path)
    assert data.shape == (16, 3)
    assert data[tri.interior_nodes, 2].tolist() == [0.0, 1.0, 2.0, 3.0]
