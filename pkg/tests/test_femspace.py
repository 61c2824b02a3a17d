import numpy as np
import pytest

from linesource.femspace import (MixedSpace, divergence, evaluate_flux, flux_at_centroids, interpolate_flux,
                                 rt0_basis, rt0_basis_at, rt0_div, rt0_divergences)
from linesource.mesh import _with_facets, build_box_mesh
from linesource.quadrature import facet_rule


def space(dim, n):
    return MixedSpace(build_box_mesh(dim, np.zeros(dim), np.ones(dim), n))


def local_facet_vertices(mesh, cell, i):
    idx = [j for j in range(mesh.dim + 1) if j != i]
    return mesh.cell_vertices[cell, idx]


def test_reference_triangle_dof_duality():
    mesh = _with_facets(2, np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]),
                        np.zeros(2), np.ones(2))
    V = MixedSpace(mesh)
    normals = mesh.cell_outward_normals()[0]
    rule = facet_rule(2, 3)
    for i in range(3):
        for j in range(3):
            pts, w = rule.map(local_facet_vertices(mesh, 0, j)[None])
            phi = np.array([rt0_basis_at(V, 0, i, p) for p in pts[0]])
            flux = np.sum(w[0] * (phi @ normals[j]))
            assert flux == pytest.approx(float(i == j), abs=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_unit_normal_flux_on_own_facet_only(dim):
    V = space(dim, 2)
    mesh = V.mesh
    rule = facet_rule(dim, 3)
    for cell in range(0, mesh.n_cells, 3):
        for i in range(dim + 1):
            for j in range(dim + 1):
                pts, w = rule.map(local_facet_vertices(mesh, cell, j)[None])
                phi = rt0_basis(V, np.array([cell]), pts)[0, :, i, :]
                n_glob = mesh.facet_normals[mesh.cell_facets[cell, j]]
                assert np.sum(w[0] * (phi @ n_glob)) == pytest.approx(float(i == j), abs=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_divergence_theorem_per_basis_function(dim):
    V = space(dim, 2)
    mesh = V.mesh
    normals = mesh.cell_outward_normals()
    rule = facet_rule(dim, 3)
    for cell in range(mesh.n_cells):
        for i in range(dim + 1):
            outflow = 0.0
            for j in range(dim + 1):
                pts, w = rule.map(local_facet_vertices(mesh, cell, j)[None])
                phi = rt0_basis(V, np.array([cell]), pts)[0, :, i, :]
                outflow += np.sum(w[0] * (phi @ normals[cell, j]))
            assert rt0_div(V, cell, i) * mesh.volumes[cell] == pytest.approx(outflow, abs=1e-12)
            assert rt0_div(V, cell, i) * mesh.volumes[cell] == pytest.approx(V.signs[cell, i], abs=1e-12)
    np.testing.assert_allclose(rt0_divergences(V) * mesh.volumes[:, None], V.signs, atol=1e-12)


def test_interpolate_constant_field():
    V = space(3, 2)
    e = np.array([1.0, 0.0, 0.0])
    dofs = interpolate_flux(lambda x: np.tile(e, (len(x), 1)), V)
    np.testing.assert_allclose(dofs, V.mesh.facet_measures * V.mesh.facet_normals[:, 0], atol=1e-14)
    np.testing.assert_allclose(flux_at_centroids(V, dofs), np.tile(e, (V.mesh.n_cells, 1)), atol=1e-13)


@pytest.mark.parametrize("dim", [2, 3])
def test_interpolated_linear_field_has_divergence_d(dim):
    V = space(dim, 3)
    dofs = interpolate_flux(lambda x: x.copy(), V)
    np.testing.assert_allclose(divergence(V, dofs), dim, atol=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_interpolant_reproduces_rt0_fields(dim):
    # a + b x lies in RT0, so interpolation is exact everywhere
    V = space(dim, 2)
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=dim), rng.normal()
    dofs = interpolate_flux(lambda x: a + b * x, V)
    pts = V.mesh.centroids[:, None, :] + 0.1 * (V.mesh.cell_vertices[:, :1, :] - V.mesh.centroids[:, None, :])
    vals = evaluate_flux(V, dofs, np.arange(V.mesh.n_cells), pts)
    np.testing.assert_allclose(vals, a + b * pts, atol=1e-12)


def test_commuting_property_affine_field():
    V = space(3, 2)
    M = np.array([[1.0, 2.0, -1.0], [0.5, -3.0, 0.0], [2.0, 1.0, 4.0]])
    dofs = interpolate_flux(lambda x: x @ M.T + 1.0, V)
    np.testing.assert_allclose(divergence(V, dofs), np.trace(M), atol=1e-10)


def test_pressure_mass_matrix_is_diagonal_volumes():
    V = space(2, 3)
    Mp = V.pressure_mass_matrix()
    assert Mp.nnz == V.mesh.n_cells
    np.testing.assert_array_equal(Mp.diagonal(), V.mesh.volumes)


def test_dof_counts():
    V = space(3, 2)
    assert V.n_flux_dofs == V.mesh.n_facets and V.n_pressure_dofs == V.mesh.n_cells
