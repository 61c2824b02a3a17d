"""Lowest-order Raviart-Thomas fluxes paired with piecewise-constant pressures.

On a cell ``K`` with vertices ``p_0..p_d`` the local basis function attached to
the facet opposite ``p_i`` is

    phi_i(x) = s_i (x - p_i) / (d |K|),   div phi_i = s_i / |K|,

with ``s_i`` the cell's orientation sign for that facet. Its normal flux is one
across its own facet (along the global normal) and zero across the others.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import SimplicialMesh
from .quadrature import QuadratureRule, facet_rule


@dataclass(frozen=True, eq=False)
class MixedSpace:
    mesh: SimplicialMesh

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def n_flux_dofs(self) -> int:
        return self.mesh.n_facets

    @property
    def n_pressure_dofs(self) -> int:
        return self.mesh.n_cells

    @property
    def dofs(self) -> np.ndarray:
        """Local-to-global flux dof map ``(nc, d + 1)``."""
        return self.mesh.cell_facets

    @property
    def signs(self) -> np.ndarray:
        return self.mesh.cell_signs

    def pressure_mass_matrix(self) -> sp.csr_matrix:
        return sp.diags(self.mesh.volumes).tocsr()


def rt0_basis(space: MixedSpace, cells, points) -> np.ndarray:
    """All local basis functions of ``cells`` at ``points``.

    ``cells`` has shape ``(m,)`` and ``points`` ``(m, nq, d)``; returns
    ``(m, nq, d + 1, d)``.
    """
    cells = np.asarray(cells)
    mesh = space.mesh
    d = mesh.dim
    P = mesh.cell_vertices[cells]                     # (m, d+1, d)
    scale = space.signs[cells] / (d * mesh.volumes[cells, None])  # (m, d+1)
    diff = points[:, :, None, :] - P[:, None, :, :]   # (m, nq, d+1, d)
    return diff * scale[:, None, :, None]


def rt0_basis_at(space: MixedSpace, cell: int, local_dof: int, x) -> np.ndarray:
    mesh = space.mesh
    p = mesh.cell_vertices[cell, local_dof]
    s = space.signs[cell, local_dof]
    return s * (np.asarray(x, dtype=float) - p) / (mesh.dim * mesh.volumes[cell])


def rt0_div(space: MixedSpace, cell: int, local_dof: int) -> float:
    return float(space.signs[cell, local_dof] / space.mesh.volumes[cell])


def rt0_divergences(space: MixedSpace) -> np.ndarray:
    """``(nc, d + 1)`` constant divergences of every local basis function."""
    return space.signs / space.mesh.volumes[:, None]


def evaluate_flux(space: MixedSpace, dofs: np.ndarray, cells, points) -> np.ndarray:
    """Discrete flux with coefficients ``dofs`` at ``points`` ``(m, nq, d)`` of ``cells``."""
    cells = np.asarray(cells)
    coeff = dofs[space.dofs[cells]]                  # (m, d+1)
    return np.einsum("mqkd,mk->mqd", rt0_basis(space, cells, points), coeff)


def flux_at_centroids(space: MixedSpace, dofs: np.ndarray) -> np.ndarray:
    mesh = space.mesh
    cells = np.arange(mesh.n_cells)
    return evaluate_flux(space, dofs, cells, mesh.centroids[:, None, :])[:, 0, :]


def divergence(space: MixedSpace, dofs: np.ndarray) -> np.ndarray:
    """Cellwise constant divergence of a discrete flux."""
    return np.einsum("ck,ck->c", rt0_divergences(space), dofs[space.dofs])


def facet_quadrature(space: MixedSpace, facets=None, rule: QuadratureRule | None = None):
    """Points ``(m, nq, d)`` and weights ``(m, nq)`` on the given facets."""
    mesh = space.mesh
    idx = np.arange(mesh.n_facets) if facets is None else np.asarray(facets)
    if rule is None:
        rule = facet_rule(mesh.dim, 2 if mesh.dim == 3 else 5)
    return rule.map(mesh.vertices[mesh.facets[idx]])


def interpolate_flux(field, space: MixedSpace, rule: QuadratureRule | None = None) -> np.ndarray:
    """Canonical interpolant: ``dof_f = int_f field . n_f`` along the global normal.

    ``field`` maps points ``(N, d)`` to vectors ``(N, d)``. The default facet
    rule is 3-point Gauss on edges and the 3-point rule on triangles.
    """
    mesh = space.mesh
    pts, w = facet_quadrature(space, rule=rule)
    m, nq, d = pts.shape
    vals = np.asarray(field(pts.reshape(-1, d))).reshape(m, nq, d)
    return np.einsum("fq,fqd,fd->f", w, vals, mesh.facet_normals)
