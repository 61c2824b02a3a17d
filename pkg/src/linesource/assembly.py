"""Assembly of the RT0 x DG0 saddle-point system.

Both discretisations share the block structure

    (kappa^-1 q_h, v) - (div v, u_h) = -(v . n, u_D)_boundary
    (div q_h, theta)                 = (source, theta)

which is stored symmetric by solving for ``(q_h, -u_h)``:

    [ A  B^T ] [ q_h  ]   [ g ]
    [ B   0  ] [ -u_h ] = [ b ]

The standard method uses the line (or point) measure as source; the
singularity-removal method uses the regular remainder source and the
remainder boundary data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .femspace import MixedSpace, facet_quadrature, rt0_basis
from .mesh import SimplicialMesh, intersect_segment_cells, locate_cell
from .network import LineNetwork, PointSource
from .quadrature import facet_rule, gauss_line, simplex_rule, subdivided_rule
from .splitting import SplitProblem, remainder_boundary, remainder_source

_CHUNK_POINTS = 200_000


@dataclass(frozen=True, eq=False)
class MixedSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    g: np.ndarray
    b: np.ndarray

    @property
    def n_flux(self) -> int:
        return self.A.shape[0]

    @property
    def n_pressure(self) -> int:
        return self.B.shape[0]

    def matrix(self) -> sp.csr_matrix:
        return sp.bmat([[self.A, self.B.T], [self.B, None]], format="csr")

    def rhs(self) -> np.ndarray:
        return np.concatenate([self.g, self.b])


def assemble_darcy(space: MixedSpace, kappa: float):
    """Flux mass matrix ``A`` (scaled by ``1/kappa``) and divergence block ``B``."""
    if not kappa > 0:
        raise ValidationError(f"kappa must be positive, got {kappa}")
    mesh = space.mesh
    nc, k = mesh.n_cells, mesh.dim + 1
    rule = simplex_rule(mesh.dim, 2)
    pts, w = rule.map(mesh.cell_vertices)
    phi = rt0_basis(space, np.arange(nc), pts)             # (nc, nq, k, d)
    local = np.einsum("cq,cqid,cqjd->cij", w, phi, phi) / kappa
    rows = np.repeat(space.dofs, k, axis=1).ravel()
    cols = np.tile(space.dofs, (1, k)).ravel()
    n = space.n_flux_dofs
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A = ((A + A.T) * 0.5).tocsr()
    A.sort_indices()
    B = sp.coo_matrix(
        (space.signs.ravel().astype(float), (np.repeat(np.arange(nc), k), space.dofs.ravel())),
        shape=(nc, n)).tocsr()
    B.sort_indices()
    return A, B


def assemble_boundary_term(space: MixedSpace, trace: Callable, source=None,
                           floor_radius: float = 1e-12, order: int = 3) -> np.ndarray:
    """``g_f = -int_f trace (phi_f . n) ds`` on boundary facets, zero elsewhere.

    Boundary quadrature points closer than ``floor_radius`` to ``source`` are
    pushed ``10 * floor_radius`` towards the facet centroid before evaluation.
    """
    mesh = space.mesh
    bf = mesh.boundary_facets
    g = np.zeros(space.n_flux_dofs)
    if bf.size == 0:
        return g
    pts, w = facet_quadrature(space, bf, facet_rule(mesh.dim, order))
    m, nq, d = pts.shape
    flat = pts.reshape(-1, d).copy()
    if source is not None:
        dist = source.distance(flat)
        hit = dist < floor_radius
        if np.any(hit):
            centre = np.repeat(mesh.vertices[mesh.facets[bf]].mean(axis=1), nq, axis=0)
            step = centre[hit] - flat[hit]
            flat[hit] += 10.0 * floor_radius * step / np.linalg.norm(step, axis=1, keepdims=True)
    vals = np.asarray(trace(flat), dtype=float).reshape(m, nq)
    # on a boundary facet the global normal is outward and phi_f . n = 1/|f|
    g[bf] = -np.einsum("fq,fq->f", w, vals) / mesh.facet_measures[bf]
    return g


def near_source_cells(mesh: SimplicialMesh, source) -> np.ndarray:
    """Cells whose distance to ``source`` may be below their diameter.

    Uses ``dist(centroid) - circumradius bound < diameter``, a cheap superset
    of the exact criterion.
    """
    c = mesh.centroids
    reach = np.linalg.norm(mesh.cell_vertices - c[:, None, :], axis=2).max(axis=1)
    return source.distance(c) - reach < mesh.diameters


def integrate_over_cells(mesh: SimplicialMesh, integrand: Callable, source=None,
                         order: int = 4, levels: int = 2) -> np.ndarray:
    """Per-cell integrals of ``integrand(cells, points) -> (m, nq)``.

    Cells near ``source`` use the base rule on ``levels`` rounds of red
    refinement. Work is chunked so peak memory stays bounded; the summation
    order is fixed, so results are bit-reproducible.
    """
    out = np.zeros(mesh.n_cells)
    near = np.zeros(mesh.n_cells, dtype=bool)
    if source is not None and levels > 0:
        near = near_source_cells(mesh, source)
    base = simplex_rule(mesh.dim, order)
    fine = subdivided_rule(mesh.dim, order, levels) if levels > 0 else base
    for rule, mask in ((base, ~near), (fine, near)):
        cells = np.flatnonzero(mask)
        step = max(1, _CHUNK_POINTS // len(rule))
        for start in range(0, cells.size, step):
            chunk = cells[start:start + step]
            pts, w = rule.map(mesh.cell_vertices[chunk])
            vals = integrand(chunk, pts)
            out[chunk] = np.einsum("cq,cq->c", w, vals)
    return out


def _pointwise(fn):
    def integrand(cells, pts):
        m, nq, d = pts.shape
        return np.asarray(fn(pts.reshape(-1, d)), dtype=float).reshape(m, nq)
    return integrand


def assemble_source_regular(space: MixedSpace, f_r: Callable, source=None,
                            subdivide: bool = True, order: int = 4, levels: int = 2) -> np.ndarray:
    """``b_K = int_K f_r`` with refined quadrature on cells near ``source``."""
    return integrate_over_cells(space.mesh, _pointwise(f_r), source if subdivide else None,
                                order=order, levels=levels if subdivide else 0)


def assemble_source_line(space: MixedSpace, net: LineNetwork, f: Optional[Callable] = None) -> np.ndarray:
    """``b_K = int_{Lambda cap K} f ds`` with 2-point Gauss per clipped piece.

    The segment intensities are always applied; ``f`` is an optional extra
    factor evaluated pointwise.
    """
    b = np.zeros(space.n_pressure_dofs)
    s_ref, w_ref = gauss_line(2)
    for seg in net:
        for cell, s0, s1 in intersect_segment_cells(space.mesh, seg):
            s = s0 + (s1 - s0) * s_ref
            x = seg.point_at(s)
            vals = seg.intensity(x)
            if f is not None:
                vals = vals * np.asarray(f(x))
            b[cell] += (s1 - s0) * np.dot(w_ref, vals)
    return b


def assemble_source_point(space: MixedSpace, source: PointSource) -> np.ndarray:
    """Point source in 2D: the whole intensity goes to the containing cell."""
    b = np.zeros(space.n_pressure_dofs)
    b[locate_cell(space.mesh, source.point)] = source.intensity
    return b


def standard_system(space: MixedSpace, kappa: float, u0: Callable, source,
                    bulk_source: Optional[Callable] = None) -> MixedSystem:
    """Standard mixed method: line/point measure on the right-hand side."""
    A, B = assemble_darcy(space, kappa)
    g = assemble_boundary_term(space, u0, source)
    if isinstance(source, PointSource):
        b = assemble_source_point(space, source)
    else:
        b = assemble_source_line(space, source)
    if bulk_source is not None:
        b = b + assemble_source_regular(space, bulk_source, source)
    return MixedSystem(A, B, g, b)


def removal_system(space: MixedSpace, problem: SplitProblem, subdivide: bool = True) -> MixedSystem:
    """Singularity-removal method: remainder source and remainder boundary data."""
    A, B = assemble_darcy(space, problem.kappa)
    net = problem.network
    fl = problem.params.floor_radius
    g = assemble_boundary_term(space, lambda x: remainder_boundary(x, problem), net, fl)
    b = assemble_source_regular(space, lambda x: remainder_source(x, problem, clamp=True), net,
                                subdivide=subdivide)
    return MixedSystem(A, B, g, b)
