"""Structured simplicial meshes of axis-aligned boxes.

Local facet ``i`` of a cell is the facet opposite its local vertex ``i``.
Every facet has a global unit normal pointing from its lower-indexed incident
cell into the higher-indexed one (outward on the boundary); ``cell_signs``
records whether that normal is outward (+1) or inward (-1) for each cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations

import numpy as np

from .errors import LocationError, ValidationError
from .network import Segment
from .quadrature import simplex_measure


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    dim: int
    vertices: np.ndarray       # (nv, d)
    cells: np.ndarray          # (nc, d + 1), positively oriented
    facets: np.ndarray         # (nf, d), vertex indices sorted ascending
    cell_facets: np.ndarray    # (nc, d + 1)
    cell_signs: np.ndarray     # (nc, d + 1), +1 / -1
    facet_cells: np.ndarray    # (nf, 2), second entry -1 on the boundary
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @cached_property
    def boundary_facets(self) -> np.ndarray:
        return np.flatnonzero(self.facet_cells[:, 1] < 0)

    @cached_property
    def cell_vertices(self) -> np.ndarray:
        """Coordinates ``(nc, d + 1, d)``."""
        return self.vertices[self.cells]

    @cached_property
    def volumes(self) -> np.ndarray:
        return simplex_measure(self.cell_vertices)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.cell_vertices.mean(axis=1)

    @cached_property
    def barycentric_gradients(self) -> np.ndarray:
        """``(nc, d + 1, d)``: gradient of each barycentric coordinate."""
        P = self.cell_vertices
        J = np.transpose(P[:, 1:, :] - P[:, :1, :], (0, 2, 1))  # columns are edge vectors
        Jinv = np.linalg.inv(J)                                  # rows are grad lambda_1..d
        g0 = -Jinv.sum(axis=1, keepdims=True)
        return np.concatenate([g0, Jinv], axis=1)

    @cached_property
    def diameters(self) -> np.ndarray:
        P = self.cell_vertices
        diff = P[:, :, None, :] - P[:, None, :, :]
        return np.sqrt((diff**2).sum(-1)).reshape(len(P), -1).max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @cached_property
    def facet_measures(self) -> np.ndarray:
        return simplex_measure(self.vertices[self.facets])

    @cached_property
    def facet_normals(self) -> np.ndarray:
        """Global unit normals ``(nf, d)``: outward for the lower-indexed cell."""
        c = self.facet_cells[:, 0]
        local = np.argmax(self.cell_facets[c] == np.arange(self.n_facets)[:, None], axis=1)
        g = self.barycentric_gradients[c, local]
        return -g / np.linalg.norm(g, axis=1, keepdims=True)

    def cell_outward_normals(self) -> np.ndarray:
        """Outward unit normals ``(nc, d + 1, d)`` per local facet."""
        g = self.barycentric_gradients
        return -g / np.linalg.norm(g, axis=2, keepdims=True)

    def barycentric(self, x, cells=None) -> np.ndarray:
        """Barycentric coordinates of point ``x`` in ``cells`` (default all)."""
        idx = np.arange(self.n_cells) if cells is None else np.asarray(cells)
        P0 = self.cell_vertices[idx, 0]
        G = self.barycentric_gradients[idx]
        lam = np.einsum("ckd,cd->ck", G, np.asarray(x, dtype=float) - P0)
        lam[:, 0] += 1.0
        return lam


def _kuhn_cube_tets(dim):
    """Local vertex paths of the Kuhn split of the unit cube (2 or 6 simplices)."""
    out = []
    for perm in permutations(range(dim)):
        v = np.zeros(dim, dtype=int)
        path = [v.copy()]
        for axis in perm:
            v[axis] += 1
            path.append(v.copy())
        out.append(path)
    return np.array(out)  # (d!, d + 1, d) of 0/1 offsets


def build_box_mesh(dim: int, lower, upper, n: int) -> SimplicialMesh:
    """Conforming mesh of the box ``[lower, upper]`` with ``n`` subdivisions per axis.

    2D squares are cut along the ``(0,0)-(1,1)`` diagonal; 3D cubes are cut into
    the 6 Kuhn tetrahedra sharing the main diagonal, which matches across faces.
    """
    if dim not in (2, 3):
        raise ValidationError(f"dim must be 2 or 3, got {dim}")
    if int(n) != n or n < 1:
        raise ValidationError(f"need n >= 1 subdivisions, got {n}")
    n = int(n)
    lower = np.asarray(lower, dtype=float).reshape(dim)
    upper = np.asarray(upper, dtype=float).reshape(dim)
    if not np.all(upper > lower):
        raise ValidationError("inverted or empty box")

    ticks = [np.linspace(lower[k], upper[k], n + 1) for k in range(dim)]
    grid = np.stack(np.meshgrid(*ticks, indexing="ij"), axis=-1).reshape(-1, dim)
    strides = np.array([(n + 1) ** (dim - 1 - k) for k in range(dim)])

    corners = np.stack(np.meshgrid(*[np.arange(n)] * dim, indexing="ij"), axis=-1).reshape(-1, dim)
    paths = _kuhn_cube_tets(dim)
    # cells ordered cube by cube, then by permutation
    cells = ((corners[:, None, None, :] + paths[None]) @ strides).reshape(-1, dim + 1)

    P = grid[cells]
    det = np.linalg.det(P[:, 1:, :] - P[:, :1, :])
    flip = det < 0
    cells[flip, -2], cells[flip, -1] = cells[flip, -1].copy(), cells[flip, -2].copy()

    return _with_facets(dim, grid, cells, lower, upper)


def _with_facets(dim, vertices, cells, lower, upper) -> SimplicialMesh:
    nc = len(cells)
    local = np.array([[j for j in range(dim + 1) if j != i] for i in range(dim + 1)])
    faces = np.sort(cells[:, local], axis=2).reshape(-1, dim)  # (nc*(d+1), d)
    facets, inverse = np.unique(faces, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    cell_facets = inverse.reshape(nc, dim + 1)

    owner = np.repeat(np.arange(nc), dim + 1)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=len(facets))
    if np.any(counts > 2):
        raise ValidationError("non-manifold mesh: a facet has more than two cells")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    facet_cells = np.full((len(facets), 2), -1, dtype=int)
    facet_cells[:, 0] = owner[order[starts]]
    two = counts == 2
    facet_cells[two, 1] = owner[order[starts[two] + 1]]

    first = facet_cells[cell_facets, 0] == np.arange(nc)[:, None]
    cell_signs = np.where(first, 1, -1)
    return SimplicialMesh(dim, vertices, cells, facets, cell_facets, cell_signs,
                          facet_cells, lower, upper)


def locate_cell(mesh: SimplicialMesh, x, tol: float = 1e-12) -> int:
    """Lowest-index cell whose closed simplex contains ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (mesh.dim,):
        raise LocationError(f"expected a {mesh.dim}D point, got shape {x.shape}")
    if np.any(x < mesh.lower - tol) or np.any(x > mesh.upper + tol):
        raise LocationError(f"point {x.tolist()} lies outside the domain")
    lam = mesh.barycentric(x)
    inside = np.flatnonzero(np.all(lam >= -tol, axis=1))
    if inside.size == 0:
        raise LocationError(f"no cell contains {x.tolist()}")
    return int(inside[0])


def intersect_segment_cells(mesh: SimplicialMesh, seg: Segment, tol: float = 1e-12):
    """Split a segment into per-cell pieces ``(cell, s0, s1)`` in arc length.

    Each cell clips the parameter range ``[0, L]`` against its facet planes. The
    union of clipped intervals is then cut at every breakpoint and each piece
    goes to the lowest-index cell containing it, so pieces lying on shared
    facets are counted once.
    """
    if seg.dim != mesh.dim:
        raise ValidationError("segment and mesh dimensions differ")
    L = seg.length
    P0 = mesh.cell_vertices[:, 0]
    G = mesh.barycentric_gradients
    c0 = np.einsum("ckd,cd->ck", G, seg.a - P0)
    c0[:, 0] += 1.0
    c1 = G @ seg.tangent  # (nc, d + 1)

    lo = np.zeros(mesh.n_cells)
    hi = np.full(mesh.n_cells, L)
    eps = tol * max(1.0, L)
    with np.errstate(divide="ignore", invalid="ignore"):
        root = -c0 / c1
    pos = c1 > tol
    neg = c1 < -tol
    flat = ~(pos | neg)
    lo = np.maximum(lo, np.where(pos, root, -np.inf).max(axis=1))
    hi = np.minimum(hi, np.where(neg, root, np.inf).min(axis=1))
    dead = np.any(flat & (c0 < -tol), axis=1)
    cand = np.flatnonzero(~dead & (hi > lo - eps))
    if cand.size == 0:
        return []
    lo, hi = lo[cand], hi[cand]

    bps = np.unique(np.clip(np.concatenate([[0.0, L], lo, hi]), 0.0, L))
    keep = np.concatenate([[True], np.diff(bps) > eps])
    bps = bps[keep]
    bps[-1] = L
    pieces = []
    for s0, s1 in zip(bps[:-1], bps[1:]):
        mid = 0.5 * (s0 + s1)
        covering = cand[(lo - eps <= mid) & (hi + eps >= mid)]
        if covering.size == 0:
            continue
        cell = int(covering.min())
        if pieces and pieces[-1][0] == cell and abs(pieces[-1][2] - s0) <= eps:
            pieces[-1] = (cell, pieces[-1][1], float(s1))
        else:
            pieces.append((cell, float(s0), float(s1)))
    return pieces
