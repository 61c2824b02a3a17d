"""Quadrature on reference simplices and their affine images.

The reference simplex has vertices ``0, e_1, ..., e_d``; weights of every rule
sum to its volume ``1/d!``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi

from .errors import ValidationError


@dataclass(frozen=True)
class QuadratureRule:
    dim: int
    points: np.ndarray   # (nq, dim) reference coordinates
    weights: np.ndarray  # (nq,)
    order: int

    @property
    def barycentric(self) -> np.ndarray:
        """Barycentric coordinates ``(nq, dim + 1)``, vertex 0 first."""
        return np.hstack([1.0 - self.points.sum(axis=1, keepdims=True), self.points])

    def __len__(self):
        return len(self.weights)

    def map(self, vertices: np.ndarray):
        """Physical points ``(nc, nq, D)`` and weights ``(nc, nq)`` for simplices
        ``vertices`` of shape ``(nc, dim + 1, D)``. Works for facets embedded in
        higher dimension (``D > dim``) by using the Gram determinant."""
        vertices = np.asarray(vertices, dtype=float)
        pts = np.einsum("qk,ckd->cqd", self.barycentric, vertices)
        measure = simplex_measure(vertices)
        w = measure[:, None] * self.weights[None, :] * factorial(self.dim)
        return pts, w


def simplex_measure(vertices: np.ndarray) -> np.ndarray:
    """Unsigned d-volume of each simplex, ``vertices`` of shape ``(nc, d + 1, D)``."""
    vertices = np.asarray(vertices, dtype=float)
    d = vertices.shape[1] - 1
    J = vertices[:, 1:, :] - vertices[:, :1, :]  # (nc, d, D)
    if J.shape[1] == J.shape[2]:
        det = np.abs(np.linalg.det(J))
    else:
        det = np.sqrt(np.abs(np.linalg.det(np.einsum("cid,cjd->cij", J, J))))
    return det / factorial(d)


def _sym_tri(groups):
    pts, wts = [], []
    for kind, w, a in groups:
        if kind == "s3":
            bary = [(1 / 3, 1 / 3, 1 / 3)]
        else:  # s21: (a, a, 1 - 2a) and permutations
            b = 1.0 - 2.0 * a
            bary = [(a, a, b), (a, b, a), (b, a, a)]
        for l0, l1, l2 in bary:
            pts.append((l1, l2))
            wts.append(w / 2.0)
    return np.array(pts), np.array(wts)


def _sym_tet(groups):
    pts, wts = [], []
    for kind, w, a in groups:
        if kind == "s4":
            bary = [(0.25,) * 4]
        elif kind == "s31":
            b = 1.0 - 3.0 * a
            bary = [tuple(b if i == j else a for i in range(4)) for j in range(4)]
        else:  # s22: (a, a, b, b) permutations
            b = 0.5 - a
            bary = []
            for i in range(4):
                for j in range(i + 1, 4):
                    bary.append(tuple(a if k in (i, j) else b for k in range(4)))
        for lam in bary:
            pts.append(lam[1:])
            wts.append(w / 6.0)
    return np.array(pts), np.array(wts)


# Strang-Fix / Dunavant symmetric triangle rules, weights normalised to 1.
_TRI_RULES = {
    1: [("s3", 1.0, None)],
    2: [("s21", 1 / 3, 1 / 6)],
    4: [("s21", 0.223381589678011, 0.445948490915965),
        ("s21", 0.109951743655322, 0.091576213509771)],
}

# Symmetric tetrahedron rules (all weights positive), normalised to 1.
_TET_RULES = {
    1: [("s4", 1.0, None)],
    2: [("s31", 0.25, 0.1381966011250105)],
    5: [("s31", 0.0734930431163619, 0.0927352503108912),
        ("s31", 0.1126879257180159, 0.3108859192633006),
        ("s22", 0.0425460207770812, 0.0455037041256496)],
}


def simplex_rule(dim: int, order: int) -> QuadratureRule:
    """Smallest built-in symmetric rule exact to at least ``order``."""
    table = {2: _TRI_RULES, 3: _TET_RULES}.get(dim)
    if table is None:
        raise ValidationError(f"no simplex rules for dim={dim}")
    for k in sorted(table):
        if k >= order:
            pts, wts = (_sym_tri if dim == 2 else _sym_tet)(table[k])
            return QuadratureRule(dim, pts, wts, k)
    return collapsed_gauss(dim, (order + 2) // 2)


def _jacobi01(n, alpha):
    """Gauss-Jacobi nodes/weights on [0, 1] for the weight ``(1 - u)^alpha``."""
    x, w = roots_jacobi(n, alpha, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def collapsed_gauss(dim: int, n: int) -> QuadratureRule:
    """Conical-product (Duffy) Gauss-Jacobi rule with ``n`` points per direction,
    exact for total degree ``2n - 1``. Used where an independent high-order
    reference is wanted."""
    if dim == 1:
        u, w = _jacobi01(n, 0.0)
        return QuadratureRule(1, u[:, None], w, 2 * n - 1)
    if dim == 2:
        u, wu = _jacobi01(n, 1.0)
        v, wv = _jacobi01(n, 0.0)
        U, V = np.meshgrid(u, v, indexing="ij")
        W = np.outer(wu, wv)
        pts = np.stack([U, V * (1 - U)], axis=-1).reshape(-1, 2)
        return QuadratureRule(2, pts, W.ravel(), 2 * n - 1)
    if dim == 3:
        u, wu = _jacobi01(n, 2.0)
        v, wv = _jacobi01(n, 1.0)
        t, wt = _jacobi01(n, 0.0)
        U, V, T = np.meshgrid(u, v, t, indexing="ij")
        W = wu[:, None, None] * wv[None, :, None] * wt[None, None, :]
        pts = np.stack([U, V * (1 - U), T * (1 - U) * (1 - V)], axis=-1).reshape(-1, 3)
        return QuadratureRule(3, pts, W.ravel(), 2 * n - 1)
    raise ValidationError(f"unsupported dim {dim}")


def gauss_line(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def facet_rule(dim: int, order: int) -> QuadratureRule:
    """Rule on a facet of a ``dim``-simplex (an edge for 2D, a triangle for 3D)."""
    if dim == 2:
        n = max(1, (order + 2) // 2)
        x, w = gauss_line(n)
        return QuadratureRule(1, x[:, None], w, 2 * n - 1)
    return simplex_rule(2, order)


def _red_children(dim: int) -> list[np.ndarray]:
    """Red refinement of the reference simplex, as child vertex arrays."""
    V = np.vstack([np.zeros(dim), np.eye(dim)])
    m = {(i, j): (V[i] + V[j]) / 2 for i in range(dim + 1) for j in range(i + 1, dim + 1)}
    if dim == 2:
        return [np.array(c) for c in (
            [V[0], m[0, 1], m[0, 2]], [m[0, 1], V[1], m[1, 2]],
            [m[0, 2], m[1, 2], V[2]], [m[0, 1], m[1, 2], m[0, 2]])]
    corners = [
        [V[0], m[0, 1], m[0, 2], m[0, 3]], [m[0, 1], V[1], m[1, 2], m[1, 3]],
        [m[0, 2], m[1, 2], V[2], m[2, 3]], [m[0, 3], m[1, 3], m[2, 3], V[3]]]
    # interior octahedron split along the m02-m13 diagonal
    ring = [m[0, 1], m[0, 3], m[2, 3], m[1, 2]]
    octa = [[m[0, 2], m[1, 3], ring[k], ring[(k + 1) % 4]] for k in range(4)]
    return [np.array(c) for c in corners + octa]


@lru_cache(maxsize=None)
def subdivided_rule(dim: int, order: int, levels: int) -> QuadratureRule:
    """Composite rule: the base rule applied on ``levels`` rounds of red
    refinement of the reference simplex (``(2^dim)^levels`` children)."""
    base = simplex_rule(dim, order)
    cells = [np.vstack([np.zeros(dim), np.eye(dim)])]
    children = _red_children(dim)
    for _ in range(levels):
        new = []
        for c in cells:
            J = (c[1:] - c[0]).T
            for ch in children:
                new.append(c[0] + ch @ J.T)
        cells = new
    cells = np.array(cells)
    pts, w = base.map(cells)
    return QuadratureRule(dim, pts.reshape(-1, dim), w.ravel(), base.order)
