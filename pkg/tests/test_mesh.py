import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linesource.errors import LocationError, ValidationError
from linesource.mesh import build_box_mesh, intersect_segment_cells, locate_cell
from linesource.network import Segment


def unit(dim, n):
    return build_box_mesh(dim, np.zeros(dim), np.ones(dim), n)


def test_counts_2d_single_square():
    m = unit(2, 1)
    assert (m.n_cells, m.n_facets, len(m.boundary_facets)) == (2, 5, 4)


def test_counts_3d_single_cube():
    m = unit(3, 1)
    assert (m.n_cells, m.n_facets, len(m.boundary_facets)) == (6, 18, 12)
    # brute force: distinct sorted vertex triples over all tets
    faces = {tuple(sorted(c[[j for j in range(4) if j != i]])) for c in m.cells for i in range(4)}
    assert len(faces) == 18


def test_volume_3d_two_subdivisions():
    m = unit(3, 2)
    assert m.n_cells == 48
    assert m.volumes.sum() == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("dim, n", [(2, 1), (2, 3), (3, 1), (3, 3)])
def test_mesh_invariants(dim, n):
    m = build_box_mesh(dim, -np.ones(dim), np.arange(2, 2 + dim), n)
    assert np.all(m.volumes > 0)
    P = m.cell_vertices
    assert np.all(np.linalg.det(P[:, 1:] - P[:, :1]) > 0)
    assert m.volumes.sum() == pytest.approx(np.prod(np.arange(2, 2 + dim) + 1.0), rel=1e-12)
    counts = np.bincount(m.cell_facets.ravel(), minlength=m.n_facets)
    interior = m.facet_cells[:, 1] >= 0
    assert np.all(counts[interior] == 2) and np.all(counts[~interior] == 1)
    # opposite signs on interior facets
    s = np.zeros(m.n_facets)
    np.add.at(s, m.cell_facets.ravel(), m.cell_signs.ravel())
    assert np.all(s[interior] == 0) and np.all(s[~interior] == 1)


def test_euler_characteristic_2d():
    for n in (1, 2, 5):
        m = unit(2, n)
        assert m.n_cells - m.n_facets + len(m.vertices) == 1


def test_refinement_halves_h():
    for dim in (2, 3):
        for n in (1, 2, 4):
            assert unit(dim, 2 * n).h == unit(dim, n).h / 2


def test_boundary_normals_point_outward():
    m = unit(3, 2)
    bf = m.boundary_facets
    centre = m.vertices[m.facets[bf]].mean(axis=1)
    assert np.all(np.einsum("fd,fd->f", m.facet_normals[bf], centre - 0.5) > 0)


def test_interior_normals_point_to_higher_cell():
    m = unit(3, 2)
    inner = np.flatnonzero(m.facet_cells[:, 1] >= 0)
    lo, hi = m.facet_cells[inner, 0], m.facet_cells[inner, 1]
    assert np.all(lo < hi)
    assert np.all(np.einsum("fd,fd->f", m.facet_normals[inner], m.centroids[hi] - m.centroids[lo]) > 0)


@pytest.mark.parametrize("bad", [dict(n=0), dict(n=1.5), dict(upper=[0, 1]), dict(dim=4)])
def test_invalid_boxes(bad):
    args = dict(dim=2, lower=[0, 0], upper=[1, 1], n=2)
    args.update(bad)
    with pytest.raises(ValidationError):
        build_box_mesh(args["dim"], args["lower"], args["upper"], args["n"])


def test_locate_lower_right_triangle():
    m = unit(2, 1)
    cell = locate_cell(m, [0.9, 0.1])
    lam = m.barycentric([0.9, 0.1])
    brute = [k for k in range(m.n_cells) if np.all(lam[k] >= 0)]
    assert brute == [cell]
    assert m.centroids[cell][0] > m.centroids[cell][1]


def test_locate_tie_takes_lowest_index():
    m = unit(2, 1)
    assert locate_cell(m, [0.5, 0.5]) == 0
    m3 = unit(3, 2)
    assert locate_cell(m3, [0.5, 0.5, 0.5]) == min(
        k for k in range(m3.n_cells) if np.all(m3.barycentric([0.5, 0.5, 0.5])[k] >= -1e-12))


def test_locate_outside():
    with pytest.raises(LocationError):
        locate_cell(unit(2, 1), [2.0, 2.0])


def _brute_force_lengths(m, seg, samples=10_000):
    """Midpoint sampling classifier: lowest-index cell containing each sample."""
    s = (np.arange(samples) + 0.5) / samples * seg.length
    pts = seg.point_at(s)
    owner = np.array([locate_cell(m, p) for p in pts])
    return np.bincount(owner, minlength=m.n_cells) * seg.length / samples


def test_centerline_pieces_sum_to_length():
    m = unit(3, 2)
    seg = Segment([0.5, 0.5, 0.0], [0.5, 0.5, 1.0])
    pieces = intersect_segment_cells(m, seg)
    assert sum(s1 - s0 for _, s0, s1 in pieces) == pytest.approx(1.0, abs=1e-10)


def test_segment_inside_one_cell():
    m = unit(3, 1)
    c = m.centroids[3]
    seg = Segment(c - 0.01, c + 0.01)
    pieces = intersect_segment_cells(m, seg)
    assert len(pieces) == 1
    cell, s0, s1 = pieces[0]
    assert cell == 3 and s0 == 0.0 and s1 == pytest.approx(seg.length, rel=1e-15)


@pytest.mark.parametrize("a, b", [([0.5, 0.5, 0.0], [0.5, 0.5, 1.0]),   # along shared facets
                                  ([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]),   # main diagonal, shared edges
                                  ([0.1, 0.5, 0.5], [0.9, 0.5, 0.5]),
                                  ([0.13, 0.27, 0.91], [0.77, 0.61, 0.05])])
def test_pieces_match_sampling_classifier(a, b):
    m = unit(3, 2)
    seg = Segment(a, b)
    lengths = np.zeros(m.n_cells)
    for cell, s0, s1 in intersect_segment_cells(m, seg):
        lengths[cell] += s1 - s0
    brute = _brute_force_lengths(m, seg)
    assert lengths.sum() == pytest.approx(seg.length, rel=1e-10)
    assert np.allclose(lengths, brute, atol=3 * seg.length / 10_000)


@settings(max_examples=60, deadline=None)
@given(pts=st.lists(st.floats(0, 1), min_size=6, max_size=6), n=st.integers(1, 4))
def test_pieces_partition_random_segments(pts, n):
    a, b = np.array(pts[:3]), np.array(pts[3:])
    if np.linalg.norm(b - a) < 1e-6:
        return
    seg = Segment(a, b)
    pieces = intersect_segment_cells(unit(3, n), seg)
    assert sum(s1 - s0 for _, s0, s1 in pieces) == pytest.approx(seg.length, rel=1e-10, abs=1e-12)
    ends = [(s0, s1) for _, s0, s1 in pieces]
    assert all(e0[1] <= e1[0] + 1e-12 for e0, e1 in zip(ends, ends[1:]))
