import numpy as np
import pytest

from logistic_harvest.errors import InvalidArgumentError
from logistic_harvest.mesh import Mesh, build_interval, build_mesh, build_rectangle, get_rule


def test_interval_geometry():
    m = build_interval(2 * np.pi, 16)
    assert m.n_nodes == 17
    assert m.volume == pytest.approx(2 * np.pi)
    assert m.boundary_measure == 2.0  # counting measure on the two endpoints
    np.testing.assert_array_equal(m.boundary_nodes, [0, 16])
    assert len(m.interior_nodes) == 15
    np.testing.assert_array_equal(m.facet_normals[:, 0], [-1.0, 1.0])
    assert m.mesh_id == "1d-6.28319-16"


def test_rectangle_geometry():
    m = build_rectangle(np.pi, 2.0, 4, 3)
    assert m.n_nodes == 20
    assert len(m.elements) == 24
    assert m.volume == pytest.approx(2 * np.pi)
    assert m.boundary_measure == pytest.approx(2 * (np.pi + 2.0))
    assert len(m.boundary_nodes) == 2 * (4 + 3)
    # outward normals: facet midpoints moved along the normal leave the box
    X = m.node_coords
    mid = 0.5 * (X[m.boundary_facets[:, 0]] + X[m.boundary_facets[:, 1]])
    out = mid + 1e-3 * m.facet_normals
    inside = (out[:, 0] > 0) & (out[:, 0] < np.pi) & (out[:, 1] > 0) & (out[:, 1] < 2.0)
    assert not inside.any()


def test_rectangle_orientation_positive():
    m = build_rectangle(1.0, 1.0, 3, 3)
    X = m.node_coords[m.elements]
    e1, e2 = X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    assert np.all(det > 0)
    np.testing.assert_allclose(0.5 * det, m.element_measures)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.inf, np.nan])
def test_invalid_length(bad):
    with pytest.raises(InvalidArgumentError):
        build_interval(bad, 8)


@pytest.mark.parametrize("n", [0, 1, 2.5])
def test_invalid_count(n):
    with pytest.raises(InvalidArgumentError):
        build_interval(1.0, n)
    with pytest.raises(InvalidArgumentError):
        build_rectangle(1.0, 1.0, n, 4)


def test_build_mesh_dispatch():
    assert build_mesh((1.0,), (4,)).dim == 1
    assert build_mesh((1.0, 2.0), (4, 4)).dim == 2
    with pytest.raises(InvalidArgumentError):
        build_mesh((1.0, 1.0, 1.0), (2, 2, 2))


def test_refined_and_roundtrip():
    m = build_rectangle(1.0, 2.0, 3, 5)
    r = m.refined()
    assert r.shape == (6, 10)
    back = Mesh.from_json(m.to_json())
    assert back.mesh_id == m.mesh_id
    np.testing.assert_array_equal(back.elements, m.elements)
    np.testing.assert_allclose(back.node_coords, m.node_coords)


@pytest.mark.parametrize("rule", ["vertex", "gauss"])
@pytest.mark.parametrize("nv", [2, 3])
def test_rule_weights_partition_unity(rule, nv):
    r = get_rule(rule, nv)
    assert r.weights.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(r.bary.sum(axis=1), 1.0)


def test_unknown_rule():
    with pytest.raises(InvalidArgumentError):
        get_rule("simpson", 2)


def test_quadrature_integrates_quadratics_2d():
    m = build_rectangle(2.0, 1.0, 4, 4)
    pts, w = m.element_quadrature("gauss")
    f = pts[..., 0] ** 2 + pts[..., 0] * pts[..., 1]
    assert (w * f).sum() == pytest.approx(8.0 / 3.0 + 1.0, rel=1e-12)
