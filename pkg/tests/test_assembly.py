import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logistic_harvest.assembly import (
    Field,
    ProblemParams,
    assemble_operators,
    boundary_power_load,
    interior_power_load,
    jacobian,
    residual,
    weighted_mass,
)
from logistic_harvest.errors import InvalidArgumentError
from logistic_harvest.mesh import build_interval, build_rectangle

MESHES = [build_interval(2.0, 12), build_rectangle(1.5, 1.0, 5, 4)]


@pytest.mark.parametrize("mesh", MESHES, ids=["1d", "2d"])
@pytest.mark.parametrize("rule", ["vertex", "gauss"])
def test_constant_and_linear_consistency(mesh, rule):
    ops = assemble_operators(mesh, rule)
    one = np.ones(mesh.n_nodes)
    assert np.abs(ops.A @ one).max() < 1e-12
    assert one @ (ops.M @ one) == pytest.approx(mesh.volume, rel=1e-12)
    assert one @ (ops.B @ one) == pytest.approx(mesh.boundary_measure, rel=1e-12)
    # a linear function is discretely harmonic: A x vanishes on interior rows
    x = mesh.node_coords[:, 0]
    assert np.abs((ops.A @ x)[mesh.interior_nodes]).max() < 1e-12
    # int |grad x|^2 = |Omega|
    assert x @ (ops.A @ x) == pytest.approx(mesh.volume, rel=1e-12)


@pytest.mark.parametrize("mesh", MESHES, ids=["1d", "2d"])
def test_matrices_symmetric(mesh):
    for rule in ("vertex", "gauss"):
        ops = assemble_operators(mesh, rule)
        for K in (ops.A, ops.M, ops.B):
            assert abs(K - K.T).max() == 0.0


def test_vertex_rule_is_lumped_gauss_rule_is_consistent():
    m = build_interval(1.0, 4)
    h = 0.25
    lumped = assemble_operators(m, "vertex").M.toarray()
    consistent = assemble_operators(m, "gauss").M.toarray()
    np.testing.assert_allclose(lumped, np.diag(lumped.diagonal()), atol=1e-15)
    np.testing.assert_allclose(lumped.diagonal(), [h / 2, h, h, h, h / 2])
    assert consistent[1, 1] == pytest.approx(2 * h / 3)
    assert consistent[1, 2] == pytest.approx(h / 6)
    np.testing.assert_allclose(lumped.sum(axis=1), consistent.sum(axis=1))


def test_boundary_mass_counting_measure_1d():
    m = build_interval(3.0, 6)
    B = assemble_operators(m).B.toarray()
    expected = np.zeros((7, 7))
    expected[0, 0] = expected[6, 6] = 1.0
    np.testing.assert_array_equal(B, expected)


def test_gauss_mass_exact_for_products_2d():
    m = build_rectangle(1.0, 1.0, 4, 4)
    ops = assemble_operators(m, "gauss")
    x, y = m.node_coords.T
    # P1 interpolants of x and y are exact, so int x y = 1/4
    assert x @ (ops.M @ y) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("mesh", MESHES, ids=["1d", "2d"])
@pytest.mark.parametrize("rule", ["vertex", "gauss"])
def test_jacobian_matches_finite_differences(mesh, rule):
    ops = assemble_operators(mesh, rule)
    params = ProblemParams(p=2.5, q=0.5, lam=0.7)
    rng = np.random.default_rng(1)
    u = 0.3 + 0.5 * rng.random(mesh.n_nodes)  # bounded away from u = 0
    d = rng.standard_normal(mesh.n_nodes)
    J = jacobian(u, params, ops)
    h = 1e-6
    fd = (residual(u + h * d, params, ops) - residual(u - h * d, params, ops)) / (2 * h)
    assert np.linalg.norm(J @ d - fd) <= 1e-7 * np.linalg.norm(fd)
    assert abs(J - J.T).max() < 1e-14


def test_residual_zero_at_trivial_solution():
    ops = assemble_operators(MESHES[1])
    params = ProblemParams(2.0, 0.5, 3.0)
    assert np.abs(residual(np.zeros(ops.n), params, ops)).max() == 0.0


def test_residual_weak_form_with_constant_test_function():
    # 1^T r(u) = -int u + int u^p + lam int_dOmega u^q
    ops = assemble_operators(MESHES[0], "gauss")
    params = ProblemParams(2.0, 0.5, 1.3)
    u = np.full(ops.n, 0.49)
    r = residual(u, params, ops)
    expected = (-0.49 + 0.49**2) * ops.mesh.volume + 1.3 * 0.7 * ops.mesh.boundary_measure
    assert r.sum() == pytest.approx(expected, rel=1e-12)


def test_negative_part_is_clipped():
    ops = assemble_operators(MESHES[0])
    u = -np.ones(ops.n)
    assert np.all(interior_power_load(u, 2.0, ops) == 0)
    assert np.all(boundary_power_load(u, 0.5, ops) == 0)


def test_weighted_mass():
    ops = assemble_operators(MESHES[1], "gauss")
    one = np.ones(ops.n)
    np.testing.assert_allclose(weighted_mass(ops, one).toarray(), ops.M.toarray(), atol=1e-15)
    np.testing.assert_allclose(weighted_mass(ops, one, "boundary").toarray(), ops.B.toarray(), atol=1e-15)
    with pytest.raises(InvalidArgumentError):
        weighted_mass(ops, one, "edge")


@pytest.mark.parametrize(
    "kwargs",
    [dict(p=1.0, q=0.5), dict(p=2.0, q=1.0), dict(p=2.0, q=0.0), dict(p=2.0, q=0.5, lam=-1.0),
     dict(p=2.0, q=0.5, eps_clip=0.0)],
)
def test_invalid_params(kwargs):
    with pytest.raises(InvalidArgumentError):
        ProblemParams(**kwargs)


def test_shape_and_finiteness_checks():
    ops = assemble_operators(MESHES[0])
    params = ProblemParams(2.0, 0.5, 1.0)
    with pytest.raises(InvalidArgumentError):
        residual(np.ones(3), params, ops)
    bad = np.ones(ops.n)
    bad[2] = np.nan
    with pytest.raises(InvalidArgumentError):
        residual(bad, params, ops)
    with pytest.raises(InvalidArgumentError):
        Field(ops.mesh, np.ones(3))


def test_field_roundtrip():
    m = MESHES[1]
    f = Field(m, np.arange(m.n_nodes, dtype=float))
    back = Field.from_json(f.to_json())
    np.testing.assert_array_equal(back.values, f.values)
    assert back.mesh.mesh_id == m.mesh_id


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0.0, 2.0), min_size=9, max_size=9),
    st.floats(1.1, 4.0),
    st.floats(0.05, 0.95),
    st.floats(0.0, 5.0),
)
def test_jacobian_symmetric_and_stiffness_semidefinite(vals, p, q, lam):
    ops = assemble_operators(build_interval(1.0, 8))
    u = np.array(vals)
    J = jacobian(u, ProblemParams(p, q, lam), ops)
    assert abs(J - J.T).max() <= 1e-12 * max(1.0, abs(J).max())
    assert u @ (ops.A @ u) >= -1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 3.0), min_size=9, max_size=9), st.floats(0.05, 0.95), st.floats(0.0, 5.0))
def test_harvest_term_nonnegative(vals, q, lam):
    # the boundary term only removes mass: 1^T (r(u) - r_{lam=0}(u)) >= 0
    ops = assemble_operators(build_interval(1.0, 8))
    u = np.array(vals)
    d = residual(u, ProblemParams(2.0, q, lam), ops) - residual(u, ProblemParams(2.0, q, 0.0), ops)
    assert d.sum() >= 0
