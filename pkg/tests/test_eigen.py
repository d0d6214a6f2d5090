import numpy as np
import pytest
import scipy.sparse as sp

from logistic_harvest.assembly import ProblemParams, assemble_operators
from logistic_harvest.eigen import (
    count_below,
    dirichlet_gamma1,
    dirichlet_principal,
    linearized_gamma1,
    rayleigh_quotient,
    solve_sym_gen_smallest,
)
from logistic_harvest.errors import InvalidArgumentError
from logistic_harvest.mesh import build_interval, build_rectangle
from oracles import (
    dirichlet_eigenvalue_interval,
    dirichlet_eigenvalue_rectangle,
    generalized_eigenvalues,
    lumped_p1_eigenvalue_interval,
)


def random_pencil(seed, n=20):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    Y = rng.standard_normal((n, n))
    return X + X.T, Y @ Y.T + n * np.eye(n)


@pytest.mark.parametrize("seed", range(5))
def test_smallest_matches_dense_oracle(seed):
    K, M = random_pencil(seed)
    theta, v = solve_sym_gen_smallest(sp.csr_matrix(K), sp.csr_matrix(M))
    ref = generalized_eigenvalues(K, M)[0]
    assert abs(theta - ref) <= 1e-8 * max(1.0, abs(ref))
    assert v @ M @ v == pytest.approx(1.0)
    assert np.linalg.norm(K @ v - theta * M @ v) < 1e-7


@pytest.mark.parametrize("seed", range(3))
def test_inertia_count_matches_dense(seed):
    K, M = random_pencil(seed)
    mu = generalized_eigenvalues(K, M)
    for sigma in (mu[0] - 1.0, 0.5 * (mu[2] + mu[3]), mu[-1] + 1.0):
        assert count_below(sp.csr_matrix(K), sp.csr_matrix(M), sigma) == int(np.sum(mu < sigma))


def test_clustered_spectrum():
    # nearly degenerate lowest pair: the answer must lie in the cluster, the rest is excluded
    d = np.array([1.0, 1.0 + 1e-9, 2.0, 5.0, 7.0])
    theta, v = solve_sym_gen_smallest(sp.diags(d), sp.identity(5))
    assert 1.0 - 1e-12 <= theta <= 1.0 + 1e-9 + 1e-12
    assert np.abs(v[2:]).max() < 1e-6


def test_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        solve_sym_gen_smallest(sp.identity(3), sp.identity(4))


def test_dirichlet_interval_exact_discrete_value():
    m = build_interval(np.pi, 64)
    pair = dirichlet_principal(m, assemble_operators(m))
    assert pair.value == pytest.approx(lumped_p1_eigenvalue_interval(np.pi, 64), rel=1e-10)
    phi = pair.vector
    assert phi[0] == 0 and phi[-1] == 0
    assert np.all(phi[1:-1] > 0)
    x = m.node_coords[:, 0]
    # discrete eigenvector of the uniform lumped pencil is exactly sin(x)
    np.testing.assert_allclose(phi / phi.max(), np.sin(x) / np.sin(x).max(), atol=1e-8)


def test_dirichlet_normalization_and_field():
    m = build_interval(2.0, 40)
    ops = assemble_operators(m)
    pair = dirichlet_principal(m, ops)
    assert pair.vector @ (ops.M @ pair.vector) == pytest.approx(1.0)
    assert pair.field.mesh is m
    assert pair.problem_tag == "dirichlet"


@pytest.mark.parametrize("rule", ["vertex", "gauss"])
def test_dirichlet_second_order(rule):
    errs = []
    for n in (32, 64, 128):
        m = build_interval(2 * np.pi, n)
        errs.append(abs(dirichlet_principal(m, assemble_operators(m, rule)).value - 0.25))
    assert 3.5 <= errs[0] / errs[1] <= 4.5
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_dirichlet_rectangle():
    m = build_rectangle(np.pi, np.pi, 32, 32)
    pair = dirichlet_principal(m, assemble_operators(m))
    assert pair.value == pytest.approx(dirichlet_eigenvalue_rectangle(np.pi, np.pi), rel=5e-3)


def test_linearized_at_zero_matches_dense():
    m = build_interval(np.pi, 24)
    ops = assemble_operators(m)
    params = ProblemParams(2.0, 0.5, 0.0)
    pair = linearized_gamma1(np.zeros(m.n_nodes), params, ops)
    ref = generalized_eigenvalues((ops.A - ops.M).toarray(), (ops.M + ops.B).toarray())[0]
    assert pair.value == pytest.approx(ref, abs=1e-10)
    assert pair.value < 0  # beta_Omega = 1 - O(h^2) and the boundary weight lowers it further
    assert not pair.flagged


def test_linearized_flags_clamped_boundary():
    m = build_interval(np.pi, 16)
    ops = assemble_operators(m)
    u = np.sin(m.node_coords[:, 0])  # vanishes on the boundary
    pair = linearized_gamma1(u, ProblemParams(2.0, 0.5, 1.0), ops)
    assert pair.flagged
    assert np.isfinite(pair.value)


def test_dirichlet_gamma1_at_zero_is_beta_minus_one():
    m = build_interval(2 * np.pi, 32)
    ops = assemble_operators(m)
    beta = dirichlet_principal(m, ops).value
    assert dirichlet_gamma1(np.zeros(m.n_nodes), 2.0, ops).value == pytest.approx(beta - 1.0, rel=1e-9)


def test_rayleigh_quotient_bounds_smallest():
    K, M = random_pencil(7)
    mu0 = generalized_eigenvalues(K, M)[0]
    rng = np.random.default_rng(3)
    for _ in range(10):
        assert rayleigh_quotient(K, M, rng.standard_normal(20)) >= mu0 - 1e-12


def test_reference_formula_sanity():
    assert dirichlet_eigenvalue_interval(2 * np.pi) == pytest.approx(0.25)
