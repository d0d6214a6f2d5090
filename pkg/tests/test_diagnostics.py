import numpy as np
import pytest

from logistic_harvest.assembly import ProblemParams, assemble_operators
from logistic_harvest.continuation import continue_natural, start_point
from logistic_harvest.diagnostics import (
    boundary_flux,
    decompose,
    energy,
    energy_identity_residual,
    energy_inequality_report,
    h1_norm,
    lambda0_rescaled_probe,
    pq_regime,
    profile_distance,
    rescaled_residual,
)
from logistic_harvest.eigen import dirichlet_principal
from logistic_harvest.errors import InvalidArgumentError
from logistic_harvest.mesh import build_interval
from logistic_harvest.steady import newton_solve


@pytest.fixture(scope="module")
def critical():
    m = build_interval(np.pi, 128)
    ops = assemble_operators(m)
    return m, ops, dirichlet_principal(m, ops)


def solution(ops, params):
    b = continue_natural(start_point(params, ops), params.lam, 0.05, params, ops, tag=False)
    assert b.points[-1].lam == params.lam
    return b.points[-1].u


def test_energy_of_constant(critical):
    m, ops, _ = critical
    assert energy(np.ones(m.n_nodes), ops) == pytest.approx(-np.pi)
    assert h1_norm(np.ones(m.n_nodes), ops) == pytest.approx(np.sqrt(np.pi))


def test_decomposition_is_h1_orthogonal(critical):
    m, ops, phi = critical
    u = 0.3 + np.sin(m.node_coords[:, 0]) ** 2
    dec = decompose(u, phi, ops)
    v = dec.v.values
    assert abs(v @ ((ops.A + ops.M) @ phi.vector)) < 1e-12
    np.testing.assert_allclose(dec.s * phi.vector + v, u)
    assert dec.ratios["v_over_u"] <= 1.0
    clean = decompose(2.0 * phi.vector, phi, ops)
    assert clean.s == pytest.approx(2.0) and clean.v_norm < 1e-12


def test_boundary_flux_of_sine(critical):
    # phi = c sin x on (0, pi): -d phi/d nu = c at both ends, so int (-d phi/d nu) 1 = 2c
    m, ops, phi = critical
    c = phi.vector.max()
    g = boundary_flux(phi, ops)
    assert np.all(g[m.interior_nodes] == 0)
    assert -g.sum() == pytest.approx(2 * c, rel=1e-3)


def test_energy_identity_at_solution():
    m = build_interval(2 * np.pi, 128)
    ops = assemble_operators(m)
    params = ProblemParams(2.0, 0.5, 2.0)
    u = newton_solve(np.full(m.n_nodes, 0.9), params, ops).u
    assert energy_identity_residual(u, params, ops) < 1e-9
    assert energy(u, ops) < 0
    assert energy_identity_residual(np.zeros(m.n_nodes), params, ops) == 0.0
    assert energy_identity_residual(np.full(m.n_nodes, 0.5), params, ops) > 1e-3


def test_inequality_report_structure_and_lhs(critical):
    m, ops, phi = critical
    params = ProblemParams(2.0, 0.6, 2.0)
    u = solution(ops, params)
    rep = energy_inequality_report(u, params, phi, ops)
    assert rep["quantity"] == "I" and rep["regime"] == "pq>1" and rep["mesh_id"] == m.mesh_id
    assert rep["I_or_J"] == pytest.approx(0.5 * 2.0 * rep["boundary_term"] - 2 * rep["s"] * rep["flux_term"])
    # the dropped terms are nonnegative at a solution, so lhs <= 0 up to the beta_h - 1 defect
    assert rep["lhs"] <= 1e-3 * rep["s"] ** 2
    assert isinstance(rep["satisfied"], bool)
    J = energy_inequality_report(u, params, phi, ops, rescaled=True)
    assert J["quantity"] == "J"


def test_inequality_report_v_zero(critical):
    m, ops, phi = critical
    params = ProblemParams(2.0, 0.4, 1.0)
    rep = energy_inequality_report(0.1 * phi.vector, params, phi, ops)
    assert abs(rep["boundary_term"]) < 1e-20 and rep["I_or_J"] == pytest.approx(0.0, abs=1e-12)
    assert rep["satisfied"] and rep["regime"] == "pq<1"
    with pytest.raises(InvalidArgumentError):
        energy_inequality_report(phi.vector, params.with_lambda(0.0), phi, ops, rescaled=True)


def test_rescaled_residual_consistent(critical):
    m, ops, _ = critical
    params = ProblemParams(2.0, 0.6, 2.0)
    u = solution(ops, params)
    assert rescaled_residual(u, params, ops) < 1e-10
    with pytest.raises(InvalidArgumentError):
        rescaled_residual(u, params.with_lambda(0.0), ops)


def test_lambda0_probe_finds_no_positive_solution(critical):
    m, ops, _ = critical
    rep = lambda0_rescaled_probe(m, ops, 0.5)
    outcomes = {r.start: r.outcome for r in rep.runs}
    assert not rep.positive_found
    assert outcomes["zero"] == "trivial_start"
    assert outcomes["constant_0.5"] in ("collapsed", "diverged", "not_converged")
    assert len(rep.to_json()) == 3
    with pytest.raises(InvalidArgumentError):
        lambda0_rescaled_probe(m, ops, 1.0)


def test_profile_distance(critical):
    m, ops, phi = critical
    d = profile_distance(3.0 * phi.vector, phi.vector, ops)
    assert d["angle"] < 1e-12
    assert d["h1_dist"] == pytest.approx(2.0 * h1_norm(phi.vector, ops))
    other = np.sin(2 * m.node_coords[:, 0])
    assert profile_distance(other, phi.vector, ops)["angle"] == pytest.approx(np.pi / 2, abs=1e-6)
    with pytest.raises(InvalidArgumentError):
        profile_distance(np.zeros(m.n_nodes), phi.vector, ops)


def test_mesh_mismatch_rejected(critical):
    _, _, phi = critical
    m2 = build_interval(np.pi, 64)
    with pytest.raises(InvalidArgumentError):
        decompose(np.ones(m2.n_nodes), phi, assemble_operators(m2))


@pytest.mark.parametrize("p,q,expected", [(2.0, 0.6, "pq>1"), (2.0, 0.4, "pq<1"), (2.0, 0.5, "pq=1")])
def test_pq_regime(p, q, expected):
    assert pq_regime(ProblemParams(p, q)) == expected
