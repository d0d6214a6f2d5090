"""Discrete operators, residual and Jacobian of the weak problem

    int_Omega (grad u . grad v - u v + u^p v) + lam int_dOmega u^q v = 0.

Every zero-order integral is evaluated with one quadrature rule, chosen
per :class:`OperatorSet`. Writing ``P`` for the sparse map from nodal
values to quadrature-point values and ``w`` for the quadrature weights,

    M = P^T diag(w) P,        load(f) = P^T (w * f(P u)),

and the same on the boundary. With the default ``"vertex"`` rule the
quadrature points are the nodes, so ``M`` is the lumped mass and the
nonlinear terms are nodal powers. The Jacobian uses the same rule, so it
is both symmetric and the exact derivative of the residual (up to the
``eps_clip`` floor on the singular boundary weight).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError
from .mesh import Mesh, get_rule


@dataclass(frozen=True)
class ProblemParams:
    p: float
    q: float
    lam: float = 0.0
    eps_clip: float = 1e-12

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p > 1):
            raise InvalidArgumentError(f"need p > 1, got p={self.p}")
        if not (0 < self.q < 1):
            raise InvalidArgumentError(f"need 0 < q < 1, got q={self.q}")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise InvalidArgumentError(f"need lambda >= 0, got {self.lam}")
        if not self.eps_clip > 0:
            raise InvalidArgumentError(f"need eps_clip > 0, got {self.eps_clip}")

    def with_lambda(self, lam: float) -> "ProblemParams":
        return dataclasses.replace(self, lam=float(lam))

    @property
    def pq(self) -> float:
        return self.p * self.q


@dataclass(frozen=True)
class Field:
    """Nodal values of a P1 function on ``mesh``."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mesh.n_nodes,):
            raise InvalidArgumentError(
                f"field has {values.shape} values, mesh has {self.mesh.n_nodes} nodes"
            )
        object.__setattr__(self, "values", values)

    def to_json(self, include_mesh: bool = True) -> dict[str, Any]:
        out: dict[str, Any] = {"mesh_id": self.mesh.mesh_id, "values": self.values.tolist()}
        if include_mesh:
            out["mesh"] = self.mesh.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any], mesh: Mesh | None = None) -> "Field":
        if mesh is None:
            mesh = Mesh.from_json(data["mesh"])
        return cls(mesh, np.array(data["values"], dtype=float))


@dataclass(frozen=True)
class OperatorSet:
    """Stiffness ``A``, interior mass ``M`` and boundary mass ``B``."""

    mesh: Mesh
    rule: str
    A: sp.csr_matrix
    M: sp.csr_matrix
    B: sp.csr_matrix
    P: sp.csr_matrix = dataclasses.field(repr=False)
    w: np.ndarray = dataclasses.field(repr=False)
    Pb: sp.csr_matrix = dataclasses.field(repr=False)
    wb: np.ndarray = dataclasses.field(repr=False)

    @property
    def n(self) -> int:
        return self.mesh.n_nodes

    def interior_load(self, fq: np.ndarray) -> np.ndarray:
        """Vector of int_Omega f phi_i, f given at quadrature points."""
        return self.P.T @ (self.w * fq)

    def boundary_load(self, gq: np.ndarray) -> np.ndarray:
        return self.Pb.T @ (self.wb * gq)

    def interior_weighted(self, gq: np.ndarray) -> sp.csr_matrix:
        """Matrix of int_Omega g phi_i phi_j, g given at quadrature points."""
        return (self.P.T @ sp.diags(self.w * gq) @ self.P).tocsr()

    def boundary_weighted(self, gq: np.ndarray) -> sp.csr_matrix:
        return (self.Pb.T @ sp.diags(self.wb * gq) @ self.Pb).tocsr()


def _interpolation(simplices: np.ndarray, bary: np.ndarray, n_nodes: int) -> sp.csr_matrix:
    n_s, k = simplices.shape
    nq = bary.shape[0]
    rows = np.repeat(np.arange(n_s * nq), k)
    cols = np.repeat(simplices, nq, axis=0).ravel()
    vals = np.tile(bary.ravel(), n_s)
    P = sp.csr_matrix((vals, (rows, cols)), shape=(n_s * nq, n_nodes))
    P.eliminate_zeros()
    return P


def _stiffness(mesh: Mesh) -> sp.csr_matrix:
    X = mesh.node_coords[mesh.elements]
    if mesh.dim == 1:
        h = X[:, 1, 0] - X[:, 0, 0]
        local = np.array([[1.0, -1.0], [-1.0, 1.0]])[None] / h[:, None, None]
    else:
        # gradients of barycentric coordinates on each triangle
        e1 = X[:, 1] - X[:, 0]
        e2 = X[:, 2] - X[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        inv = np.empty((len(X), 2, 2))
        inv[:, 0, 0] = e2[:, 1] / det
        inv[:, 0, 1] = -e2[:, 0] / det
        inv[:, 1, 0] = -e1[:, 1] / det
        inv[:, 1, 1] = e1[:, 0] / det
        ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        grads = np.einsum("kr,erd->ekd", ref, inv)
        local = np.einsum("ekd,eld->ekl", grads, grads) * mesh.element_measures[:, None, None]
    k = mesh.elements.shape[1]
    rows = np.repeat(mesh.elements, k, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, k)).ravel()
    A = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    return _symmetrized(A)


def _symmetrized(K) -> sp.csr_matrix:
    # exact symmetry regardless of summation order
    return ((K + K.T) * 0.5).tocsr()


def assemble_operators(mesh: Mesh, rule: str = "vertex") -> OperatorSet:
    """Assemble A, M, B with zero-order terms integrated by ``rule``.

    ``rule="vertex"`` (default) gives lumped M and B; ``rule="gauss"`` gives
    the consistent P1 matrices.
    """
    er = get_rule(rule, mesh.dim + 1)
    fr = get_rule(rule, mesh.dim)
    P = _interpolation(mesh.elements, er.bary, mesh.n_nodes)
    w = (mesh.element_measures[:, None] * er.weights[None, :]).ravel()
    Pb = _interpolation(mesh.boundary_facets, fr.bary, mesh.n_nodes)
    wb = (mesh.facet_measures[:, None] * fr.weights[None, :]).ravel()
    M = _symmetrized(P.T @ sp.diags(w) @ P)
    B = _symmetrized(Pb.T @ sp.diags(wb) @ Pb)
    return OperatorSet(mesh, rule, _stiffness(mesh), M, B, P.tocsr(), w, Pb.tocsr(), wb)


def _checked(u, ops: OperatorSet) -> np.ndarray:
    u = np.asarray(u.values if isinstance(u, Field) else u, dtype=float)
    if u.shape != (ops.n,):
        raise InvalidArgumentError(f"expected {ops.n} nodal values, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise InvalidArgumentError("non-finite nodal values")
    return u


def interior_power_load(u: np.ndarray, power: float, ops: OperatorSet) -> np.ndarray:
    """Vector of int_Omega (u_+)^power phi_i."""
    return ops.interior_load(np.maximum(ops.P @ u, 0.0) ** power)


def boundary_power_load(u: np.ndarray, power: float, ops: OperatorSet) -> np.ndarray:
    """Vector of int_dOmega (u_+)^power phi_i; also the lambda-derivative of the residual."""
    return ops.boundary_load(np.maximum(ops.Pb @ u, 0.0) ** power)


def residual(u, params: ProblemParams, ops: OperatorSet) -> np.ndarray:
    u = _checked(u, ops)
    r = ops.A @ u - ops.M @ u + interior_power_load(u, params.p, ops)
    if params.lam:
        r += params.lam * boundary_power_load(u, params.q, ops)
    return r


def jacobian(u, params: ProblemParams, ops: OperatorSet) -> sp.csr_matrix:
    u = _checked(u, ops)
    p, q = params.p, params.q
    uq = np.maximum(ops.P @ u, 0.0)
    J = ops.A - ops.M + ops.interior_weighted(p * uq ** (p - 1))
    if params.lam:
        ub = np.maximum(ops.Pb @ u, params.eps_clip)
        J = J + params.lam * ops.boundary_weighted(q * ub ** (q - 1))
    return J.tocsr()


def weighted_mass(ops: OperatorSet, weight, region: str = "interior") -> sp.csr_matrix:
    """Mass matrix weighted by the nodal interpolant of ``weight``."""
    g = _checked(weight, ops)
    if region == "interior":
        return ops.interior_weighted(ops.P @ g)
    if region == "boundary":
        return ops.boundary_weighted(ops.Pb @ g)
    raise InvalidArgumentError(f"region must be 'interior' or 'boundary', got {region!r}")
