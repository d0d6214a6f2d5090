"""Smallest eigenpairs of symmetric-definite pencils.

Two problems are served: the Dirichlet Laplacian on interior degrees of
freedom (principal eigenvalue beta and eigenfunction phi), and the
linearization of the steady problem at a solution u,

    J(u) phi = gamma (M + B) phi,

whose smallest eigenvalue gamma_1 decides stability (gamma_1 > 0 stable,
gamma_1 < 0 unstable).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import Field, OperatorSet, ProblemParams, _checked, jacobian
from .errors import InvalidArgumentError, NumericalFailure
from .mesh import Mesh


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    problem_tag: str  # "dirichlet" | "linearized"
    normalization: str  # "interior-L2" | "combined-L2"
    flagged: bool = False
    mesh: Mesh | None = None

    @property
    def field(self) -> Field:
        if self.mesh is None:
            raise InvalidArgumentError("eigenpair carries no mesh")
        return Field(self.mesh, self.vector)

    def to_json(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "problem_tag": self.problem_tag,
            "normalization": self.normalization,
            "flagged": self.flagged,
            "values": self.vector.tolist(),
        }


def _ldl(S: sp.spmatrix):
    """Symmetric-pivot LU; returns (factor, number of negative pivots) or (None, None)."""
    try:
        lu = splu(
            sp.csc_matrix(S),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError:
        return None, None
    d = lu.U.diagonal()
    if not np.all(lu.perm_r == lu.perm_c) or not np.all(np.isfinite(d)) or np.any(d == 0):
        return lu, None
    return lu, int(np.count_nonzero(d < 0))


def count_below(K, Mass, sigma: float) -> int | None:
    """Number of eigenvalues of (K, Mass) below ``sigma`` (Sylvester inertia)."""
    _, neg = _ldl(sp.csc_matrix(K) - sigma * sp.csc_matrix(Mass))
    return neg


def solve_sym_gen_smallest(
    K,
    Mass,
    tol: float = 1e-9,
    max_iter: int = 500,
    max_shifts: int = 60,
    x0: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of K v = theta Mass v, Mass symmetric positive definite.

    The smallest eigenvalue is bracketed by Sylvester inertia counts of
    K - sigma Mass (bisection), then refined by shift-and-invert inverse
    iteration from the lower end of the bracket, with Rayleigh-quotient
    shifts as a fallback. The result is accepted only when no eigenvalue
    lies below it. Returns (theta, v) with v^T Mass v = 1.
    Convergence: ||K v - theta Mass v|| <= tol * (||K|| + |theta| ||Mass||) ||v||.
    """
    K = sp.csr_matrix(K)
    Mass = sp.csr_matrix(Mass)
    n = K.shape[0]
    if K.shape != (n, n) or Mass.shape != (n, n):
        raise InvalidArgumentError("K and Mass must be square and of equal size")
    normK = abs(K).sum(axis=1).max()
    normM = abs(Mass).sum(axis=1).max()
    rho = float(np.max(np.abs(K.diagonal()) / Mass.diagonal()))
    floor = 1e-12 * max(rho, 1e-300)

    x = np.ones(n) if x0 is None else np.asarray(x0, dtype=float).copy()

    def normalize(v):
        return v / np.sqrt(v @ (Mass @ v))

    def rq(v):
        return float(v @ (K @ v))

    def converged(v, th):
        r = K @ v - th * (Mass @ v)
        return np.linalg.norm(r) <= tol * (normK + abs(th) * normM) * np.linalg.norm(v)

    x = normalize(x)
    hi = rq(x)  # Rayleigh quotient bounds the smallest eigenvalue from above

    # lower end: a shift where K - sigma Mass is positive definite
    delta = 0.05 * max(abs(hi), 1e-8 * rho, 1e-300)
    for _ in range(max_shifts):
        lo = hi - delta
        lu, neg = _ldl(K - lo * Mass)
        if neg == 0:
            break
        delta *= 4.0
    else:
        raise NumericalFailure("could not find a shift below the spectrum")

    # bisect until the bracket isolates one eigenvalue and is narrow
    isolated = False
    for _ in range(200):
        if isolated and hi - lo <= 1e-3 * max(abs(lo), abs(hi)) + floor:
            break
        mid = 0.5 * (lo + hi)
        lu_mid, neg = _ldl(K - mid * Mass)
        if neg == 0:
            lo, lu = mid, lu_mid
        else:
            hi = mid
            isolated = neg == 1

    theta = rq(x)
    for _ in range(max_iter):
        y = lu.solve(Mass @ x)
        if not np.all(np.isfinite(y)):
            break
        x = normalize(y)
        theta = rq(x)
        if converged(x, theta):
            break
    if not converged(x, theta):
        for _ in range(50):
            lu_r, _ = _ldl(K - theta * Mass)
            if lu_r is None:
                break
            y = lu_r.solve(Mass @ x)
            if not np.all(np.isfinite(y)):
                break
            x = normalize(y)
            theta = rq(x)
            if converged(x, theta):
                break
    if not converged(x, theta):
        raise NumericalFailure("eigensolver did not converge")
    margin = 1e-8 * (rho + abs(theta))
    if count_below(K, Mass, theta - margin) != 0:
        raise NumericalFailure("converged to an eigenvalue that is not the smallest")
    return theta, x


def _sign_fix(v: np.ndarray) -> np.ndarray:
    return -v if v.sum() < 0 else v


def dirichlet_principal(mesh: Mesh, ops: OperatorSet) -> EigenPair:
    """Principal Dirichlet eigenpair, phi extended by zero and int phi^2 = 1."""
    I = mesh.interior_nodes
    if len(I) == 0:
        raise InvalidArgumentError("mesh has no interior nodes")
    K = ops.A[I][:, I]
    Mass = ops.M[I][:, I]
    beta, v = solve_sym_gen_smallest(K, Mass)
    phi = np.zeros(mesh.n_nodes)
    phi[I] = _sign_fix(v)
    phi /= np.sqrt(phi @ (ops.M @ phi))
    return EigenPair(float(beta), phi, "dirichlet", "interior-L2", mesh=mesh)


def boundary_clamped(u: np.ndarray, params: ProblemParams, ops: OperatorSet) -> bool:
    """True when the boundary weight q u^(q-1) had to be floored at eps_clip."""
    return bool(params.lam > 0 and np.any(ops.Pb @ u <= params.eps_clip))


def linearized_gamma1(u, params: ProblemParams, ops: OperatorSet) -> EigenPair:
    """Smallest eigenpair of J(u) phi = gamma (M + B) phi, phi^T (M + B) phi = 1."""
    u = _checked(u, ops)
    Mass = ops.M + ops.B
    gamma, v = solve_sym_gen_smallest(jacobian(u, params, ops), Mass)
    return EigenPair(
        float(gamma),
        _sign_fix(v),
        "linearized",
        "combined-L2",
        flagged=boundary_clamped(u, params, ops),
        mesh=ops.mesh,
    )


def dirichlet_gamma1(u, p: float, ops: OperatorSet) -> EigenPair:
    """Linearized eigenvalue of the Dirichlet logistic problem on H^1_0 at ``u``."""
    u = _checked(u, ops)
    I = ops.mesh.interior_nodes
    J = jacobian(u, ProblemParams(p=p, q=0.5, lam=0.0), ops)
    gamma, v = solve_sym_gen_smallest(J[I][:, I], ops.M[I][:, I])
    phi = np.zeros(ops.n)
    phi[I] = _sign_fix(v)
    return EigenPair(float(gamma), phi, "dirichlet", "interior-L2", mesh=ops.mesh)


def rayleigh_quotient(K, Mass, v: np.ndarray) -> float:
    return float(v @ (K @ v)) / float(v @ (Mass @ v))
