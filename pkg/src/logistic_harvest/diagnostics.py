"""Energy quantities, orthogonal decomposition and profile checks.

Notation: E(u) = int |grad u|^2 - u^2 = u^T A u - u^T M u, and
<a, b>_H = a^T (A + M) b is the discrete H^1 inner product. A solution is
split as u = s phi_Omega + v with v H-orthogonal to phi_Omega.

The boundary flux of phi_Omega is the variationally consistent one:
g = A phi - beta M phi vanishes on interior rows, and on boundary rows it
approximates int_dOmega (d phi / d nu) psi_i, so that
int_dOmega (-d phi / d nu) v = -g_b^T v_b.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .assembly import (
    Field,
    OperatorSet,
    ProblemParams,
    _checked,
    boundary_power_load,
    interior_power_load,
)
from .eigen import EigenPair, dirichlet_principal
from .errors import InvalidArgumentError
from .steady import SolveReport, _report, damped_newton, residual_scale


def energy(u, ops: OperatorSet) -> float:
    u = _checked(u, ops)
    return float(u @ (ops.A @ u) - u @ (ops.M @ u))


def h1_inner(a: np.ndarray, b: np.ndarray, ops: OperatorSet) -> float:
    return float(a @ (ops.A @ b) + a @ (ops.M @ b))


def h1_norm(u, ops: OperatorSet) -> float:
    u = _checked(u, ops)
    return float(np.sqrt(max(h1_inner(u, u, ops), 0.0)))


def pq_regime(params: ProblemParams, tol: float = 1e-12) -> str:
    if abs(params.pq - 1.0) <= tol:
        return "pq=1"
    return "pq<1" if params.pq < 1 else "pq>1"


def _same_mesh(phi: EigenPair, ops: OperatorSet) -> None:
    if phi.mesh is not None and phi.mesh.mesh_id != ops.mesh.mesh_id:
        raise InvalidArgumentError(f"eigenpair lives on {phi.mesh.mesh_id}, operators on {ops.mesh.mesh_id}")
    if len(phi.vector) != ops.n:
        raise InvalidArgumentError("eigenpair and operators have different sizes")


@dataclass(frozen=True)
class Decomposition:
    s: float
    v: Field
    u_norm: float
    v_norm: float

    @property
    def ratios(self) -> dict[str, float]:
        un = self.u_norm if self.u_norm > 0 else np.nan
        return {
            "s_over_u": self.s / un,
            "v_over_u": self.v_norm / un,
            "v_over_s": self.v_norm / self.s if self.s != 0 else np.inf,
        }

    def to_json(self) -> dict[str, Any]:
        return {"s": self.s, "u_norm": self.u_norm, "v_norm": self.v_norm, **self.ratios}


def decompose(u, phi: EigenPair, ops: OperatorSet) -> Decomposition:
    """u = s phi + v with s = <u, phi>_H / <phi, phi>_H."""
    _same_mesh(phi, ops)
    u = _checked(u, ops)
    ph = phi.vector
    s = h1_inner(u, ph, ops) / h1_inner(ph, ph, ops)
    v = u - s * ph
    return Decomposition(float(s), Field(ops.mesh, v), h1_norm(u, ops), h1_norm(v, ops))


def boundary_flux(phi: EigenPair, ops: OperatorSet) -> np.ndarray:
    """Nodal vector g = A phi - beta M phi (nonzero only on boundary rows)."""
    _same_mesh(phi, ops)
    g = ops.A @ phi.vector - phi.value * (ops.M @ phi.vector)
    g[ops.mesh.interior_nodes] = 0.0
    return g


def energy_inequality_report(
    u,
    params: ProblemParams,
    phi: EigenPair,
    ops: OperatorSet,
    regime: str | None = None,
    rescaled: bool = False,
) -> dict[str, Any]:
    """Computable terms of the boundary energy inequality for v.

    I = (lam/2) int_dOmega v^(q+1) - 2 s int_dOmega (-d phi/d nu) v. With
    ``rescaled`` the solution is first mapped to U = lam^(-1/(1-q)) u and the
    boundary weight lam/2 is replaced by 1/2 (the quantity J). ``lhs`` is
    E(v) + (weight) int v^(q+1) + I, which is <= 0 up to the discretization
    defect of beta_h - 1; ``satisfied`` reports I >= 0 (or J >= 0).
    """
    u = _checked(u, ops)
    lam = params.lam
    if rescaled:
        if not lam > 0:
            raise InvalidArgumentError("rescaling needs lambda > 0")
        u = lam ** (-1.0 / (1.0 - params.q)) * u
    weight = 0.5 if rescaled else 0.5 * lam
    dec = decompose(u, phi, ops)
    v = dec.v.values
    Ev = energy(v, ops)
    bterm = float(boundary_power_load(v, params.q + 1.0, ops).sum())
    flux = float(-(boundary_flux(phi, ops) @ v))  # int (-d phi/d nu) v
    I = weight * bterm - 2.0 * dec.s * flux
    return {
        "lambda": lam,
        "regime": regime or pq_regime(params),
        "mesh_id": ops.mesh.mesh_id,
        "quantity": "J" if rescaled else "I",
        "s": dec.s,
        "E_v": Ev,
        "boundary_term": bterm,
        "flux_term": flux,
        "I_or_J": I,
        "lhs": Ev + weight * bterm + I,
        "satisfied": bool(I >= 0),
    }


def energy_identity_residual(u, params: ProblemParams, ops: OperatorSet) -> float:
    """Relative defect of u^T A u - u^T M u + int u^(p+1) + lam int_dOmega u^(q+1) = 0."""
    u = _checked(u, ops)
    a = u @ (ops.A @ u)
    m = u @ (ops.M @ u)
    ip = u @ interior_power_load(u, params.p, ops)
    bq = params.lam * (u @ boundary_power_load(u, params.q, ops)) if params.lam else 0.0
    scale = abs(a) + abs(m) + abs(ip) + abs(bq)
    if scale == 0:
        return 0.0
    return float(abs(a - m + ip + bq) / scale)


def rescaled_residual(u, params: ProblemParams, ops: OperatorSet) -> float:
    """||A U - M U + lam^((p-1)/(1-q)) int U^p + int_dOmega U^q|| for U = lam^(-1/(1-q)) u."""
    if not params.lam > 0:
        raise InvalidArgumentError("rescaled problem needs lambda > 0")
    u = _checked(u, ops)
    p, q, lam = params.p, params.q, params.lam
    U = lam ** (-1.0 / (1.0 - q)) * u
    r = ops.A @ U - ops.M @ U + lam ** ((p - 1.0) / (1.0 - q)) * interior_power_load(U, p, ops)
    r += boundary_power_load(U, q, ops)
    return float(np.linalg.norm(r))


@dataclass
class ProbeRun:
    start: str
    report: SolveReport
    outcome: str  # collapsed | diverged | not_converged | positive | trivial_start


@dataclass
class ProbeReport:
    runs: list[ProbeRun]

    @property
    def positive_found(self) -> bool:
        return any(r.outcome == "positive" for r in self.runs)

    def to_json(self) -> list[dict[str, Any]]:
        return [{"start": r.start, "outcome": r.outcome, **r.report.to_json(include_solution=False)} for r in self.runs]


def lambda0_rescaled_probe(
    mesh,
    ops: OperatorSet,
    q: float,
    starts: dict[str, np.ndarray] | None = None,
    eps_clip: float = 1e-12,
    collapse_tol: float = 1e-8,
    max_iters: int = 100,
) -> ProbeReport:
    """Search for a positive solution of A U - M U + int_dOmega U^q = 0.

    Newton from several positive starts; each run is reported as collapsed
    (to U = 0), diverged, not converged or positive. Numerical evidence
    only.
    """
    if not 0 < q < 1:
        raise InvalidArgumentError(f"need 0 < q < 1, got {q}")
    if starts is None:
        phi = dirichlet_principal(mesh, ops)
        starts = {
            "constant_0.5": np.full(ops.n, 0.5),
            "phi_Omega": phi.vector.copy(),
            "zero": np.zeros(ops.n),
        }

    def res(U):
        return ops.A @ U - ops.M @ U + boundary_power_load(U, q, ops)

    def jac(U):
        w = q * np.maximum(ops.Pb @ U, eps_clip) ** (q - 1)
        return (ops.A - ops.M + ops.boundary_weighted(w)).tocsr()

    thr = lambda U: 1e-14 + 1e-11 * residual_scale(U, ops)
    runs = []
    for name, U0 in starts.items():
        U0 = _checked(U0, ops)
        if U0.max() <= 0:
            runs.append(ProbeRun(name, _report(U0.copy(), ops, 0, 0.0, True, 0.0), "trivial_start"))
            continue
        try:
            U, it, rn, ok, msg = damped_newton(res, jac, U0, thr, max_iters=max_iters)
        except Exception as exc:  # singular systems count as failure to find a solution
            runs.append(ProbeRun(name, _report(U0.copy(), ops, 0, np.nan, False, 0.0, message=str(exc)), "diverged"))
            continue
        rep = _report(U, ops, it, rn, ok, thr(U), message=msg)
        if U.max() < collapse_tol:
            outcome = "collapsed"
        elif not np.isfinite(U).all() or U.max() > 1e6:
            outcome = "diverged"
        elif ok:
            outcome = "positive"
        else:
            outcome = "not_converged"
        runs.append(ProbeRun(name, rep, outcome))
    return ProbeReport(runs)


def profile_distance(u, target, ops: OperatorSet) -> dict[str, float]:
    """H^1 distance and H^1 angle between u and target."""
    u = _checked(u, ops)
    t = _checked(target, ops)
    nu, nt = h1_norm(u, ops), h1_norm(t, ops)
    if nu == 0 or nt == 0:
        raise InvalidArgumentError("angle undefined for a zero field")
    # atan2 form stays accurate for small angles
    inner = h1_inner(u, t, ops)
    perp = h1_norm(u - (inner / nt**2) * t, ops)
    return {"h1_dist": h1_norm(u - t, ops), "angle": float(np.arctan2(perp, inner / nt))}
