"""Steady solvers: damped Newton, the Dirichlet logistic problem, explicit
sub/supersolutions and the monotone (sub/supersolution) iteration.
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import (
    Field,
    OperatorSet,
    ProblemParams,
    _checked,
    boundary_power_load,
    interior_power_load,
    jacobian,
    residual,
)
from .eigen import EigenPair, dirichlet_principal
from .errors import InvalidArgumentError, NumericalFailure

REGIME_TOL = 1e-3


@dataclass
class SolveReport:
    solution: Field
    iterations: int
    final_residual_norm: float
    converged: bool
    tol: float
    min_value: float
    max_value: float
    min_boundary_value: float
    regime: str | None = None
    message: str = ""

    @property
    def u(self) -> np.ndarray:
        return self.solution.values

    def to_json(self, include_solution: bool = True) -> dict[str, Any]:
        out = {
            "iterations": self.iterations,
            "final_residual_norm": self.final_residual_norm,
            "converged": self.converged,
            "tol": self.tol,
            "min_value": self.min_value,
            "max_value": self.max_value,
            "min_boundary_value": self.min_boundary_value,
            "regime": self.regime,
            "message": self.message,
        }
        if include_solution:
            out["solution"] = self.solution.to_json(include_mesh=False)
        return out


def _report(u, ops, iterations, rnorm, converged, tol, regime=None, message=""):
    b = u[ops.mesh.boundary_nodes]
    return SolveReport(
        Field(ops.mesh, u),
        iterations,
        float(rnorm),
        bool(converged),
        float(tol),
        float(u.min()),
        float(u.max()),
        float(b.min()),
        regime,
        message,
    )


def _factor(J: sp.spmatrix):
    try:
        return splu(sp.csc_matrix(J))
    except RuntimeError as exc:
        raise NumericalFailure(f"singular Jacobian: {exc}") from exc


def damped_newton(
    res: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], sp.spmatrix],
    u0: np.ndarray,
    threshold: Callable[[np.ndarray], float],
    max_iters: int = 50,
    max_halvings: int = 30,
    free: np.ndarray | None = None,
    project: bool = True,
):
    """Newton with backtracking on ||r|| and projection onto u >= 0.

    Only the ``free`` entries are unknowns; the others keep their values in
    ``u0`` and their residual rows are ignored. Returns
    (u, iterations, residual norm, converged, message).
    """
    u = u0.copy()
    if free is None:
        free = np.arange(len(u))
    r = res(u)[free]
    rnorm = np.linalg.norm(r)
    for it in range(max_iters + 1):
        if rnorm <= threshold(u):
            return u, it, rnorm, True, "converged"
        if it == max_iters:
            break
        J = jac(u)
        if len(free) != len(u):
            J = sp.csr_matrix(J)[free][:, free]
        d = _factor(J).solve(-r)
        if not np.all(np.isfinite(d)):
            raise NumericalFailure("non-finite Newton step")
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = u.copy()
            trial[free] += t * d
            if project:
                np.maximum(trial, 0.0, out=trial)
            r_trial = res(trial)[free]
            n_trial = np.linalg.norm(r_trial)
            if n_trial < rnorm:
                break
            t *= 0.5
        else:
            return u, it, rnorm, False, "line search stagnated"
        u, r, rnorm = trial, r_trial, n_trial
    return u, max_iters, rnorm, False, "iteration limit reached"


def residual_scale(u: np.ndarray, ops: OperatorSet) -> float:
    return float(np.linalg.norm(ops.A @ u) + np.linalg.norm(ops.M @ u))


def newton_solve(
    u0,
    params: ProblemParams,
    ops: OperatorSet,
    tol: float = 1e-14,
    max_iters: int = 50,
    rtol: float = 1e-11,
) -> SolveReport:
    """Damped Newton for the discrete weak problem.

    Converged when ||r||_2 <= tol + rtol * (||A u|| + ||M u||); the relative
    part keeps the test meaningful for solutions of very small amplitude.
    The threshold actually used is stored in the report.
    """
    u0 = _checked(u0, ops)
    thr = lambda u: tol + rtol * residual_scale(u, ops)
    u, it, rn, ok, msg = damped_newton(
        lambda v: residual(v, params, ops),
        lambda v: jacobian(v, params, ops),
        np.maximum(u0, 0.0),
        thr,
        max_iters=max_iters,
    )
    return _report(u, ops, it, rn, ok, thr(u), message=msg)


def classify_beta(beta: float, tol: float = REGIME_TOL) -> str:
    if abs(beta - 1.0) <= tol:
        return "critical"
    return "subcritical" if beta < 1.0 else "supercritical"


def solve_dirichlet_logistic(
    mesh,
    ops: OperatorSet,
    p: float,
    tol: float = 1e-14,
    rtol: float = 1e-11,
    max_iters: int = 100,
    regime_tol: float = REGIME_TOL,
) -> SolveReport:
    """Positive solution u_D of -Lap u = u - u^p, u = 0 on the boundary.

    Returns the zero solution with ``regime`` set when the discrete principal
    eigenvalue is not below 1 - regime_tol (no positive solution then).
    """
    pair = dirichlet_principal(mesh, ops)
    regime = classify_beta(pair.value, regime_tol)
    zero = np.zeros(mesh.n_nodes)
    if regime != "subcritical":
        return _report(zero, ops, 0, 0.0, True, tol, regime, "zero solution: beta_Omega >= 1")
    params = ProblemParams(p=p, q=0.5, lam=0.0)
    interior = mesh.interior_nodes
    thr = lambda u: tol + rtol * residual_scale(u, ops)
    res = lambda v: residual(v, params, ops)
    jac = lambda v: jacobian(v, params, ops)
    starts = [np.where(np.isin(np.arange(mesh.n_nodes), interior), 1.0, 0.0)]
    starts.append(0.5 * pair.vector / pair.vector.max())
    last = None
    for u0 in starts:
        u, it, rn, ok, msg = damped_newton(res, jac, u0, thr, max_iters, free=interior)
        last = _report(u, ops, it, rn, ok, thr(u), regime, msg)
        if ok and u.max() > 1e-8:
            return last
    last.converged = False
    last.message = "no positive Dirichlet solution found"
    return last


# explicit barriers


def build_subsolution_phi_eps(
    phi: EigenPair, eps: float, tau: float, q: float, p: float | None = None
) -> Field:
    """phi_eps = eps (phi_Omega + eps^tau); pass ``p`` to also enforce tau < p - 1."""
    if not eps > 0:
        raise InvalidArgumentError(f"eps > 0 violated: eps={eps}")
    lo = (1.0 - q) / q
    if not tau > lo:
        raise InvalidArgumentError(f"tau > (1-q)/q violated: tau={tau}, (1-q)/q={lo:.6g}")
    if p is not None and not tau < p - 1:
        raise InvalidArgumentError(f"tau < p-1 violated: tau={tau}, p-1={p - 1:.6g}")
    base = np.maximum(phi.vector, 0.0)
    return Field(_mesh_of(phi), eps * (base + eps**tau))


def build_supersolution_psi(phi: EigenPair, delta: float, eps: float, tau: float) -> Field:
    """psi = delta (phi_Omega + eps)^tau with delta > 0, eps >= 0, 0 < tau <= 1."""
    if not delta > 0:
        raise InvalidArgumentError(f"delta > 0 violated: delta={delta}")
    if not eps >= 0:
        raise InvalidArgumentError(f"eps >= 0 violated: eps={eps}")
    if not 0 < tau <= 1:
        raise InvalidArgumentError(f"0 < tau <= 1 violated: tau={tau}")
    base = np.maximum(phi.vector, 0.0)
    return Field(_mesh_of(phi), delta * (base + eps) ** tau)


def _mesh_of(phi: EigenPair):
    if phi.mesh is None:
        raise InvalidArgumentError("eigenpair carries no mesh")
    return phi.mesh


@dataclass(frozen=True)
class BarrierVerdict:
    kind: str  # "sub" | "super"
    interior_ok: bool
    boundary_ok: bool
    worst_interior: float
    worst_boundary: float

    @property
    def ok(self) -> bool:
        return self.interior_ok and self.boundary_ok

    def to_json(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["ok"] = self.ok
        return d


def _verify(v, params, ops, sign, kind, tol_margin):
    v = _checked(v, ops)
    if np.any(v < 0):
        raise InvalidArgumentError("barrier must be nonnegative")
    r = sign * residual(v, params, ops)
    b = ops.mesh.boundary_nodes
    i = ops.mesh.interior_nodes
    wi = float(r[i].max()) if len(i) else 0.0
    wb = float(r[b].max())
    return BarrierVerdict(kind, wi <= tol_margin, wb <= tol_margin, wi, wb)


def verify_subsolution(v, params: ProblemParams, ops: OperatorSet, tol_margin: float = 1e-13):
    """Subsolution iff every residual row (tested against a nodal hat) is <= tol_margin.

    Worst margins are the largest rows, split into interior and boundary nodes.
    """
    return _verify(v, params, ops, 1.0, "sub", tol_margin)


def verify_supersolution(v, params: ProblemParams, ops: OperatorSet, tol_margin: float = 1e-13):
    """Supersolution iff every residual row is >= -tol_margin (worst = largest of -r)."""
    return _verify(v, params, ops, -1.0, "super", tol_margin)


# monotone iteration


@dataclass(frozen=True)
class MonotoneConfig:
    K_shift: float | None = None  # default p, raised if the upper barrier exceeds 1
    M_shift: float | None = None  # default lambda q c^(q-1), c = min boundary of lower
    max_iters: int = 200000
    tol: float = 1e-9
    direction: str = "from_sub"
    keep_iterates: bool = False
    monotone_tol: float = 1e-10

    def __post_init__(self):
        if self.direction not in ("from_sub", "from_super"):
            raise InvalidArgumentError(f"direction must be from_sub or from_super, got {self.direction!r}")
        if self.max_iters < 1 or not self.tol > 0:
            raise InvalidArgumentError("need max_iters >= 1 and tol > 0")


@dataclass
class MonotoneResult:
    report: SolveReport
    K_shift: float
    M_shift: float
    history: list[dict[str, float]] = field(default_factory=list)
    iterates: list[np.ndarray] | None = None

    def write_history_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "min", "max", "residual"])
            for h in self.history:
                w.writerow([h["iteration"], repr(h["min"]), repr(h["max"]), repr(h["residual"])])


def monotone_shifts(lower: np.ndarray, upper: np.ndarray, params: ProblemParams, ops: OperatorSet):
    """Smallest admissible (K, M) for the barriers, before any user override."""
    p, q = params.p, params.q
    top = max(1.0, float(upper.max()))
    K = max(p, p * top ** (p - 1) - 1.0)
    if params.lam == 0:
        return K, 0.0
    c = float(lower[ops.mesh.boundary_nodes].min())
    if c <= 0:
        raise InvalidArgumentError("lower barrier must be positive on the boundary when lambda > 0")
    return K, params.lam * q * c ** (q - 1)


def monotone_iterate(
    lower, upper, params: ProblemParams, ops: OperatorSet, cfg: MonotoneConfig = MonotoneConfig()
) -> MonotoneResult:
    """Sub/supersolution iteration

        (A + K M + S B) u_{k+1} = M f_K(u_k) + S B u_k - lam B u_k^q,
        f_K(t) = K t + t - t^p,

    started from ``lower`` (nondecreasing iterates, limit = minimal solution
    in the order interval) or ``upper`` (nonincreasing, maximal solution).
    """
    lo = _checked(lower, ops)
    up = _checked(upper, ops)
    if np.any(lo > up):
        raise InvalidArgumentError("lower barrier exceeds upper barrier")
    K_min, S_min = monotone_shifts(lo, up, params, ops)
    K = K_min if cfg.K_shift is None else float(cfg.K_shift)
    S = S_min if cfg.M_shift is None else float(cfg.M_shift)
    if K < params.p - 1:
        raise InvalidArgumentError(f"K_shift >= p-1 violated: K={K}, p-1={params.p - 1}")
    if S < S_min * (1 - 1e-12):
        raise InvalidArgumentError(f"M_shift >= lambda q c^(q-1) violated: M={S}, bound={S_min:.6g}")

    lu = _factor(ops.A + K * ops.M + S * ops.B)
    sign = 1.0 if cfg.direction == "from_sub" else -1.0
    u = (lo if sign > 0 else up).copy()
    history = []
    iterates = [u.copy()] if cfg.keep_iterates else None
    tol_used = cfg.tol
    converged = False
    it = 0
    inc = np.inf
    for it in range(1, cfg.max_iters + 1):
        rhs = (K + 1.0) * (ops.M @ u) - interior_power_load(u, params.p, ops) + S * (ops.B @ u)
        if params.lam:
            rhs -= params.lam * boundary_power_load(u, params.q, ops)
        u_new = lu.solve(rhs)
        if not np.all(np.isfinite(u_new)):
            raise NumericalFailure("non-finite monotone iterate")
        step = sign * (u_new - u)
        scale = max(1.0, float(np.abs(u).max()))
        if step.min() < -cfg.monotone_tol * scale:
            raise NumericalFailure(
                f"monotonicity violated by {-step.min():.3e} at iteration {it}; shifts too small"
            )
        inc = float(np.abs(u_new - u).max())
        u = u_new
        if cfg.keep_iterates:
            iterates.append(u.copy())
        history.append(
            {
                "iteration": it,
                "min": float(u.min()),
                "max": float(u.max()),
                "increment": inc,
                "residual": float(np.linalg.norm(residual(u, params, ops))),
            }
        )
        if inc <= cfg.tol:
            converged = True
            break
    rn = float(np.linalg.norm(residual(u, params, ops)))
    msg = "converged" if converged else "iteration limit reached"
    rep = _report(u, ops, it, rn, converged, tol_used, message=msg)
    return MonotoneResult(rep, K, S, history, iterates)
