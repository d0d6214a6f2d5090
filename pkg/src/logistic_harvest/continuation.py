"""Continuation of positive solution branches in lambda.

Natural continuation steps lambda directly and warm-starts Newton from the
previous point. Pseudo-arclength continuation solves the extended system

    r(u, lam) = 0,    t_u^T W (u - u_pred) + t_lam (lam - lam_pred) = 0,

with W = M / |Omega| on the u-part, so it passes through folds where
d lam / ds changes sign.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import Field, OperatorSet, ProblemParams, _checked, boundary_power_load, jacobian, residual
from .eigen import linearized_gamma1
from .errors import InvalidArgumentError, NumericalFailure
from .steady import newton_solve, residual_scale

CSV_COLUMNS = [
    "lambda",
    "sup_norm",
    "h1_norm",
    "min_boundary",
    "gamma1",
    "stability",
    "energy_E",
    "fold_flag",
]


@dataclass
class BranchPoint:
    lam: float
    u: np.ndarray
    ops: OperatorSet = field(repr=False)
    gamma1: float | None = None
    gamma1_flagged: bool = False
    stability: str = "indeterminate"  # stable | unstable | indeterminate
    fold_flag: bool = False
    iterations: int = 0
    residual_norm: float = 0.0
    tangent_lam: float | None = None

    @property
    def field(self) -> Field:
        return Field(self.ops.mesh, self.u)

    @property
    def energy_E(self) -> float:
        return float(self.u @ (self.ops.A @ self.u) - self.u @ (self.ops.M @ self.u))

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.u).max())

    @property
    def h1_norm(self) -> float:
        return float(np.sqrt(self.u @ (self.ops.A @ self.u) + self.u @ (self.ops.M @ self.u)))

    @property
    def min_boundary(self) -> float:
        return float(self.u[self.ops.mesh.boundary_nodes].min())

    def row(self) -> dict[str, Any]:
        return {
            "lambda": self.lam,
            "sup_norm": self.sup_norm,
            "h1_norm": self.h1_norm,
            "min_boundary": self.min_boundary,
            "gamma1": self.gamma1,
            "stability": self.stability,
            "energy_E": self.energy_E,
            "fold_flag": int(self.fold_flag),
        }


@dataclass(frozen=True)
class FoldEvent:
    index: int  # first point after the sign change of d lam / ds
    lam: float
    kind: str  # "max" (lambda turns back) | "min"


@dataclass
class Branch:
    points: list[BranchPoint] = field(default_factory=list)
    fold_events: list[FoldEvent] = field(default_factory=list)
    status: str = "running"
    method: str = "natural"

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([pt.lam for pt in self.points])

    @property
    def lambda_bar_estimate(self) -> float | None:
        return detect_lambda_bar(self) if self.points else None

    def point_at(self, lam: float) -> BranchPoint:
        """Branch point whose lambda is closest to ``lam``."""
        i = int(np.argmin(np.abs(self.lambdas - lam)))
        return self.points[i]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for pt in self.points:
                row = pt.row()
                w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])

    def write_snapshots(self, lambdas: Iterable[float], directory) -> list[str]:
        import os

        paths = []
        for lam in lambdas:
            pt = self.point_at(lam)
            path = os.path.join(directory, f"snapshot_lambda_{pt.lam:.6g}.json")
            payload = {"lambda": pt.lam, "gamma1": pt.gamma1, "stability": pt.stability}
            payload["field"] = pt.field.to_json(include_mesh=True)
            with open(path, "w") as fh:
                json.dump(payload, fh)
            paths.append(path)
        return paths

    def to_json(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "method": self.method,
            "lambda_bar_estimate": self.lambda_bar_estimate,
            "fold_events": [{"index": f.index, "lambda": f.lam, "kind": f.kind} for f in self.fold_events],
            "points": [pt.row() for pt in self.points],
        }


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def make_point(lam: float, u, ops: OperatorSet, iterations: int = 0, residual_norm: float = 0.0) -> BranchPoint:
    return BranchPoint(float(lam), _checked(u, ops).copy(), ops, iterations=iterations, residual_norm=residual_norm)


def start_point(params: ProblemParams, ops: OperatorSet) -> BranchPoint:
    """The point (0, u = 1) from which the positive branch emanates."""
    u = np.ones(ops.n)
    rep = newton_solve(u, params.with_lambda(0.0), ops)
    return make_point(0.0, rep.u, ops, rep.iterations, rep.final_residual_norm)


def _tag(pt: BranchPoint, params: ProblemParams) -> None:
    try:
        pair = linearized_gamma1(pt.u, params.with_lambda(pt.lam), pt.ops)
    except NumericalFailure:
        pt.gamma1, pt.gamma1_flagged, pt.stability = None, False, "indeterminate"
        return
    pt.gamma1, pt.gamma1_flagged = pair.value, pair.flagged
    if pair.flagged:
        pt.stability = "indeterminate"
    else:
        pt.stability = "stable" if pair.value > 0 else "unstable"


def tag_stability(branch: Branch, params: ProblemParams, ops: OperatorSet | None = None) -> Branch:
    """Fill gamma1 and the stability tag of every point (in place)."""
    for pt in branch.points:
        _tag(pt, params)
    return branch


def _is_converged(pt: BranchPoint, params, ops, rtol=1e-9) -> bool:
    r = residual(pt.u, params.with_lambda(pt.lam), ops)
    return np.linalg.norm(r) <= 1e-12 + rtol * residual_scale(pt.u, ops)


def continue_natural(
    start: BranchPoint,
    lambda_max: float,
    dlambda: float,
    params: ProblemParams,
    ops: OperatorSet,
    checkpoints: Iterable[float] = (),
    dl_min: float = 1e-6,
    dl_max: float = 0.5,
    collapse_tol: float = 1e-6,
    max_jump: float = 0.5,
    tag: bool = True,
    newton_max_iters: int = 30,
) -> Branch:
    """Step lambda upward from ``start`` to ``lambda_max``.

    The step halves on Newton failure (or on a jump larger than ``max_jump``
    times the previous sup-norm, which signals a switch to another branch)
    and doubles after three consecutive solves of at most four iterations.
    Stops at lambda_max, at a failure with the minimal step
    ("fold_suspected") or when the sup-norm drops below collapse_tol.
    """
    if not dlambda > 0:
        raise InvalidArgumentError(f"dlambda must be positive, got {dlambda}")
    if not _is_converged(start, params, ops):
        raise InvalidArgumentError("start point is not a converged solution")
    stops = sorted({float(c) for c in checkpoints if start.lam < c < lambda_max} | {float(lambda_max)})
    branch = Branch(method="natural")
    pt = make_point(start.lam, start.u, ops, start.iterations, start.residual_norm)
    if tag:
        _tag(pt, params)
    branch.points.append(pt)
    dl = min(max(dlambda, dl_min), dl_max)
    easy = 0
    while True:
        if pt.lam >= lambda_max:
            branch.status = "lambda_max"
            break
        target = next(c for c in stops if c > pt.lam)
        lam_new = min(pt.lam + dl, target)
        rep = newton_solve(pt.u, params.with_lambda(lam_new), ops, max_iters=newton_max_iters)
        jump = np.abs(rep.u - pt.u).max() if rep.converged else np.inf
        if not rep.converged or jump > max_jump * pt.sup_norm:
            if dl <= dl_min:
                branch.status = "fold_suspected"
                break
            dl = max(0.5 * dl, dl_min)
            easy = 0
            continue
        if rep.max_value < collapse_tol:
            branch.status = "collapsed"
            break
        pt = make_point(lam_new, rep.u, ops, rep.iterations, rep.final_residual_norm)
        if tag:
            _tag(pt, params)
        branch.points.append(pt)
        easy = easy + 1 if rep.iterations <= 4 else 0
        if easy >= 3:
            dl = min(2 * dl, dl_max)
            easy = 0
    return branch


class _Extended:
    """Residual, Jacobian and tangent of the arclength-extended system."""

    def __init__(self, params: ProblemParams, ops: OperatorSet):
        self.params, self.ops = params, ops
        self.mw = ops.M.diagonal() if ops.rule == "vertex" else None
        self.W = ops.M / ops.mesh.volume

    def r(self, u, lam):
        return residual(u, self.params.with_lambda(lam), self.ops)

    def r_lam(self, u):
        return boundary_power_load(u, self.params.q, self.ops)

    def J(self, u, lam):
        return jacobian(u, self.params.with_lambda(lam), self.ops)

    def inner(self, a_u, a_l, b_u, b_l):
        return float(a_u @ (self.W @ b_u) + a_l * b_l)

    def bordered(self, u, lam, c_u, c_l):
        J = self.J(u, lam)
        col = self.r_lam(u)[:, None]
        K = sp.bmat([[J, sp.csr_matrix(col)], [sp.csr_matrix(c_u[None, :]), sp.csr_matrix([[c_l]])]], format="csc")
        try:
            return splu(K)
        except RuntimeError as exc:
            raise NumericalFailure(f"singular bordered system: {exc}") from exc

    def tangent(self, u, lam, t_u, t_l):
        """Unit tangent oriented along the previous tangent (t_u, t_l)."""
        c_u = self.W @ t_u
        lu = self.bordered(u, lam, c_u, t_l)
        rhs = np.zeros(len(u) + 1)
        rhs[-1] = 1.0
        z = lu.solve(rhs)
        z_u, z_l = z[:-1], z[-1]
        nrm = np.sqrt(self.inner(z_u, z_l, z_u, z_l))
        return z_u / nrm, z_l / nrm

    def initial_tangent(self, u, lam, direction):
        J = self.J(u, lam)
        try:
            du = splu(sp.csc_matrix(J)).solve(-self.r_lam(u))
        except RuntimeError as exc:
            raise NumericalFailure(f"singular Jacobian at the start point: {exc}") from exc
        nrm = np.sqrt(self.inner(du, 1.0, du, 1.0))
        return direction * du / nrm, direction / nrm

    def correct(self, u_p, lam_p, t_u, t_l, max_iters, rtol):
        """Newton on the extended system from the predicted point."""
        u, lam = u_p.copy(), float(lam_p)
        if lam < 0:
            return u, lam, 0, False
        c_u = self.W @ t_u
        for it in range(max_iters + 1):
            r = self.r(u, lam)
            g = float(c_u @ (u - u_p) + t_l * (lam - lam_p))
            # purely relative: an absolute floor would accept tiny solutions too early
            if np.linalg.norm(r) <= 1e-30 + rtol * residual_scale(u, self.ops) and abs(g) <= 1e-12:
                return u, lam, it, True
            if it == max_iters:
                break
            lu = self.bordered(u, lam, c_u, t_l)
            d = lu.solve(-np.concatenate([r, [g]]))
            if not np.all(np.isfinite(d)):
                return u, lam, it, False
            u = np.maximum(u + d[:-1], 0.0)
            lam = lam + d[-1]
            if lam < 0:
                # outside the parameter range; let the caller shorten the step
                return u, lam, it + 1, False
        return u, lam, max_iters, False


def continue_arclength(
    start: BranchPoint,
    params: ProblemParams,
    ops: OperatorSet,
    direction: int = 1,
    steps: int = 2000,
    ds: float = 0.05,
    ds_min: float = 1e-6,
    ds_max: float = 0.1,
    lambda_max: float | None = None,
    collapse_tol: float = 1e-6,
    min_cos: float = 0.9,
    min_shrink: float = 0.25,
    refine: bool = False,
    tag: bool = True,
    corrector_iters: int = 10,
    rtol: float = 1e-11,
) -> Branch:
    """Pseudo-arclength predictor-corrector from ``start``.

    A step is accepted only if the corrector converges, the new tangent
    makes an angle with cos >= ``min_cos`` to the previous one, the
    corrected point lies within ``ds`` of the prediction and the sup-norm
    shrinks by no more than the factor ``min_shrink`` (the trivial solution
    is never reached by one jump); otherwise ``ds`` is halved. Folds are
    sign changes of the lambda-component of the tangent. The trace ends on collapse (sup-norm < collapse_tol), on
    lambda < 0, past ``lambda_max``, when ``steps`` are used up or when the
    step would fall below ``ds_min``.
    """
    if direction not in (1, -1):
        raise InvalidArgumentError("direction must be +1 or -1")
    if not ds > 0 or steps < 1:
        raise InvalidArgumentError("need ds > 0 and steps >= 1")
    if not _is_converged(start, params, ops):
        raise InvalidArgumentError("start point is not a converged solution")
    ext = _Extended(params, ops)
    branch = Branch(method="arclength")
    u, lam = start.u.copy(), float(start.lam)
    t_u, t_l = ext.initial_tangent(u, lam, direction)
    t_u, t_l = ext.tangent(u, lam, t_u, t_l)
    pt = make_point(lam, u, ops, start.iterations, start.residual_norm)
    pt.tangent_lam = t_l
    if tag:
        _tag(pt, params)
    branch.points.append(pt)
    h = min(ds, ds_max)
    easy = 0
    branch.status = "steps_exhausted"
    for _ in range(steps):
        while True:
            u_p, lam_p = np.maximum(u + h * t_u, 0.0), lam + h * t_l
            u_n, lam_n, its, ok = ext.correct(u_p, lam_p, t_u, t_l, corrector_iters, rtol)
            if ok:
                try:
                    tn_u, tn_l = ext.tangent(u_n, lam_n, t_u, t_l)
                except NumericalFailure:
                    ok = False
            if ok:
                cos = ext.inner(tn_u, tn_l, t_u, t_l)
                dist = np.sqrt(ext.inner(u_n - u_p, lam_n - lam_p, u_n - u_p, lam_n - lam_p))
                shrink = np.abs(u_n).max() / max(np.abs(u).max(), 1e-300)
                ok = cos >= min_cos and dist <= h and shrink >= min_shrink
            if ok:
                break
            if h <= ds_min:
                branch.status = "lambda_negative" if lam_n < 0 else "step_failure"
                break
            h = max(0.5 * h, ds_min)
            easy = 0
        if branch.status in ("step_failure", "lambda_negative"):
            break
        if np.abs(u_n).max() < collapse_tol:
            branch.status = "collapsed"
            break
        new = make_point(lam_n, u_n, ops, its)
        new.residual_norm = float(np.linalg.norm(ext.r(u_n, lam_n)))
        new.tangent_lam = tn_l
        if np.sign(tn_l) != np.sign(t_l) and t_l != 0:
            kind = "max" if t_l > 0 else "min"
            lam_f = 0.5 * (lam + lam_n)
            if refine:
                lam_f = _refine_fold(ext, u, lam, t_u, t_l, h, corrector_iters, rtol)
            new.fold_flag = True
            branch.fold_events.append(FoldEvent(len(branch.points), lam_f, kind))
        if tag:
            _tag(new, params)
        branch.points.append(new)
        u, lam, t_u, t_l = u_n, lam_n, tn_u, tn_l
        if lambda_max is not None and lam > lambda_max:
            branch.status = "lambda_max"
            break
        easy = easy + 1 if its <= 4 else 0
        if easy >= 3:
            h = min(2 * h, ds_max)
            easy = 0
    return branch


def _refine_fold(ext, u, lam, t_u, t_l, h, iters, rtol, tol=1e-6):
    """Bisect the arclength step for the zero of the tangent lambda-component."""
    lo, hi = 0.0, h
    sgn = np.sign(t_l)
    prev = best = lam
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        u_p = np.maximum(u + mid * t_u, 0.0)
        u_m, lam_m, _, ok = ext.correct(u_p, lam + mid * t_l, t_u, t_l, iters, rtol)
        if not ok:
            break
        _, tl_m = ext.tangent(u_m, lam_m, t_u, t_l)
        if np.sign(tl_m) == sgn:
            lo = mid
        else:
            hi = mid
        best = max(best, lam_m) if sgn > 0 else min(best, lam_m)
        if abs(lam_m - prev) < tol:
            break
        prev = lam_m
    return float(best)


def detect_lambda_bar(branch: Branch) -> float | None:
    """Estimate of the largest lambda carrying a positive solution on the branch.

    With a fold where lambda turns back, the estimate is the largest lambda
    up to that first fold. Otherwise it is the largest lambda reached when
    the trace stopped by failure or collapse, and None when it simply ran
    to lambda_max.
    """
    if not branch.points:
        raise InvalidArgumentError("empty branch")
    lams = branch.lambdas
    first_max = next((f for f in branch.fold_events if f.kind == "max"), None)
    if first_max is not None:
        return float(max(lams[: first_max.index + 1].max(), first_max.lam))
    if branch.status in ("fold_suspected", "collapsed", "step_failure"):
        return float(lams.max())
    return None
