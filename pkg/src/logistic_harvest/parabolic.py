"""Time integration of u_t = Lap u + u - u^p, du/dnu = -lam u^q.

Linear part theta-implicit, nonlinear terms explicit, one prefactored
sparse solve per step:

    (M + dt theta (A - M)) u^{n+1} = M u^n - dt (1 - theta)(A - M) u^n
                                     - dt int (u^n)^p phi - dt lam int_dOmega (u^n)^q phi,

followed by projection onto u >= 0.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.sparse.linalg import splu

from .assembly import Field, OperatorSet, ProblemParams, _checked, boundary_power_load, interior_power_load
from .errors import InvalidArgumentError, NumericalFailure

VERDICT_ORDER = {"decayed": 0, "undecided": 1, "escaped": 2}


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 1e-2
    t_end: float = 200.0
    theta_interior: float = 1.0
    nonlinearity_treatment: str = "explicit"
    record_every: int = 1
    decay_tol: float = 1e-4
    escape_level: float = 0.1  # terminal sup-norm at or above this counts as escaped from 0
    blowup_tol: float = 10.0  # numerical blow-up, stops the run

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgumentError(f"need dt > 0, got {self.dt}")
        if not self.dt <= self.t_end:
            raise InvalidArgumentError(f"need dt <= t_end, got dt={self.dt}, t_end={self.t_end}")
        if not 0 <= self.theta_interior <= 1:
            raise InvalidArgumentError("theta_interior must lie in [0, 1]")
        if self.nonlinearity_treatment != "explicit":
            raise InvalidArgumentError("only explicit nonlinearity treatment is available")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise InvalidArgumentError("record_every must be an integer >= 1")
        if not 0 < self.decay_tol < self.escape_level < self.blowup_tol:
            raise InvalidArgumentError("need 0 < decay_tol < escape_level < blowup_tol")


@dataclass
class Trajectory:
    times: np.ndarray
    sup_norms: np.ndarray
    energies: np.ndarray
    terminal: Field
    verdict: str  # decayed | escaped | undecided
    blew_up: bool = False
    steps: int = 0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "sup_norm", "energy"])
            for t, s, e in zip(self.times, self.sup_norms, self.energies):
                w.writerow([repr(float(t)), repr(float(s)), repr(float(e))])

    def summary(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "blew_up": self.blew_up,
            "steps": self.steps,
            "t_final": float(self.times[-1]),
            "initial_sup_norm": float(self.sup_norms[0]),
            "terminal_sup_norm": float(self.sup_norms[-1]),
        }

    def write_summary(self, path, config: EvolutionConfig | None = None) -> None:
        data = self.summary()
        if config is not None:
            data["config"] = asdict(config)
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)


def _energy(u, ops):
    return float(u @ (ops.A @ u) - u @ (ops.M @ u))


def classify(sup_norm: float, cfg: EvolutionConfig) -> str:
    if sup_norm < cfg.decay_tol:
        return "decayed"
    if sup_norm >= cfg.escape_level:
        return "escaped"
    return "undecided"


def evolve(u0, params: ProblemParams, ops: OperatorSet, cfg: EvolutionConfig = EvolutionConfig()) -> Trajectory:
    """Integrate from ``u0`` to ``cfg.t_end`` and classify the terminal state."""
    u = _checked(u0, ops).copy()
    if np.any(u < 0):
        raise InvalidArgumentError("initial data must be nonnegative")
    dt, th = cfg.dt, cfg.theta_interior
    L = ops.A - ops.M
    lu = splu((ops.M + dt * th * L).tocsc())
    n_steps = int(round(cfg.t_end / dt))
    times, sups, ens = [0.0], [float(u.max())], [_energy(u, ops)]
    blew_up = False
    k = 0
    for k in range(1, n_steps + 1):
        rhs = ops.M @ u - dt * interior_power_load(u, params.p, ops)
        if th < 1:
            rhs -= dt * (1 - th) * (L @ u)
        if params.lam:
            rhs -= dt * params.lam * boundary_power_load(u, params.q, ops)
        u = lu.solve(rhs)
        if not np.all(np.isfinite(u)):
            raise NumericalFailure(f"non-finite state at step {k}")
        np.maximum(u, 0.0, out=u)
        s = float(u.max())
        if s > cfg.blowup_tol:
            blew_up = True
        if k % cfg.record_every == 0 or k == n_steps or blew_up:
            times.append(k * dt)
            sups.append(s)
            ens.append(_energy(u, ops))
        if blew_up:
            break
    verdict = "escaped" if blew_up else classify(sups[-1], cfg)
    return Trajectory(np.array(times), np.array(sups), np.array(ens), Field(ops.mesh, u), verdict, blew_up, k)


@dataclass
class BasinTable:
    rows: list[tuple[float, str]] = field(default_factory=list)
    terminal_sups: list[float] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        ranks = [VERDICT_ORDER[v] for _, v in self.rows]
        return all(a <= b for a, b in zip(ranks, ranks[1:]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scale", "verdict", "terminal_sup_norm"])
            for (s, v), t in zip(self.rows, self.terminal_sups):
                w.writerow([repr(float(s)), v, repr(float(t))])


def basin_scan(
    scales: Sequence[float], profile, params: ProblemParams, ops: OperatorSet, cfg: EvolutionConfig = EvolutionConfig()
) -> BasinTable:
    """Evolve scale * profile for each scale; ``monotone`` flags a non-monotone verdict sequence."""
    scales = [float(s) for s in scales]
    if any(s <= 0 for s in scales) or any(a >= b for a, b in zip(scales, scales[1:])):
        raise InvalidArgumentError("scales must be positive and strictly ascending")
    prof = _checked(profile, ops)
    table = BasinTable()
    for s in scales:
        tr = evolve(s * prof, params, ops, cfg)
        table.rows.append((s, tr.verdict))
        table.terminal_sups.append(float(tr.sup_norms[-1]))
    return table
