"""Command-line front end.

    logistic-harvest <command> [--config FILE] [--set section.key=value ...] [--out DIR]

Commands: eig, steady, dirichlet-logistic, continue, monotone, evolve,
verify, diagnose. Every run writes ``manifest.json`` next to its outputs.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import ast
import configparser
import csv
import json
import math
import operator
import os
import platform
import sys
import time
from typing import Any

import numpy as np
import scipy

from . import __version__
from .assembly import Field, ProblemParams, assemble_operators
from .continuation import continue_arclength, continue_natural, start_point
from .diagnostics import (
    decompose,
    energy,
    energy_identity_residual,
    energy_inequality_report,
    lambda0_rescaled_probe,
    profile_distance,
    rescaled_residual,
)
from .eigen import dirichlet_principal, linearized_gamma1
from .errors import InvalidArgumentError, NumericalFailure
from .mesh import build_interval, build_rectangle
from .parabolic import EvolutionConfig, basin_scan, evolve
from .steady import (
    REGIME_TOL,
    MonotoneConfig,
    build_subsolution_phi_eps,
    build_supersolution_psi,
    classify_beta,
    monotone_iterate,
    newton_solve,
    solve_dirichlet_logistic,
    verify_subsolution,
    verify_supersolution,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# every accepted key with its default; README documents the same table
DEFAULTS: dict[str, dict[str, str]] = {
    "domain": {"kind": "interval", "L": "pi", "n": "256", "Lx": "pi", "Ly": "pi", "nx": "32", "ny": "32",
               "quadrature": "vertex"},
    "problem": {"p": "2", "q": "0.5", "lambda": "0", "eps_clip": "1e-12"},
    "output": {"dir": "out", "seed": "0"},
    "eig": {"problem": "dirichlet", "regime_tol": "1e-3", "initial": "constant:1"},
    "steady": {"initial": "constant:0.9", "tol": "1e-14", "rtol": "1e-11", "max_iters": "50"},
    "continue": {"method": "natural", "lambda_max": "50", "dlambda": "0.05", "dl_min": "1e-6",
                 "dl_max": "0.5", "checkpoints": "", "ds": "0.05", "ds_min": "1e-6", "ds_max": "0.1",
                 "steps": "2000", "direction": "1", "refine": "false", "collapse_tol": "1e-6",
                 "snapshots": ""},
    "monotone": {"lower": "phi_eps", "upper": "constant:1", "eps": "0.1", "tau": "2.1", "delta": "1e-6",
                 "direction": "both", "K_shift": "", "M_shift": "", "tol": "1e-9", "max_iters": "200000"},
    "evolve": {"initial": "phi_eps", "scale": "1", "eps": "1e-3", "tau": "2.1", "delta": "1e-4",
               "dt": "1e-2", "t_end": "200", "theta": "1", "record_every": "1", "decay_tol": "1e-4",
               "escape_level": "0.1", "blowup_tol": "10", "basin_scales": ""},
    "verify": {"kind": "sub", "eps": "1e-2, 1e-3", "tau": "2.1, 3", "delta": "1e-6", "lambda": "0.5, 1",
               "tol_margin": "1e-13"},
    "diagnose": {"lambda": "1", "dlambda": "0.05", "rescaled": "false"},
}


class ConfigError(Exception):
    pass


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Float literal or a small arithmetic expression in numbers and ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(text)

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


class StudyConfig:
    """Typed access to the INI configuration with documented defaults."""

    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser
        for section in parser.sections():
            if section not in DEFAULTS:
                raise ConfigError(f"unknown section [{section}]")
            for key in parser[section]:
                if key not in {k.lower() for k in DEFAULTS[section]}:
                    raise ConfigError(f"unknown key {section}.{key}")

    @classmethod
    def load(cls, path: str | None, overrides: list[str] = ()) -> "StudyConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str.lower
        if path is not None:
            if not os.path.isfile(path):
                raise ConfigError(f"config file not found: {path}")
            try:
                parser.read(path)
            except configparser.Error as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
        for item in overrides:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"override must look like section.key=value, got {item!r}")
            lhs, value = item.split("=", 1)
            section, key = lhs.split(".", 1)
            if not parser.has_section(section):
                parser.add_section(section)
            parser[section][key.lower()] = value
        return cls(parser)

    def raw(self, section: str, key: str) -> str:
        default = DEFAULTS[section][key]
        if self.parser.has_section(section):
            return self.parser[section].get(key.lower(), default).strip()
        return default

    def num(self, section, key) -> float:
        return parse_number(self.raw(section, key))

    def opt_num(self, section, key) -> float | None:
        text = self.raw(section, key)
        return parse_number(text) if text else None

    def int(self, section, key) -> int:
        x = self.num(section, key)
        if x != int(x):
            raise ConfigError(f"{section}.{key} must be an integer, got {x}")
        return int(x)

    def flag(self, section, key) -> bool:
        text = self.raw(section, key).lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{section}.{key} must be a boolean, got {text!r}")

    def nums(self, section, key) -> list[float]:
        text = self.raw(section, key)
        return [parse_number(t) for t in text.replace(";", ",").split(",") if t.strip()]

    def echo(self) -> dict[str, dict[str, str]]:
        return {s: {k: self.raw(s, k) for k in keys} for s, keys in DEFAULTS.items()}


# builders


def build_domain(cfg: StudyConfig):
    kind = cfg.raw("domain", "kind")
    if kind == "interval":
        mesh = build_interval(cfg.num("domain", "L"), cfg.int("domain", "n"))
    elif kind == "rectangle":
        mesh = build_rectangle(cfg.num("domain", "Lx"), cfg.num("domain", "Ly"),
                               cfg.int("domain", "nx"), cfg.int("domain", "ny"))
    else:
        raise ConfigError(f"domain.kind must be interval or rectangle, got {kind!r}")
    rule = cfg.raw("domain", "quadrature")
    return mesh, assemble_operators(mesh, rule)


def build_params(cfg: StudyConfig) -> ProblemParams:
    return ProblemParams(p=cfg.num("problem", "p"), q=cfg.num("problem", "q"),
                         lam=cfg.num("problem", "lambda"), eps_clip=cfg.num("problem", "eps_clip"))


def load_field(path: str, mesh) -> np.ndarray:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from exc
    for key in ("field", "solution"):
        if isinstance(data.get(key), dict):
            data = data[key]
    if "values" not in data:
        raise ConfigError(f"no field values in {path}")
    values = np.array(data["values"], dtype=float)
    if values.shape != (mesh.n_nodes,):
        raise ConfigError(f"field in {path} has {values.size} values, mesh has {mesh.n_nodes}")
    return values


def initial_profile(choice: str, cfg: StudyConfig, section: str, mesh, ops, params) -> np.ndarray:
    """Decode constant:<c> | phi | phi_eps | psi | file:<path>."""
    if choice.startswith("constant:"):
        return np.full(mesh.n_nodes, parse_number(choice.split(":", 1)[1]))
    if choice.startswith("file:"):
        return load_field(choice.split(":", 1)[1], mesh)
    if choice in ("phi", "phi_eps", "psi"):
        phi = dirichlet_principal(mesh, ops)
        if choice == "phi":
            return phi.vector.copy()
        eps = cfg.num(section, "eps")
        if choice == "phi_eps":
            return build_subsolution_phi_eps(phi, eps, cfg.num(section, "tau"), params.q).values
        return build_supersolution_psi(phi, cfg.num(section, "delta"), eps, cfg.num(section, "tau")).values
    raise ConfigError(f"unknown profile {choice!r}")


def write_json(path: str, data: Any) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _regime_line(beta: float, tol: float) -> str:
    regime = classify_beta(beta, tol)
    if regime == "critical":
        return f"regime: critical (|β−1| ≤ {np.format_float_scientific(tol, trim='-', exp_digits=1)})"
    return f"regime: {regime} (β = {beta:.6g})"


# commands


def cmd_eig(cfg: StudyConfig, out: str) -> list[str]:
    mesh, ops = build_domain(cfg)
    tol = cfg.num("eig", "regime_tol")
    pair = dirichlet_principal(mesh, ops)
    print(f"beta_Omega = {pair.value:.12g}")
    print(_regime_line(pair.value, tol))
    problem = cfg.raw("eig", "problem")
    data = {"mesh_id": mesh.mesh_id, "regime": classify_beta(pair.value, tol), "beta_Omega": pair.value}
    if problem == "dirichlet":
        data["eigenpair"] = pair.to_json()
    elif problem == "linearized":
        params = build_params(cfg)
        u0 = initial_profile(cfg.raw("eig", "initial"), cfg, "eig", mesh, ops, params)
        rep = newton_solve(u0, params, ops)
        if not rep.converged:
            raise NumericalFailure(f"steady solve failed: {rep.message}")
        g = linearized_gamma1(rep.u, params, ops)
        print(f"gamma_1 = {g.value:.12g}" + (" (boundary clamp flagged)" if g.flagged else ""))
        data["lambda"] = params.lam
        data["eigenpair"] = g.to_json()
    else:
        raise ConfigError(f"eig.problem must be dirichlet or linearized, got {problem!r}")
    path = os.path.join(out, "eigenpair.json")
    write_json(path, data)
    return [path]


def cmd_steady(cfg: StudyConfig, out: str) -> list[str]:
    mesh, ops = build_domain(cfg)
    params = build_params(cfg)
    u0 = initial_profile(cfg.raw("steady", "initial"), cfg, "steady", mesh, ops, params)
    if not np.all(np.isfinite(u0)):
        raise NumericalFailure("non-finite initial data")
    rep = newton_solve(u0, params, ops, tol=cfg.num("steady", "tol"), max_iters=cfg.int("steady", "max_iters"),
                       rtol=cfg.num("steady", "rtol"))
    data = rep.to_json()
    data["lambda"] = params.lam
    data["mesh_id"] = mesh.mesh_id
    if rep.converged:
        g = linearized_gamma1(rep.u, params, ops)
        data["gamma1"], data["gamma1_flagged"] = g.value, g.flagged
    path = os.path.join(out, "steady.json")
    write_json(path, data)
    print(f"converged={rep.converged} iterations={rep.iterations} max={rep.max_value:.6g} "
          f"min_boundary={rep.min_boundary_value:.6g}")
    if not rep.converged:
        raise NumericalFailure(f"Newton did not converge: {rep.message}")
    return [path]


def cmd_dirichlet_logistic(cfg: StudyConfig, out: str) -> list[str]:
    mesh, ops = build_domain(cfg)
    p = cfg.num("problem", "p")
    tol = cfg.num("eig", "regime_tol")
    rep = solve_dirichlet_logistic(mesh, ops, p, regime_tol=tol)
    beta = dirichlet_principal(mesh, ops).value
    print(_regime_line(beta, tol))
    print(f"u_D: converged={rep.converged} max={rep.max_value:.6g}")
    data = rep.to_json()
    data["beta_Omega"] = beta
    data["mesh_id"] = mesh.mesh_id
    path = os.path.join(out, "dirichlet_logistic.json")
    write_json(path, data)
    if not rep.converged:
        raise NumericalFailure(rep.message)
    return [path]


def cmd_continue(cfg: StudyConfig, out: str) -> list[str]:
    mesh, ops = build_domain(cfg)
    params = build_params(cfg)
    method = cfg.raw("continue", "method")
    lambda_max = cfg.num("continue", "lambda_max")
    if not lambda_max > 0:
        raise ConfigError(f"empty lambda range: lambda_max = {lambda_max}")
    start = start_point(params, ops)
    snaps = cfg.nums("continue", "snapshots")
    if method == "natural":
        checkpoints = sorted(set(cfg.nums("continue", "checkpoints")) | set(snaps))
        branch = continue_natural(
            start, lambda_max, cfg.num("continue", "dlambda"), params, ops,
            checkpoints=checkpoints, dl_min=cfg.num("continue", "dl_min"),
            dl_max=cfg.num("continue", "dl_max"), collapse_tol=cfg.num("continue", "collapse_tol"))
    elif method == "arclength":
        direction = cfg.int("continue", "direction")
        branch = continue_arclength(
            start, params, ops, direction=direction, steps=cfg.int("continue", "steps"),
            ds=cfg.num("continue", "ds"), ds_min=cfg.num("continue", "ds_min"),
            ds_max=cfg.num("continue", "ds_max"), lambda_max=lambda_max,
            collapse_tol=cfg.num("continue", "collapse_tol"), refine=cfg.flag("continue", "refine"))
    else:
        raise ConfigError(f"continue.method must be natural or arclength, got {method!r}")
    csv_path = os.path.join(out, "branch.csv")
    branch.write_csv(csv_path)
    summary = branch.to_json()
    summary.pop("points")
    summary["mesh_id"] = mesh.mesh_id
    summary["n_points"] = len(branch.points)
    summary["lambda_reached"] = float(branch.lambdas.max())
    json_path = os.path.join(out, "branch.json")
    write_json(json_path, summary)
    outputs = [csv_path, json_path]
    if snaps:
        outputs += branch.write_snapshots(snaps, out)
    lb = branch.lambda_bar_estimate
    print(f"status={branch.status} points={len(branch.points)} lambda_reached={branch.lambdas.max():.6g} "
          f"lambda_bar={'none' if lb is None else f'{lb:.6g}'} folds={len(branch.fold_events)}")
    return outputs


def cmd_monotone(cfg: StudyConfig, out: str) -> list[str]:
    mesh, ops = build_domain(cfg)
    params = build_params(cfg)
    lower = initial_profile(cfg.raw("monotone", "lower"), cfg, "monotone", mesh, ops, params)
    upper = initial_profile(cfg.raw("monotone", "upper"), cfg, "monotone", mesh, ops, params)
    which = cfg.raw("monotone", "direction")
    dirs = ["from_sub", "from_super"] if which == "both" else [which]
    sub = verify_subsolution(lower, params, ops)
    sup = verify_supersolution(upper, params, ops)
    print(f"lower barrier subsolution: {sub.ok}; upper barrier supersolution: {sup.ok}")
    outputs = []
    summary: dict[str, Any] = {"lambda": params.lam, "mesh_id": mesh.mesh_id,
                               "lower_ok": sub.ok, "upper_ok": sup.ok, "runs": {}}
    for d in dirs:
        mc = MonotoneConfig(K_shift=cfg.opt_num("monotone", "K_shift"), M_shift=cfg.opt_num("monotone", "M_shift"),
                            max_iters=cfg.int("monotone", "max_iters"), tol=cfg.num("monotone", "tol"), direction=d)
        res = monotone_iterate(lower, upper, params, ops, mc)
        g = linearized_gamma1(res.report.u, params, ops)
        run = res.report.to_json()
        run.update({"K_shift": res.K_shift, "M_shift": res.M_shift, "gamma1": g.value, "gamma1_flagged": g.flagged})
        summary["runs"][d] = run
        hist = os.path.join(out, f"history_{d}.csv")
        res.write_history_csv(hist)
        outputs.append(hist)
        print(f"{d}: converged={res.report.converged} iterations={res.report.iterations} "
              f"max={res.report.max_value:.6g} gamma1={g.value:.6g}")
    path = os.path.join(out, "monotone.json")
    write_json(path, summary)
    return [path] + outputs


def _evolution_config(cfg: StudyConfig) -> EvolutionConfig:
    return EvolutionConfig(dt=cfg.num("evolve", "dt"), t_end=cfg.num("evolve", "t_end"),
                           theta_interior=cfg.num("evolve", "theta"), record_every=cfg.int("evolve", "record_every"),
                           decay_tol=cfg.num("evolve", "decay_tol"), escape_level=cfg.num("evolve", "escape_level"),
                           blowup_tol=cfg.num("evolve", "blowup_tol"))


def cmd_evolve(cfg: StudyConfig, out: str) -> list[str]:
    mesh, ops = build_domain(cfg)
    params = build_params(cfg)
    ec = _evolution_config(cfg)
    choice = cfg.raw("evolve", "initial")
    if choice == "steady":
        rep = newton_solve(np.full(mesh.n_nodes, 0.9), params, ops)
        if not rep.converged:
            raise NumericalFailure("steady solve for the initial state failed")
        profile = rep.u
    else:
        profile = initial_profile(choice, cfg, "evolve", mesh, ops, params)
    if not np.all(np.isfinite(profile)):
        raise NumericalFailure("non-finite initial data")
    scales = cfg.nums("evolve", "basin_scales")
    if scales:
        table = basin_scan(scales, profile, params, ops, ec)
        path = os.path.join(out, "basin.csv")
        table.write_csv(path)
        print(f"basin verdicts: {[v for _, v in table.rows]} monotone={table.monotone}")
        return [path]
    tr = evolve(cfg.num("evolve", "scale") * profile, params, ops, ec)
    csv_path = os.path.join(out, "trajectory.csv")
    tr.write_csv(csv_path)
    js = os.path.join(out, "trajectory_summary.json")
    tr.write_summary(js, ec)
    print(f"verdict={tr.verdict} sup0={tr.sup_norms[0]:.6g} sup_end={tr.sup_norms[-1]:.6g}")
    return [csv_path, js]


def cmd_verify(cfg: StudyConfig, out: str) -> list[str]:
    mesh, ops = build_domain(cfg)
    base = build_params(cfg)
    kind = cfg.raw("verify", "kind")
    if kind not in ("sub", "super"):
        raise ConfigError(f"verify.kind must be sub or super, got {kind!r}")
    tol_margin = cfg.num("verify", "tol_margin")
    phi = dirichlet_principal(mesh, ops)
    deltas = cfg.nums("verify", "delta") if kind == "super" else [float("nan")]
    rows = []
    for eps in cfg.nums("verify", "eps"):
        for tau in cfg.nums("verify", "tau"):
            for delta in deltas:
                for lam in cfg.nums("verify", "lambda"):
                    row = {"kind": kind, "eps": eps, "tau": tau, "delta": delta, "lambda": lam}
                    try:
                        params = base.with_lambda(lam)
                        if kind == "sub":
                            v = build_subsolution_phi_eps(phi, eps, tau, params.q)
                            verdict = verify_subsolution(v, params, ops, tol_margin)
                        else:
                            v = build_supersolution_psi(phi, delta, eps, tau)
                            verdict = verify_supersolution(v, params, ops, tol_margin)
                    except InvalidArgumentError as exc:
                        row.update(verdict="rejected", worst_margin=float("nan"), note=str(exc))
                    else:
                        worst = max(verdict.worst_interior, verdict.worst_boundary)
                        row.update(verdict=str(verdict.ok).lower(), worst_margin=worst, note="")
                    rows.append(row)
    path = os.path.join(out, "verify.csv")
    cols = ["kind", "eps", "tau", "delta", "lambda", "verdict", "worst_margin", "note"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
    n_true = sum(r["verdict"] == "true" for r in rows)
    print(f"{len(rows)} rows: {n_true} true, {sum(r['verdict'] == 'false' for r in rows)} false, "
          f"{sum(r['verdict'] == 'rejected' for r in rows)} rejected")
    return [path]


def cmd_diagnose(cfg: StudyConfig, out: str) -> list[str]:
    mesh, ops = build_domain(cfg)
    params = build_params(cfg)
    lam = cfg.num("diagnose", "lambda")
    if not lam > 0:
        raise ConfigError(f"diagnose.lambda must be positive, got {lam}")
    branch = continue_natural(start_point(params, ops), lam, cfg.num("diagnose", "dlambda"), params, ops, tag=False)
    pt = branch.points[-1]
    if abs(pt.lam - lam) > 1e-12:
        raise NumericalFailure(f"branch stopped at lambda={pt.lam:.6g} ({branch.status})")
    at = params.with_lambda(lam)
    phi = dirichlet_principal(mesh, ops)
    regime = classify_beta(phi.value, cfg.num("eig", "regime_tol"))
    dec = decompose(pt.u, phi, ops)
    report: dict[str, Any] = {
        "lambda": lam,
        "regime": regime,
        "mesh_id": mesh.mesh_id,
        "beta_Omega": phi.value,
        "energy_E": energy(pt.u, ops),
        "energy_identity_residual": energy_identity_residual(pt.u, at, ops),
        "rescaled_residual": rescaled_residual(pt.u, at, ops),
        "decomposition": dec.to_json(),
        "energy_inequality": energy_inequality_report(pt.u, at, phi, ops, rescaled=cfg.flag("diagnose", "rescaled")),
        "angle_to_phi": profile_distance(pt.u, phi.vector, ops)["angle"],
    }
    if regime == "subcritical":
        uD = solve_dirichlet_logistic(mesh, ops, params.p)
        report["distance_to_u_D"] = profile_distance(pt.u, uD.u, ops)["h1_dist"]
    if regime == "critical":
        report["lambda0_probe"] = lambda0_rescaled_probe(mesh, ops, params.q).to_json()
    path = os.path.join(out, "diagnostics.json")
    write_json(path, report)
    print(f"lambda={lam:g} regime={regime} E={report['energy_E']:.6g} s={dec.s:.6g} "
          f"|v|/s={dec.ratios['v_over_s']:.3g}")
    return [path]


COMMANDS = {
    "eig": cmd_eig,
    "steady": cmd_steady,
    "dirichlet-logistic": cmd_dirichlet_logistic,
    "continue": cmd_continue,
    "monotone": cmd_monotone,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
    "diagnose": cmd_diagnose,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="logistic-harvest", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp_ = sub.add_parser(name)
        sp_.add_argument("--config", "-c", help="INI configuration file")
        sp_.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                         help="override a configuration key (repeatable)")
        sp_.add_argument("--out", "-o", help="output directory (overrides output.dir)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = StudyConfig.load(args.config, args.set)
        out = args.out or cfg.raw("output", "dir")
        cfg.int("output", "seed")
        os.makedirs(out, exist_ok=True)
        outputs = COMMANDS[args.command](cfg, out)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    manifest = {
        "command": args.command,
        "config_file": args.config,
        "config": cfg.echo(),
        "outputs": [os.path.basename(p) for p in outputs],
        "versions": {"logistic_harvest": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": time.perf_counter() - t0,
    }
    write_json(os.path.join(out, "manifest.json"), manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
