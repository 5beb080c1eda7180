"""Command-line surface: configuration parsing, dispatch and serialization.

Subcommands: solve, rearrange, moser, ratio, check, gap, sweep.  Reports are
canonical JSON (sorted keys, floats at 17 significant digits) so identical
run configurations produce byte-identical artifacts; fields go to CSV with
full-precision round-tripping.  Artifacts are written atomically.

Exit codes: 0 success, 2 solver non-convergence, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from . import grid as g
from .diagnostics import classify_growth
from .expressions import ParseError, parse_expression
from .functionals import adams_ratio_search
from .grid import RadialField
from .model import (ConstantPotential, ProblemConfig, check_conditions,
                    exact_growth_family, exp_critical, radial_potential,
                    user_nonlinearity)
from .rearrangement import fourier_rearrange
from .sequences import MoserParams, moser_estimates, moser_field
from .solvers import (SolverOptions, limiting_gap, minimize_nehari,
                      minimize_pohozaev, recover_solution, residual_weak)

EXIT_OK, EXIT_NOCONV, EXIT_CONFIG = 0, 2, 3


# --- canonical serialization ---------------------------------------------------

def _canon(obj):
    if isinstance(obj, float):
        if obj != obj:
            return "nan"
        if obj in (float("inf"), float("-inf")):
            return "inf" if obj > 0 else "-inf"
        return float(format(obj, ".17g"))
    if isinstance(obj, (np.floating,)):
        return _canon(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_canon(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(x) for x in obj]
    return obj


def dump_report(obj) -> str:
    return json.dumps(_canon(obj), sort_keys=True, indent=2) + "\n"


def atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_field_csv(path: str, u: RadialField):
    lines = ["r,u"]
    for r, v in zip(u.grid.nodes, u.values):
        lines.append(f"{format(float(r), '.17g')},{format(float(v), '.17g')}")
    atomic_write(path, "\n".join(lines) + "\n")


def load_field_csv(path: str, dimension: int = 4) -> RadialField:
    rows = [ln.strip() for ln in open(path) if ln.strip()]
    if rows[0].lower() != "r,u":
        raise ValueError(f"{path}: expected header 'r,u'")
    data = np.array([[float(x) for x in ln.split(",")] for ln in rows[1:]])
    r, vals = data[:, 0], data[:, 1]
    grd = g.build_grid(float(r[-1]), len(r), dimension)
    if not np.allclose(grd.nodes, r, rtol=0, atol=1e-9 * max(r[-1], 1.0)):
        raise ValueError(f"{path}: nodes are not a uniform grid from 0")
    return RadialField(grd, vals)


# --- run configuration -----------------------------------------------------------

@dataclass
class RunConfig:
    """Canonical, round-trippable description of one CLI invocation."""

    command: str
    dimension: int = 4
    gamma: float = 1.0
    lam: float = 0.5
    grid_r_max: float = 20.0
    grid_n: int = 2048
    potential_expr: Optional[str] = None
    f_expr: Optional[str] = None
    F_expr: Optional[str] = None
    alpha0: float = 1.0
    theta: Optional[float] = None     # exact-growth family parameter
    g_expr: Optional[str] = None
    K: float = 1.0
    L: Optional[float] = None
    budget: int = 400
    b_values: tuple = (3.0, 5.0, 8.0)
    max_iters: int = 400
    tol: float = 1e-10
    rearrange_interval: int = 10
    refine: int = 8
    seeds: tuple = (0,)
    jobs: int = 1
    sweep_param: Optional[str] = None
    sweep_values: tuple = ()
    input_field: Optional[str] = None
    out_dir: str = "out"

    def to_json(self) -> str:
        return dump_report(asdict(self))

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        raw = json.loads(text)
        for key in ("b_values", "seeds", "sweep_values"):
            if key in raw and isinstance(raw[key], list):
                raw[key] = tuple(raw[key])
        return RunConfig(**raw)


def _build_problem(rc: RunConfig):
    grd = g.build_grid(rc.grid_r_max, rc.grid_n, rc.dimension)
    if rc.theta is not None:
        spec = exact_growth_family(rc.theta)
    elif rc.f_expr is not None:
        spec = user_nonlinearity(rc.f_expr, rc.F_expr, alpha0=rc.alpha0)
    else:
        spec = exp_critical(rc.lam, rc.dimension)
    if rc.potential_expr:
        vfun = parse_expression(rc.potential_expr)
        pot = radial_potential(vfun, grd)
    else:
        pot = ConstantPotential(rc.gamma)
    config = ProblemConfig(rc.dimension, rc.lam, pot, spec)
    return grd, config


def _default_init(grd) -> RadialField:
    return RadialField(grd, np.exp(-grd.nodes**2 / 2.0))


def _solver_options(rc: RunConfig) -> SolverOptions:
    return SolverOptions(max_iters=rc.max_iters, tol=rc.tol,
                         rearrange_interval=rc.rearrange_interval,
                         refine=rc.refine)


def _report_header(rc: RunConfig) -> dict:
    echo = asdict(rc)
    echo.pop("out_dir")            # environmental, not part of the run identity
    return {"version": __version__, "config": echo}


# --- command implementations -------------------------------------------------------

def _cmd_solve(rc: RunConfig) -> int:
    grd, config = _build_problem(rc)
    rep = minimize_pohozaev(config, _default_init(grd), _solver_options(rc))
    recovered = recover_solution(rep.field, rep.lagrange_theta, config)
    out = _report_header(rc)
    out["solve"] = {
        "objective": rep.objective,
        "lagrange_theta": rep.lagrange_theta,
        "residual_weak": rep.residual_weak,
        "constraint_residual": rep.constraint_residual,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "warnings": rep.warnings,
        "recovered_residual_weak": residual_weak(recovered, config),
        "trace": rep.trace,
    }
    atomic_write(os.path.join(rc.out_dir, "solve.json"), dump_report(out))
    save_field_csv(os.path.join(rc.out_dir, "solution.csv"), recovered)
    return EXIT_OK if rep.converged else EXIT_NOCONV


def _cmd_rearrange(rc: RunConfig) -> int:
    if not rc.input_field:
        raise ValueError("rearrange requires --input <field.csv>")
    u = load_field_csv(rc.input_field, rc.dimension)
    w = fourier_rearrange(u)
    out = _report_header(rc)
    out["rearrange"] = asdict(w.report)
    atomic_write(os.path.join(rc.out_dir, "rearrange.json"), dump_report(out))
    save_field_csv(os.path.join(rc.out_dir, "rearrange_input.csv"), u)
    save_field_csv(os.path.join(rc.out_dir, "rearrange_output.csv"),
                   RadialField(u.grid, w.values))
    return EXIT_OK


def _cmd_moser(rc: RunConfig) -> int:
    rows = []
    beta = 32.0 * np.pi**2
    for b in rc.b_values:
        est = moser_estimates(b, rc.K)
        rows.append({"b": b, "K": rc.K, "l2_sq": est["l2_sq"],
                     "lap_l2_sq": est["lap_l2_sq"],
                     "excess": est["lap_l2_sq"] - beta * rc.K,
                     "n_points": est["n_points"]})
    bs = np.array([r["b"] for r in rows])
    ex = np.array([abs(r["excess"]) for r in rows])
    slope = float(np.polyfit(np.log(bs), np.log(ex), 1)[0]) if len(rows) >= 2 else float("nan")
    out = _report_header(rc)
    out["moser"] = {"rows": rows, "fitted_excess_exponent": slope}
    atomic_write(os.path.join(rc.out_dir, "moser.json"), dump_report(out))
    lines = ["b,l2_sq,lap_l2_sq,excess"]
    for r in rows:
        lines.append(",".join(format(float(r[k]), ".17g")
                              for k in ("b", "l2_sq", "lap_l2_sq", "excess")))
    atomic_write(os.path.join(rc.out_dir, "moser.csv"), "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_ratio(rc: RunConfig) -> int:
    _, config = _build_problem(rc)
    L = rc.L if rc.L is not None else config.adams_beta / config.nonlinearity.alpha0
    rep = adams_ratio_search(config, L, rc.budget)
    out = _report_header(rc)
    out["ratio"] = asdict(rep)
    atomic_write(os.path.join(rc.out_dir, "ratio.json"), dump_report(out))
    return EXIT_OK


def _cmd_check(rc: RunConfig) -> int:
    out = _report_header(rc)
    if rc.g_expr:
        gfun = parse_expression(rc.g_expr)
        cls = classify_growth(gfun, rc.K)
        out["growth"] = asdict(cls)
    if rc.theta is not None or rc.f_expr is not None or rc.g_expr is None:
        _, config = _build_problem(rc)
        rep = check_conditions(config.nonlinearity, np.geomspace(0.1, 5.0, 200))
        out["conditions"] = asdict(rep)
    atomic_write(os.path.join(rc.out_dir, "check.json"), dump_report(out))
    return EXIT_OK


def _cmd_gap(rc: RunConfig) -> int:
    if not rc.potential_expr:
        raise ValueError("gap requires --V <expression in t (= radius)>")
    grd, config = _build_problem(rc)
    rep = limiting_gap(config, _default_init(grd), _solver_options(rc))
    out = _report_header(rc)
    out["gap"] = asdict(rep)
    atomic_write(os.path.join(rc.out_dir, "gap.json"), dump_report(out))
    return EXIT_OK


def _cmd_sweep(rc: RunConfig) -> int:
    if rc.sweep_param not in ("lambda", "gamma"):
        raise ValueError("sweep requires --sweep-param lambda|gamma and --sweep-values")
    jobs = int(os.environ.get("BIHARM_JOBS", rc.jobs))

    def one(val):
        sub = RunConfig(**{**asdict(rc), "command": "solve",
                           ("lam" if rc.sweep_param == "lambda" else "gamma"): val,
                           "sweep_param": None, "sweep_values": ()})
        grd, config = _build_problem(sub)
        rep = minimize_pohozaev(config, _default_init(grd), _solver_options(sub))
        return {"value": val, "objective": rep.objective,
                "lagrange_theta": rep.lagrange_theta,
                "constraint_residual": rep.constraint_residual,
                "converged": rep.converged}

    values = list(rc.sweep_values)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(one, values))
    else:
        results = [one(v) for v in values]
    out = _report_header(rc)
    out["sweep"] = {"param": rc.sweep_param, "results": results}
    atomic_write(os.path.join(rc.out_dir, "sweep.json"), dump_report(out))
    return EXIT_OK if all(r["converged"] for r in results) else EXIT_NOCONV


_COMMANDS = {"solve": _cmd_solve, "rearrange": _cmd_rearrange, "moser": _cmd_moser,
             "ratio": _cmd_ratio, "check": _cmd_check, "gap": _cmd_gap,
             "sweep": _cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="biharm",
                                 description="Radial variational solver for "
                                             "bi-harmonic ground states")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON RunConfig file; flags take precedence")
        p.add_argument("--dim", type=int, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--grid", default=None, help="r_max:n_points")
        p.add_argument("--V", dest="potential_expr", default=None,
                       help="radial potential expression in t (= radius)")
        p.add_argument("--f", dest="f_expr", default=None)
        p.add_argument("--F", dest="F_expr", default=None)
        p.add_argument("--alpha0", type=float, default=None)
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--g", dest="g_expr", default=None)
        p.add_argument("--K", type=float, default=None)
        p.add_argument("--L", type=float, default=None)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--b-values", default=None, help="comma-separated b sweep")
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--rearrange-interval", type=int, default=None)
        p.add_argument("--refine", type=int, default=None)
        p.add_argument("--seeds", default=None, help="comma-separated seeds")
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--sweep-param", default=None)
        p.add_argument("--sweep-values", default=None, help="comma-separated values")
        p.add_argument("--input", dest="input_field", default=None)
        p.add_argument("--out-dir", default=None)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    rc = RunConfig(command=args.command)
    if args.config:
        rc = RunConfig.from_json(open(args.config).read())
        rc.command = args.command
    simple = {"gamma": "gamma", "lam": "lam", "potential_expr": "potential_expr",
              "f_expr": "f_expr", "F_expr": "F_expr", "alpha0": "alpha0",
              "theta": "theta", "g_expr": "g_expr", "K": "K", "L": "L",
              "budget": "budget", "max_iters": "max_iters", "tol": "tol",
              "rearrange_interval": "rearrange_interval", "refine": "refine",
              "jobs": "jobs", "sweep_param": "sweep_param",
              "input_field": "input_field", "out_dir": "out_dir"}
    for arg_name, field_name in simple.items():
        val = getattr(args, arg_name, None)
        if val is not None:
            setattr(rc, field_name, val)
    if args.dim is not None:
        rc.dimension = args.dim
        if args.grid is None and rc.dimension == 2:
            rc.grid_r_max, rc.grid_n = 30.0, 2048
    if args.grid is not None:
        r_max, n = args.grid.split(":")
        rc.grid_r_max, rc.grid_n = float(r_max), int(n)
    if args.b_values is not None:
        rc.b_values = tuple(float(x) for x in args.b_values.split(","))
    if args.seeds is not None:
        rc.seeds = tuple(int(x) for x in args.seeds.split(","))
    if args.sweep_values is not None:
        rc.sweep_values = tuple(float(x) for x in args.sweep_values.split(","))
    return rc


def run(rc: RunConfig) -> int:
    """Dispatch one run configuration; returns the exit code."""
    try:
        handler = _COMMANDS[rc.command]
    except KeyError:
        raise ValueError(f"unknown command {rc.command!r}")
    return handler(rc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = config_from_args(args)
        code = run(rc)
    except (ParseError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
