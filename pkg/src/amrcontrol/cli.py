"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .control import CostWeights, FBSConfig, NoConvergence, constant_control_oracle, solve_fbs
from .dynamics import IntegrationError, IntegratorConfig, simulate_dimensional, simulate_dimensionless
from .equilibria import DegenerateCase, equilibria_report, find_equilibria
from .model import ParameterError, compute_thresholds, nondimensionalize
from .output import ATLAS_COLUMNS, CONTROL_COLUMNS, control_rows, csv_text, trajectory_rows, write_json
from .scenarios import ANTIBIOTICS, DOSING, IMMUNE, REGIONS, Scenario, load_scenario, resolve, run_figure, scenario_from_name
from .stability import MarginalSpectrum, classify, classify_region, region_atlas

PARAM_FLAGS = {
    # flag -> DimensionalParams / Controls field
    "--beta-S": "beta_S",
    "--beta-R": "beta_R",
    "--alpha-bar": "alpha_bar",
    "--Lambda": "Lambda",
    "--gamma-bar": "gamma_bar",
    "--q-bar": "q_bar",
    "--a": "a",
    "--K": "K",
    "--h1": "h1",
    "--h2": "h2",
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_source(p):
    src = p.add_argument_group("parameter source (flags > scenario file > catalog)")
    ex = src.add_mutually_exclusive_group()
    ex.add_argument("--scenario", help="catalog name region-antibiotic[-dosing][-immune], e.g. south-amoxicillin")
    ex.add_argument("--scenario-file", type=Path, help="JSON file with Scenario fields")
    src.add_argument("--region", choices=REGIONS)
    src.add_argument("--antibiotic", choices=ANTIBIOTICS)
    src.add_argument("--dosing", choices=tuple(DOSING))
    src.add_argument("--immune", choices=tuple(IMMUNE))
    for flag, dest in PARAM_FLAGS.items():
        src.add_argument(flag, dest=dest, type=float, metavar="X")
    src.add_argument("--S0", type=float, help="initial sensitive population (default 1)")
    src.add_argument("--R0", type=float, help="initial resistant population (default 0)")
    src.add_argument("--T", type=float, help="horizon in hours (default 10)")


def _add_integrator(p):
    g = p.add_argument_group("integrator")
    g.add_argument("--method", choices=("dopri45", "rk4"), default="dopri45")
    g.add_argument("--rel-tol", type=float, default=1e-8)
    g.add_argument("--abs-tol", type=float, default=1e-10)
    g.add_argument("--step", type=float, default=1e-3, help="fixed step for rk4")
    g.add_argument("--max-steps", type=int, default=1_000_000)


def _add_weights(p):
    g = p.add_argument_group("cost weights")
    d = CostWeights()
    for name in ("c", "w1", "w2", "b1", "b2"):
        g.add_argument(f"--{name}", type=float, default=getattr(d, name))
    g.add_argument("--n-grid", type=int, default=FBSConfig().n_grid)


def build_parser() -> Parser:
    ap = Parser(prog="amrcontrol", description=__doc__, allow_abbrev=False)
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized sampling (classify --basin)")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND", parser_class=Parser)

    s = sub.add_parser("simulate", help="integrate the model and emit a trajectory CSV", allow_abbrev=False)
    _add_source(s)
    _add_integrator(s)
    s.add_argument("--formulation", choices=("dimensional", "dimensionless"), default="dimensional")
    s.add_argument("--n-out", type=int, default=1001, help="number of output grid points")
    s.add_argument("--out", type=Path, help="CSV path (default stdout)")

    e = sub.add_parser("equilibria", help="JSON report of equilibria and thresholds", allow_abbrev=False)
    _add_source(e)
    e.add_argument("--out", type=Path)

    c = sub.add_parser("classify", help="stability verdict per equilibrium", allow_abbrev=False)
    _add_source(c)
    c.add_argument("--tol", type=float, default=1e-9, help="marginal band on eigenvalue real parts")
    c.add_argument("--basin", type=int, default=0, metavar="N",
                   help="also integrate N random starts in Omega and report where they settle")
    c.add_argument("--basin-horizon", type=float, default=1000.0, help="hours to integrate each start")

    r = sub.add_parser("regions", help="R1-R5 atlas over a threshold grid", allow_abbrev=False)
    r.add_argument("--hs", type=float, required=True)
    r.add_argument("--grid", type=int, default=200)
    r.add_argument("--rs-max", type=float, default=2.0)
    r.add_argument("--rr-max", type=float, default=2.0)
    r.add_argument("--out", type=Path)

    k = sub.add_parser("control", help="forward-backward sweep optimal control", allow_abbrev=False)
    _add_source(k)
    _add_weights(k)
    d = FBSConfig()
    k.add_argument("--omega", type=float, default=d.relaxation, help="relaxation factor")
    k.add_argument("--tol", type=float, default=d.tol)
    k.add_argument("--max-iter", type=int, default=d.max_iter)
    k.add_argument("--out", type=Path, help="CSV path (default stdout)")
    k.add_argument("--summary", type=Path, help="JSON summary path")

    o = sub.add_parser("oracle", help="cost of every constant control on a grid", allow_abbrev=False)
    _add_source(o)
    _add_weights(o)
    o.add_argument("--resolution", type=int, default=11)
    o.add_argument("--out", type=Path)

    f = sub.add_parser("figure", help="reproduce a figure experiment", allow_abbrev=False)
    f.add_argument("tag", choices=("fig4", "fig5", "fig6", "fig8"))
    f.add_argument("--out-dir", type=Path, default=Path("figures"))
    f.add_argument("--T", type=float, default=10.0)
    f.add_argument("--S0", type=float, default=1.0)
    f.add_argument("--R0", type=float, default=0.0)
    f.add_argument("--n-out", type=int, default=1001)
    return ap


def scenario_from_args(args) -> Scenario:
    if args.scenario:
        scen = scenario_from_name(args.scenario)
    elif args.scenario_file:
        scen = load_scenario(args.scenario_file)
    else:
        scen = Scenario()
    d = asdict(scen)
    for key in ("region", "antibiotic", "dosing", "immune", "S0", "R0", "T"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    d["overrides"] = {**scen.overrides,
                      **{f: getattr(args, f) for f in PARAM_FLAGS.values() if getattr(args, f) is not None}}
    return Scenario(**d)


def _meta(args, scen: Scenario | None = None, p=None, c=None) -> dict:
    meta = {"command": args.command, "seed": args.seed}
    if scen is not None:
        meta["scenario"] = scen.label
        meta.update(dosing=scen.dosing, immune=scen.immune, S0=scen.S0, R0=scen.R0, T=scen.T)
    if p is not None:
        meta.update(asdict(p))
    if c is not None:
        meta.update(h1=c.h1, h2=c.h2)
    for k, v in sorted(vars(args).items()):
        if k not in meta and isinstance(v, (int, float)) and not isinstance(v, bool):
            meta[k] = v
    return meta


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        from .output import atomic_write_text

        atomic_write_text(out, text)


def cmd_simulate(args):
    scen = scenario_from_args(args)
    p, c = resolve(scen)
    cfg = IntegratorConfig(method=args.method, step=args.step, rel_tol=args.rel_tol,
                           abs_tol=args.abs_tol, max_steps=args.max_steps)
    if args.n_out < 2:
        raise ParameterError("n-out", ">= 2", args.n_out)
    if args.formulation == "dimensional":
        grid = np.linspace(0.0, scen.T, args.n_out)
        traj = simulate_dimensional(p, c, scen.initial_state, scen.T, cfg, t_eval=grid)
    else:
        dp = nondimensionalize(p, c)
        tau_end = scen.T * dp.time_scale
        grid = np.linspace(0.0, tau_end, args.n_out)
        traj = simulate_dimensionless(dp, (scen.S0 / p.K, scen.R0 / p.K), tau_end, cfg, t_eval=grid)
    _emit(csv_text(traj.columns, trajectory_rows(traj), _meta(args, scen, p, c)), args.out)


def cmd_equilibria(args):
    scen = scenario_from_args(args)
    p, c = resolve(scen)
    _emit(equilibria_report(nondimensionalize(p, c)) + "\n", args.out)


def cmd_classify(args):
    scen = scenario_from_args(args)
    p, c = resolve(scen)
    dp = nondimensionalize(p, c)
    eqs = find_equilibria(dp)
    out = sys.stdout
    out.write(f"region {classify_region(compute_thresholds(dp), args.tol)}\n")
    for eq in eqs:
        v = classify(dp, eq, args.tol)
        where = "" if eq.point is None or not eq.exists else f" at ({eq.point.x!r}, {eq.point.y!r})"
        out.write(f"{eq.kind} {v.label} theorem={v.theorem_label} agree={str(v.agree).lower()}{where}\n")
    if args.basin:
        rng = np.random.default_rng(args.seed)
        existing = [e for e in eqs if e.exists]
        pts = np.array([[e.point.x, e.point.y] for e in existing])
        counts = {e.kind: 0 for e in existing}
        cfg = IntegratorConfig()
        tau_end = args.basin_horizon * dp.time_scale
        for _ in range(args.basin):
            u = rng.random(2)
            if u.sum() > 1:
                u = 1 - u
            fin = simulate_dimensionless(dp, tuple(u), tau_end, cfg).final
            counts[existing[int(np.argmin(np.linalg.norm(pts - fin, axis=1)))].kind] += 1
        for kind, n in counts.items():
            out.write(f"basin {kind} {n}/{args.basin}\n")


def cmd_regions(args):
    if not args.hs > 0:
        raise ParameterError("hs", "> 0", args.hs)
    if args.grid < 1:
        raise ParameterError("grid", ">= 1", args.grid)
    for name in ("rs_max", "rr_max"):
        if not getattr(args, name) > 0:
            raise ParameterError(name.replace("_", "-"), "> 0", getattr(args, name))
    rows = region_atlas(args.hs, args.grid, args.rs_max, args.rr_max)
    _emit(csv_text(ATLAS_COLUMNS, rows, _meta(args)), args.out)


def cmd_control(args):
    scen = scenario_from_args(args)
    p, _ = resolve(scen)
    w = CostWeights(args.c, args.w1, args.w2, args.b1, args.b2)
    cfg = FBSConfig(n_grid=args.n_grid, relaxation=args.omega, tol=args.tol, max_iter=args.max_iter)
    sol = solve_fbs(p, w, scen.initial_state, scen.T, cfg, raise_on_failure=True)
    meta = dict(_meta(args, scen, p), J=sol.J, iterations=sol.iterations)
    _emit(csv_text(CONTROL_COLUMNS, control_rows(sol), meta), args.out)
    if args.summary:
        write_json(args.summary, sol.summary())


def cmd_oracle(args):
    scen = scenario_from_args(args)
    p, _ = resolve(scen)
    w = CostWeights(args.c, args.w1, args.w2, args.b1, args.b2)
    res = constant_control_oracle(p, w, scen.initial_state, scen.T, args.resolution, args.n_grid)
    meta = dict(_meta(args, scen, p), best_h1=res.best[0], best_h2=res.best[1], J_min=res.J_min)
    _emit(csv_text(("h1", "h2", "J"), res.table, meta), args.out)


def cmd_figure(args):
    if args.n_out < 2:
        raise ParameterError("n-out", ">= 2", args.n_out)
    res = run_figure(args.tag, args.out_dir, T=args.T, S0=args.S0, R0=args.R0, n_out=args.n_out)
    for f in res.files:
        print(f)
    write_json(Path(args.out_dir) / f"{args.tag}_terminal.json", res.terminal)


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "classify": cmd_classify,
    "regions": cmd_regions,
    "control": cmd_control,
    "oracle": cmd_oracle,
    "figure": cmd_figure,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except NoConvergence as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, DegenerateCase, MarginalSpectrum) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
