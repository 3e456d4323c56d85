"""Command-line entry point.

Exit codes: 0 success, 1 configuration / unsupported combination,
2 solver failure (diverged, margin-stuck) or verification criteria not met,
3 theorem contradiction flag.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from . import fiber as fb
from . import graphgeo as gg
from . import identities as idn
from . import reporting
from . import solver as so
from . import warp as wp
from .errors import (ConfigurationError, DomainError, GeometryError, GrwlabError,
                     UnsupportedFiberError, UnsupportedRegimeError)
from .fields import GraphFamily, random_family

EXIT_OK, EXIT_CONFIG, EXIT_FAIL, EXIT_CONTRADICTION = 0, 1, 2, 3

REPORT_KEYS = ("schema", "version", "seed", "config", "verdict", "contradiction", "residual",
               "solution", "wall_time_s", "theorems", "message")
SWEEP_COLUMNS = ("value", "verdict", "iterations", "final_residual", "osc_u", "sup_grad_ratio",
                 "wall_time_s")


def _err(msg):
    print(f"grwlab: error: {msg}", file=sys.stderr)


def _out_dir(cfg, override):
    return Path(override if override else cfg.output["directory"])


def _initial(cfg, mesh, warp):
    base = cfg.init["base"]
    lo, hi = warp.domain
    if not lo < base < hi:
        raise cfg.error("init", "base", f"base level {base} lies outside the warp domain ({lo}, {hi})")
    values = None
    if cfg.solver.init == "custom":
        path = cfg.init.get("values_file")
        if not path:
            raise cfg.error("init", "values_file", "custom initial data need a values_file")
        values = np.loadtxt(path, dtype=float).ravel()
        if values.size != mesh.n_vertices:
            raise cfg.error("init", "values_file",
                            f"{values.size} values for a mesh with {mesh.n_vertices} vertices")
    return so.initial_graph(mesh, warp, cfg.solver, base, cfg.init["amplitude"], values)


def solve_report(cfg, rep: so.SolveReport) -> dict:
    return {
        "schema": "grwlab.solve/1",
        "version": __version__,
        "seed": cfg.init["seed"],
        "config": cfg.to_dict(),
        "verdict": rep.verdict,
        "contradiction": rep.contradiction,
        "residual": {
            "tol": rep.config["tol"],
            "initial": rep.history[0],
            "final": rep.final_residual,
            "iterations": rep.iterations,
            "newton_steps": rep.steps.get("newton", 0),
            "descent_steps": rep.steps.get("descent", 0),
            "history_file": "residual_history.csv",
        },
        "solution": {
            "osc_u": rep.osc,
            "mean_u": float(np.mean(rep.solution.values)),
            "min_u": float(np.min(rep.solution.values)),
            "max_u": float(np.max(rep.solution.values)),
            "sup_grad_ratio": rep.sup_grad_ratio,
        },
        "wall_time_s": rep.wall_time,
        "theorems": [t.to_dict() for t in rep.theorems],
        "message": rep.message,
    }


def exit_for(rep: so.SolveReport) -> int:
    if rep.contradiction:
        return EXIT_CONTRADICTION
    if rep.verdict in ("diverged", "margin-stuck"):
        return EXIT_FAIL
    return EXIT_OK


def run_solve(cfg, out: Path, quiet=False):
    """Solve and write reports; returns ``(exit code, SolveReport)``."""
    mesh = cfg.build_mesh()
    warp = cfg.build_warp()
    u0, _ = _initial(cfg, mesh, warp)
    rep = so.solve(u0, cfg.solver)
    fmts = cfg.output["formats"]
    out.mkdir(parents=True, exist_ok=True)
    reporting.write_json(out / "report.json", solve_report(cfg, rep))
    reporting.write_csv(out / "residual_history.csv", ("iteration", "residual_inf"),
                        list(enumerate(rep.history)))
    if "png" in fmts:
        from . import plots
        plots.residual_history(rep.history, cfg.solver.tol, out / "residual_history.png",
                               f"{mesh.kind}, f = {warp.kind}")
        plots.graph_field(mesh, rep.solution.values, out / "solution.png", f"verdict: {rep.verdict}")
    if not quiet:
        print(f"verdict: {rep.verdict}  iterations: {rep.iterations}  "
              f"residual: {rep.final_residual:.3e}  osc(u): {rep.osc:.3e}")
        if rep.contradiction:
            print("CONTRADICTION: a theorem whose hypotheses hold predicts a different "
                  "conclusion; rerun at a finer resolution")
        if rep.message:
            print(rep.message)
        print(f"wrote {out / 'report.json'}")
    return exit_for(rep), rep


def cmd_solve(args) -> int:
    cfg = cfgmod.load(args.config)
    code, _ = run_solve(cfg, _out_dir(cfg, args.out))
    return code


def _verify_family(cfg, mesh, warp, suite):
    v = cfg.verify
    base = v.get("base", cfg.init["base"])
    kind = cfg.solver.init
    if kind == "constant":
        return GraphFamily(float(base))
    if kind == "random-bump":
        amp = v.get("amplitude", cfg.init["amplitude"])
        return random_family(mesh, warp, cfg.init["seed"], amp, base, cfg.solver.margin)
    raise cfg.error("init", "kind", f"suite {suite!r} needs constant or random-bump initial data")


def run_verify(cfg, suite, out: Path, quiet=False):
    mesh = cfg.build_mesh()
    warp = cfg.build_warp()
    fam = _verify_family(cfg, mesh, warp, suite)
    u = gg.GraphFunction(mesh, warp, fam(mesh), cfg.solver.margin)
    v = cfg.verify
    levels = v["levels"]
    kw = {} if "threshold" not in v else {"threshold": v["threshold"]}
    if suite == "connection":
        rep = idn.verify_connection_identities(u, fam, levels, **kw)
    elif suite == "laplacian":
        rep = idn.verify_laplacian_identities(u, fam, levels, **kw)
    elif suite == "integral":
        rep = idn.verify_integral_formula(u, fam, levels, **kw)
    elif suite == "lk":
        rep = idn.verify_Lk_display(u, v["j"], fam, levels, **kw)
    elif suite == "el":
        rep = idn.verify_EL_equivalence(u, v["directions"], v["step"], cfg.init["seed"])
    else:
        rep = idn.maximum_principle_sign_check(u)
    doc = {"schema": "grwlab.verify/1", "version": __version__, "seed": cfg.init["seed"],
           "suite": suite, "config": cfg.to_dict(), "report": rep.to_dict()}
    out.mkdir(parents=True, exist_ok=True)
    reporting.write_json(out / "identity_report.json", doc)
    rows = [(l.name, i, h, m, l2) for l in rep.ladders
            for i, (h, m, l2) in enumerate(zip(l.h, l.max_error, l.l2_error))]
    reporting.write_csv(out / "identity_ladder.csv", ("identity", "level", "h", "max", "l2"), rows)
    if "png" in cfg.output["formats"]:
        from . import plots
        plots.ladder(rep, out / "identity_ladder.png")
    if not quiet:
        for l in rep.ladders:
            order = "n/a" if l.order is None else f"{l.order:.3f}"
            errs = ", ".join(f"{e:.3e}" for e in l.max_error)
            print(f"{l.name}: max residual [{errs}]  order {order}  "
                  f"{'PASS' if l.passed else 'FAIL'}")
        print(f"{suite}: {'PASS' if rep.passed else 'FAIL'}")
    return (EXIT_OK if rep.passed else EXIT_FAIL), rep


def cmd_verify(args) -> int:
    cfg = cfgmod.load(args.config)
    suite = args.suite or cfg.verify.get("suite")
    if suite is None:
        raise ConfigurationError("no suite given (use --suite or verify.suite)")
    if suite not in cfgmod.SUITES:
        raise ConfigurationError(f"unknown suite {suite!r}; expected one of {cfgmod.SUITES}")
    code, _ = run_verify(cfg, suite, _out_dir(cfg, args.out))
    return code


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def parse_warp_arg(text: str) -> wp.WarpSpec:
    """NAME[:p1,p2,...][@lo,hi]"""
    domain = None
    if "@" in text:
        text, dom = text.split("@", 1)
        domain = _floats(dom)
    name, _, params = text.partition(":")
    return wp.build_warp(name.strip(), _floats(params) if params else (), domain)


def parse_fiber_arg(text: str) -> fb.FiberMesh:
    """sphere[:subdivisions] | torus[:N1,N2[,L1,L2]] | circle[:N[,L]]"""
    name, _, params = text.partition(":")
    name = name.strip()
    p = _floats(params) if params else ()
    if name == "sphere":
        return fb.build_sphere(int(p[0]) if p else 3)
    if name == "torus":
        res = tuple(int(x) for x in p[:2]) if p else (32, 32)
        lengths = tuple(p[2:4]) if len(p) >= 4 else (2 * math.pi, 2 * math.pi)
        return fb.build_torus(res, lengths)
    if name == "circle":
        return fb.build_circle(int(p[0]) if p else 64, p[1] if len(p) > 1 else 2 * math.pi)
    raise ConfigurationError(f"unknown fiber {name!r}; expected one of {fb.BACKENDS}")


def _fmt_conditions(rep: wp.ConditionReport, fiber) -> str:
    lines = [
        f"interval: [{rep.interval[0]:g}, {rep.interval[1]:g}]  fiber: {fiber.kind} (n = {fiber.dimension})",
        f"Hubble sign (f'): {rep.hubble.sign}  [min {rep.hubble.fp_min:.6g}, max {rep.hubble.fp_max:.6g}]",
        f"(log f)'': min {rep.log_convexity_min:.6g}, max {rep.log_convexity_max:.6g}"
        f"  log-convex: {rep.log_convex}  strict: {rep.strictly_log_convex}",
        f"NCC margin: {rep.ncc.margin:.6g}  holds: {rep.ncc.holds}  strict: {rep.ncc.strict}",
    ]
    e = rep.einstein
    if e is None:
        lines.append("Einstein: fiber has no constant Ricci curvature")
    else:
        lines.append(f"Einstein (Ricci oracle): {e.oracle_einstein}  cbar = {e.oracle_ambient_constant:.6g}"
                     f"  residual {e.oracle_residual:.3e}")
        lines.append(f"Einstein (printed identities): first holds {e.ratio_holds}"
                     f" (residual {e.ratio_residual:.3e}), log-convexity route {e.log_route_einstein}")
        lines.extend(f"note: {n}" for n in e.notes)
    lines.extend(f"flag: {f}" for f in rep.flags)
    return "\n".join(lines)


def cmd_conditions(args) -> int:
    w = parse_warp_arg(args.warp)
    mesh = parse_fiber_arg(args.fiber)
    interval = _floats(args.interval)
    if len(interval) != 2:
        raise ConfigurationError(f"--interval needs A,B, got {args.interval!r}")
    rep = wp.conditions(w, mesh, interval)
    print(_fmt_conditions(rep, mesh))
    if args.out:
        doc = {"schema": "grwlab.conditions/1", "version": __version__, "warp": w.to_dict(),
               "fiber": {"kind": mesh.kind, "dimension": mesh.dimension},
               "report": _asdict(rep)}
        path = reporting.write_json(Path(args.out) / "conditions.json", doc)
        print(f"wrote {path}")
    return EXIT_OK


def _asdict(obj):
    from dataclasses import asdict, is_dataclass
    return asdict(obj) if is_dataclass(obj) else obj


def _sweep_one(job):
    cfg, axis, value, out = job
    t0 = time.perf_counter()
    run_cfg = cfg.with_value(axis, value)
    code, rep = run_solve(run_cfg, out, quiet=True)
    return code, (float(value), rep.verdict, rep.iterations, rep.final_residual, rep.osc,
                  rep.sup_grad_ratio, time.perf_counter() - t0)


def cmd_sweep(args) -> int:
    cfg = cfgmod.load(args.config)
    section, key = cfgmod.split_key(args.axis)
    if not cfgmod.SCHEMA[section][key][1]:
        raise ConfigurationError(f"sweep axis {args.axis} is not numeric")
    raw = [v.strip() for v in args.values.split(",") if v.strip()]
    if not raw:
        raise ConfigurationError("sweep needs at least one value")
    for v in raw:
        try:
            float(v)
        except ValueError as exc:
            raise ConfigurationError(f"sweep value {v!r} is not numeric") from exc
    out = _out_dir(cfg, args.out)
    for v in raw:  # validate every override before running anything
        cfg.with_value(args.axis, v)
    jobs = [(cfg, args.axis, v, out / f"run_{i:03d}") for i, v in enumerate(raw)]
    if args.parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)) as ex:
            results = list(ex.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    rows = [r for _, r in results]
    reporting.write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    if "png" in cfg.output["formats"]:
        from . import plots
        plots.sweep(args.axis, rows, out / "sweep.png")
    for r in rows:
        print(f"{args.axis} = {r[0]:g}: {r[1]}  iterations {r[2]}  residual {r[3]:.3e}  osc {r[4]:.3e}")
    print(f"wrote {out / 'sweep.csv'}")
    codes = [c for c, _ in results]
    if EXIT_CONTRADICTION in codes:
        return EXIT_CONTRADICTION
    return EXIT_FAIL if EXIT_FAIL in codes else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grwlab", description="Prescribed mean curvature graphs in warped products.")
    p.add_argument("--version", action="version", version=f"grwlab {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("solve", help="solve H(u) = f'(u)/f(u) from a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (overrides output.directory)")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="run an identity suite on a refinement ladder")
    v.add_argument("--config", required=True)
    v.add_argument("--suite", choices=cfgmod.SUITES)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("conditions", help="Hubble sign, log-convexity, NCC and Einstein checks")
    c.add_argument("--warp", required=True, help="NAME[:p1,p2,...][@lo,hi]")
    c.add_argument("--fiber", required=True, help="sphere[:subdiv] | torus[:N1,N2] | circle[:N]")
    c.add_argument("--interval", required=True, help="A,B")
    c.add_argument("--out", help="also write conditions.json here")
    c.set_defaults(func=cmd_conditions)

    w = sub.add_parser("sweep", help="repeat solve over values of one numeric key")
    w.add_argument("--config", required=True)
    w.add_argument("--axis", required=True, help="section.key, e.g. init.amplitude")
    w.add_argument("--values", required=True, help="v1,v2,...")
    w.add_argument("--out")
    w.add_argument("--parallel", action="store_true", help="run values in worker processes")
    w.set_defaults(func=cmd_sweep)
    return p


def _join_negative(argv):
    """Let ``--interval -1,1`` through: argparse would read -1,1 as an option."""
    out, it = [], iter(argv)
    for a in it:
        if a in ("--interval", "--values"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and nxt[1:2].replace(".", "").isdigit():
                out.append(f"{a}={nxt}")
                continue
            out.append(a)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigurationError, DomainError, UnsupportedFiberError, UnsupportedRegimeError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except GeometryError as exc:
        _err(f"initial data: {exc}")
        return EXIT_CONFIG
    except GrwlabError as exc:
        _err(str(exc))
        return EXIT_FAIL
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
