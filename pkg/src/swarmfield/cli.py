"""Command-line entry point: ``swarmfield run|sweep|oracle|check-bounds|presets``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import scenarios as sc
from .errors import ConfigurationError, SolverDiagnosticError


def _overrides(args) -> dict:
    over: dict = {}
    if getattr(args, "grid", None):
        over["domain"] = {"nx": args.grid, "ny": args.grid}
    if getattr(args, "nt", None):
        over["time"] = {"nt": args.nt}
    if getattr(args, "no_snapshots", False):
        over["output"] = {"snapshots": False}
    return over


def _cmd_run(args) -> int:
    cfg = sc.load_config(args.config, _overrides(args))
    if args.out:
        cfg.out_dir = args.out
        cfg.resolved["output"]["dir"] = str(args.out)

    def progress(it, res):
        print(f"  iteration {it:3d}  residual {res:.3e}", file=sys.stderr)

    res = sc.run_scenario(cfg, progress=None if args.quiet else progress)
    print(json.dumps(res.summary, indent=2, default=float))
    if res.exit_code == sc.EXIT_NOT_CONVERGED:
        print(f"warning: did not converge in {cfg.mfg.picard.max_outer} iterations", file=sys.stderr)
    elif res.exit_code == sc.EXIT_BOUNDS:
        print(f"warning: {res.bounds.violation_count} density envelope violations", file=sys.stderr)
    elif res.exit_code == sc.EXIT_SOLVER:
        print(f"solver failure, see {res.out_dir / 'error_report.json'}", file=sys.stderr)
    print(f"artifacts in {res.out_dir}", file=sys.stderr)
    return res.exit_code


def _cmd_sweep(args) -> int:
    over = {"domain": {"nx": args.grid, "ny": args.grid}} if args.grid else {}
    if args.n:
        over["sweep"] = {"n": args.n}
    doc = sc.load_sweep(args.preset, over)
    table, path = sc.run_distance_sweep(doc, args.out)
    print(f"{len(table.rows)} samples written to {path}")
    return sc.EXIT_OK


def _cmd_oracle(args) -> int:
    over = {"simulation": {"seed": args.seed}} if args.seed is not None else {}
    result = sc.run_oracle(sc.load_oracle(args.config, over), args.out)
    print(json.dumps(result, indent=2))
    return sc.EXIT_OK


def _cmd_check(args) -> int:
    code, rep = sc.check_bounds(args.run_dir)
    print(f"K = {rep.K:.4g}  (|lap w| = {rep.K_w:.4g})  violations = {rep.violation_count}")
    return code


def _cmd_presets(args) -> int:
    for command, names in sc.preset_names().items():
        print(f"{command}: {', '.join(names)}")
    return sc.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmfield", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve a scenario (preset name or YAML file)")
    r.add_argument("config")
    r.add_argument("--out", type=Path)
    r.add_argument("--grid", type=int, help="cells per axis")
    r.add_argument("--nt", type=int, help="output time samples")
    r.add_argument("--no-snapshots", action="store_true")
    r.add_argument("-q", "--quiet", action="store_true")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="tabulate a distance comparison sweep")
    s.add_argument("preset")
    s.add_argument("--out")
    s.add_argument("--grid", type=int)
    s.add_argument("--n", type=int, help="number of sweep samples")
    s.set_defaults(func=_cmd_sweep)

    o = sub.add_parser("oracle", help="run the finite-agent simulator")
    o.add_argument("config")
    o.add_argument("--out")
    o.add_argument("--seed", type=int)
    o.set_defaults(func=_cmd_oracle)

    c = sub.add_parser("check-bounds", help="re-check the density envelope of a finished run")
    c.add_argument("run_dir")
    c.set_defaults(func=_cmd_check)

    ls = sub.add_parser("presets", help="list preset names")
    ls.set_defaults(func=_cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return sc.EXIT_CONFIG
    except SolverDiagnosticError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return sc.EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
