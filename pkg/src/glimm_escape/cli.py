"""Command-line entry point.

    run      --config F | --preset NAME  --out DIR [--seed N] [--set key=value ...]
    converge --config F | --preset NAME  --levels K
    compare  --config F | --preset NAME  --levels K
    region   --snapshots DIR

Exit codes: 0 success, 1 malformed configuration, 2 hypothesis warnings
under --strict, 3 positivity violation, 4 any other solver failure.
"""

from __future__ import annotations

import argparse
import sys

from . import io
from .config import apply_overrides, load, validate
from .errors import ConfigError, PositivityViolation, SolverError
from .presets import PRESETS, preset

EXIT_OK, EXIT_CONFIG, EXIT_STRICT, EXIT_POSITIVITY, EXIT_SOLVER = 0, 1, 2, 3, 4


def _config(args):
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required")
    pairs = []
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        a, b = item.split("=", 1)
        pairs.append((a.strip(), b.strip()))
    return apply_overrides(cfg, pairs) if pairs else cfg


def _source_args(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--strict", action="store_true", help="treat (A1)-(A3) warnings as errors")


def build_parser():
    ap = argparse.ArgumentParser(prog="glimm-escape", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="one run with diagnostics and outputs")
    _source_args(r)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    for name in ("converge", "compare"):
        c = sub.add_parser(name, help="refinement study" if name == "converge" else "Glimm vs splitting")
        _source_args(c)
        c.add_argument("--levels", type=int, default=3)
        c.add_argument("--out", help="write the table as JSON here")
    g = sub.add_parser("region", help="region report from a run directory")
    g.add_argument("--snapshots", required=True)
    g.add_argument("--out", help="write region JSON here (default: stdout)")
    return ap


def _check(cfg, strict):
    report = validate(cfg)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_STRICT if (strict and not report.compliant) else EXIT_OK


def main(argv=None):
    from .runner import compare_oracle, convergence_study, region_from_directory, run_scenario

    args = build_parser().parse_args(argv)
    try:
        if args.command == "region":
            res = region_from_directory(args.snapshots)
            if args.out:
                io.write_json(args.out, res.to_json())
            else:
                print(io.dumps(res.to_json(), indent=1))
            return EXIT_OK
        cfg = _config(args)
        code = _check(cfg, args.strict)
        if code:
            return code
        if args.command == "run":
            res = run_scenario(cfg, args.out, seed=args.seed)
            s = res.summary
            print(f"{cfg.name}: {s['steps']} steps to t={s['t_final']:.6g}, min u={s['min_u_cells']:.6g}, "
                  f"min rho={s['min_rho_cells']:.6g}; outputs in {args.out}")
            return EXIT_OK
        levels = max(1, args.levels)
        table = convergence_study(cfg, levels) if args.command == "converge" else compare_oracle(cfg, levels)
        for row in table:
            print(io.dumps(row))
        if args.out:
            io.write_json(args.out, table)
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PositivityViolation as e:
        print(f"positivity violation: {e}", file=sys.stderr)
        return EXIT_POSITIVITY
    except (SolverError, ArithmeticError) as e:
        print(f"solver failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
