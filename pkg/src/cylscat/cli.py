"""Command-line interface: scenario pipelines and report generation.

Exit codes: 0 success, 2 configuration error, 3 numerical-certificate
failure, 4 missing prerequisite.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, CylscatError, NonConvergedError, PrerequisiteError

SUBCOMMANDS = ("spectrum", "smatrix", "lap", "mourre", "propagate",
               "timedelay", "report", "run")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cylscat",
        description="Multichannel scattering laboratory for waveguides with "
                    "cylindrical ends")
    parser.add_argument("--config", metavar="PATH",
                        help="scenario config file (TOML)")
    parser.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default: ./out)")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="parallel workers for independent grids")
    parser.add_argument("--seed", type=int, default=None, metavar="N",
                        help="override the config seed")
    parser.add_argument("--force", action="store_true",
                        help="run stages whose admissibility check failed")
    parser.add_argument("command", choices=SUBCOMMANDS,
                        help="pipeline stage, 'run' for all, or 'report'")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "report":
        from .report import emit_report

        try:
            summary = emit_report(args.out)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 4
        print(open(f"{args.out}/summary.txt").read(), end="")
        return 0
    if not args.config:
        print("error: --config is required for pipeline stages",
              file=sys.stderr)
        return 2
    from .pipeline import run_pipeline

    stages = ["all"] if args.command == "run" else [args.command]
    try:
        manifest, code = run_pipeline(args.config, stages, args.out,
                                      jobs=args.jobs, seed=args.seed,
                                      force=args.force)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PrerequisiteError as exc:
        print(f"prerequisite missing: {exc}", file=sys.stderr)
        return 4
    except NonConvergedError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    except CylscatError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for name, info in manifest["stages"].items():
        line = f"stage {name:10s} {info['status']:8s} ({info['wallclock_s']:.1f} s)"
        print(line)
        if info.get("error"):
            print(f"  error: {info['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
