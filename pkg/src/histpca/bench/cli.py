"""
Command-line entry point.

    bench run --preset NAME | --config FILE [--jobs N] [--out DIR] [--seed-base S]
              [--svg] [--set key=value ...] [--allow-diverged] [--timing]
    bench list-presets
    bench render TRACE.csv [--out FILE]

Exit codes: 0 success, 2 invalid configuration, 3 a run diverged.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..exceptions import ParseError, SpecError
from .presets import builtin_presets, get_preset
from .runner import run_experiment
from .spec import load_config, parse_assignments
from .svg import render_svg

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGED = 3


def _parser():
    p = argparse.ArgumentParser(prog="bench", description="Streaming PCA benchmark runner.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or config file")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset")
    src.add_argument("--config")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--out", default="bench-out")
    run.add_argument("--seed-base", type=int, default=None,
                     help="shift every seed of the scenario by this amount")
    run.add_argument("--svg", action="store_true")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    run.add_argument("--allow-diverged", action="store_true")
    run.add_argument("--timing", action="store_true",
                     help="record wall-clock ms (makes CSVs run-dependent)")

    sub.add_parser("list-presets", help="list built-in presets")

    render = sub.add_parser("render", help="render a trace CSV to SVG")
    render.add_argument("csv")
    render.add_argument("--out", default=None)
    return p


def _resolve_spec(args):
    spec = get_preset(args.preset) if args.preset else load_config(args.config)
    if args.set:
        spec = parse_assignments(args.set, base=spec)
    if args.seed_base is not None:
        spec = spec.with_seeds(s + args.seed_base for s in spec.seeds)
    if args.jobs < 1:
        raise SpecError("--jobs must be >= 1")
    return spec.validate()


def _cmd_run(args) -> int:
    try:
        spec = _resolve_spec(args)
    except KeyError:
        print(f"bench: unknown preset {args.preset!r} (see 'bench list-presets')", file=sys.stderr)
        return EXIT_INVALID
    except (SpecError, ParseError, OSError) as exc:
        print(f"bench: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    result = run_experiment(spec, args.out, jobs=args.jobs, svg=args.svg, timing=args.timing)
    for kind, path in result.paths.items():
        print(f"{kind}: {path}")
    if result.diverged:
        n = sum(1 for r in result.records if r.metric == "diverged")
        print(f"bench: {n} run(s) diverged", file=sys.stderr)
        if not args.allow_diverged:
            return EXIT_DIVERGED
    return EXIT_OK


def _cmd_list() -> int:
    for spec in builtin_presets():
        print(f"{spec.name:16s} {spec.description}")
    return EXIT_OK


def _cmd_render(args) -> int:
    try:
        path = render_svg(args.csv, args.out)
    except (OSError, ValueError) as exc:
        print(f"bench: cannot render {args.csv}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(path)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "list-presets":
        return _cmd_list()
    return _cmd_render(args)


if __name__ == "__main__":
    sys.exit(main())
