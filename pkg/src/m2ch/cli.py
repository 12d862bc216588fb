"""Command line entry point ``m2ch``.

Subcommands::

    m2ch simulate <config> [--output-dir DIR]
    m2ch closed-form --s S [--t0 -10] [--t1 10] [--dt 0.01] [--output-dir DIR]
    m2ch verify [--suite all|core|dynamics|closed-form|lagrangian|scenario]
    m2ch version

Outputs go to ``<root>/<scenario name>/`` where the root is ``--output-dir``,
else ``$M2CH_OUTPUT_DIR``, else ``./m2ch_output``.

Exit codes: 0 success, 1 verification failure, 2 usage or scenario error,
3 solver abort.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .scenario import ScenarioError, load_scenario, parse_scenario, run
from .verify import SUITES, verify

ENV_OUTPUT = "M2CH_OUTPUT_DIR"
DEFAULT_OUTPUT = "m2ch_output"

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3


def _output_root(arg):
    return Path(arg or os.environ.get(ENV_OUTPUT) or DEFAULT_OUTPUT)


def _report_run(res):
    for f in res.files:
        print(f)
    for ev in res.events:
        print("event:", ",".join(str(v) for v in ev), file=sys.stderr)
    return EXIT_ABORT if res.aborted else EXIT_OK


def cmd_simulate(args):
    sc = load_scenario(args.config)
    return _report_run(run(sc, _output_root(args.output_dir) / sc.name))


def cmd_closed_form(args):
    text = (f"[scenario]\nkind = closed-form\nname = closed-form_s{args.s:g}\n"
            f"t0 = {args.t0!r}\nt1 = {args.t1!r}\n"
            f"[antisym]\ns = {args.s!r}\n[output]\nsample_dt = {args.dt!r}\n")
    sc = parse_scenario(text)
    return _report_run(run(sc, _output_root(args.output_dir) / sc.name))


def cmd_verify(args):
    rep = verify(args.suite)
    for line in rep.lines():
        print(line)
    n_fail = sum(not e.passed for e in rep.entries)
    print(f"{len(rep.entries) - n_fail}/{len(rep.entries)} checks passed",
          file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_version(args):
    print(__version__)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="m2ch", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario file")
    p.add_argument("config", help="scenario INI file")
    p.add_argument("--output-dir", help=f"output root (default ${ENV_OUTPUT} "
                   f"or ./{DEFAULT_OUTPUT})")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("closed-form", help="sample the exact antisymmetric pair")
    p.add_argument("--s", type=float, required=True, help="density amplitude s >= 0")
    p.add_argument("--t0", type=float, default=-10.0, help="start time (default -10)")
    p.add_argument("--t1", type=float, default=10.0, help="end time (default 10)")
    p.add_argument("--dt", type=float, default=0.01, help="sample spacing (default 0.01)")
    p.add_argument("--output-dir", help="output root")
    p.set_defaults(func=cmd_closed_form)

    p = sub.add_parser("verify", help="run the self-check suites")
    p.add_argument("--suite", default="all", choices=["all", *SUITES],
                   help="suite to run (default all)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("version", help="print the package version")
    p.set_defaults(func=cmd_version)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
