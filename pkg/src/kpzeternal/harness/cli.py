"""Command line entry point: simulate, verify, acceptance, export-plots, calibrate."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from ..errors import KPZError, VerificationFailure
from .config import load_config, RunConfig
from .manifest import atomic_write
from .suites import SUITES
from . import lpp_suite  # noqa: F401  registers the lattice suites

PARABOLIC_SUITES = ("busemann-props", "semigroup", "interfaces", "crossing", "colormap", "extinction",
                    "reconstruction", "growth", "finiteness")
LATTICE_SUITES = ("lpp-exact", "lpp-stats")


def _cmd_simulate(args) -> int:
    from .simulate import simulate

    cfg = load_config(args.config)
    start = time.perf_counter()
    out = simulate(cfg, args.out)
    print(f"wrote {out} in {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return 0


def _report_lines(results) -> list[str]:
    lines = []
    for suite, checks in results:
        for c in checks:
            lines.append(f"{suite}\t{'PASS' if c.passed else 'FAIL'}\t{c.name}\t{c.detail}")
    return lines


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    names = args.suite or (LATTICE_SUITES if cfg.backend == "lpp" else PARABOLIC_SUITES)
    results = [(name, SUITES[name](cfg)) for name in names]
    lines = _report_lines(results)
    print("\n".join(lines))
    if args.report:
        atomic_write(Path(args.report), ("\n".join(lines) + "\n").encode())
    failed = [line for line in lines if "\tFAIL\t" in line]
    if failed:
        raise VerificationFailure(f"{len(failed)} of {len(lines)} checks failed")
    return 0


def _cmd_acceptance(args) -> int:
    from .acceptance import run_acceptance

    cfg = load_config(args.config) if args.config else RunConfig()
    results = run_acceptance(args.criterion, cfg.lpp, cfg.seed)
    for r in results:
        print(r.line())
        if args.verbose:
            for c in r.checks:
                print(f"    {'ok ' if c.passed else 'BAD'} {c.name}: {c.detail}")
    if not all(r.passed for r in results):
        raise VerificationFailure("acceptance criteria failed")
    return 0


def _cmd_export_plots(args) -> int:
    from .plots import export_plots

    print(export_plots(args.run_dir, render=args.render))
    return 0


def _cmd_calibrate(args) -> int:
    from .calibrate import calibrate

    print(calibrate(load_config(args.config), args.out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpz-eternal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write height, geodesic, interface and coloring artifacts")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: [run] output)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("config")
    p.add_argument("--suite", action="append", choices=sorted(SUITES),
                   help="suite to run; repeatable (default: all suites of the backend)")
    p.add_argument("--report", help="also write the report to this file")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("acceptance", help="run the acceptance criteria")
    p.add_argument("--config")
    p.add_argument("--criterion", type=int, action="append", choices=range(1, 9))
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_cmd_acceptance)

    p = sub.add_parser("export-plots", help="derive plot-data files from a run directory")
    p.add_argument("run_dir")
    p.add_argument("--render", action="store_true", help="also render a PNG (needs matplotlib)")
    p.set_defaults(func=_cmd_export_plots)

    p = sub.add_parser("calibrate", help="spread constant, stationary oracle and suite rates")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: [run] output)")
    p.set_defaults(func=_cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KPZError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
