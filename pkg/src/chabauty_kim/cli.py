"""Command-line entry point: ``kim-verify <command> [options]``.

Exit status is 0 when every check passes, 1 when any check fails and 2 for
configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .cache import CACHE_ENV, CacheError
from .report import ReportIOError, render, write_report
from .verify import (
    DEFAULT_GUARD,
    DEFAULT_PRIMES,
    ConfigError,
    RunConfig,
    cmd_build,
    cmd_constants,
    cmd_sweep,
    cmd_verify_s2,
    cmd_verify_z,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _primes(text: str) -> list:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of primes: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=_primes, default=None, help="prime (comma-separated list for sweep)")
    common.add_argument("--prec", type=int, default=30, help="target precision N in p-adic digits (default 30)")
    common.add_argument("--kmax", type=int, default=4, help="highest polylog weight (default 4)")
    common.add_argument("--match-digits", type=int, default=20, help="digits for matching common zeros (default 20)")
    common.add_argument("--cache", default=None, help=f"cache directory; 'none' disables (default: ${CACHE_ENV})")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--guard", type=int, default=DEFAULT_GUARD, help="extra working digits")
    common.add_argument("--samples", type=int, default=25, help="random points for the functional equations")
    common.add_argument("--skip-residuals", action="store_true", help="skip the ODE/Frobenius residual audit")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kim-verify", description="p-adic Chabauty-Kim checks for P^1 minus {0, 1, oo}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="construct (and cache) the polylog family")
    sub.add_parser("constants", parents=[common], help="print log 2, zeta values, c1 and C")
    sub.add_parser("verify-s2", parents=[common], help="common zeros of F2, F4 for S = {2}")
    sub.add_parser("verify-z", parents=[common], help="the Spec Z locus")
    sweep = sub.add_parser("sweep", parents=[common], help="verify-s2 over several primes")
    sweep.add_argument("--jobs", type=int, default=1, help="worker processes")
    sweep.add_argument("--with-z", action="store_true", help="also run verify-z per prime")
    return parser


def _config(args, p: int, site: str) -> RunConfig:
    return RunConfig(
        p=p,
        N=args.prec,
        kmax=args.kmax,
        site=site,
        match_digits=args.match_digits,
        cache=args.cache,
        format=args.format,
        guard=args.guard,
        samples=args.samples,
        residuals=not args.skip_residuals,
    ).validate()


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "sweep":
            primes = args.p if args.p is not None else list(DEFAULT_PRIMES)
            cfg = _config(args, primes[0] if primes else 11, "z-minus-2")
            report = cmd_sweep(primes, cfg, jobs=args.jobs, with_z=args.with_z)
        else:
            primes = args.p if args.p is not None else [11]
            if len(primes) != 1:
                raise ConfigError(f"{args.command} takes a single prime")
            site = "z" if args.command == "verify-z" else "z-minus-2"
            cfg = _config(args, primes[0], site)
            command = {"build": cmd_build, "constants": cmd_constants, "verify-s2": cmd_verify_s2, "verify-z": cmd_verify_z}[args.command]
            report = command(cfg)
    except ConfigError as exc:
        print(f"kim-verify: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CacheError, ReportIOError) as exc:
        print(f"kim-verify: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.out:
            write_report(report, args.out, args.format)
        else:
            sys.stdout.write(render(report, args.format))
    except ReportIOError as exc:
        print(f"kim-verify: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if report.status == "PASS" else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
