"""Command-line front end.

    porobearing solve   --config run.cfg [--mode MODE] [--out DIR] [--tol TOL] [-D key=value ...]
    porobearing study   --config run.cfg [--target long|freeboundary|coupled3d] ...
    porobearing compare --config run.cfg ...

Exit status: 0 success, 2 configuration error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .runner import ConfigError, convergence_study, parse_config, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="porobearing",
        description="Pressure in porous journal bearings: long-bearing spectral solver, "
        "1D free boundary, and the coupled 3D Laplace/Reynolds problem.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("solve", "run one solver mode and write CSV output"),
        ("study", "dyadic refinement study with observed orders"),
        ("compare", "porous vs solid long-bearing pressure"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--mode", help="solver mode (solve only)")
        p.add_argument("--out", metavar="DIR", help="output directory (default: out)")
        p.add_argument("--tol", help="solver tolerance")
        p.add_argument("--seed", help="seed for randomized checks")
        p.add_argument(
            "-D", "--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key"
        )
        if name == "study":
            p.add_argument("--target", help="long, freeboundary or coupled3d")
            p.add_argument("--levels", help="number of refinement levels (>= 3)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _overrides(args):
    out = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"flag: expected KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    for key in ("mode", "out", "tol", "seed", "target", "levels"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    if args.command == "study":
        out["mode"] = "convergence-study"
    elif args.command == "compare":
        out["mode"] = "compare"
    return out


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary = run(cfg)
    print("\n".join(summary.lines()))
    return EXIT_OK if summary.status == "ok" else EXIT_SOLVER


__all__ = ["main", "convergence_study"]

if __name__ == "__main__":
    sys.exit(main())
