"""Command-line front end.

Subcommands
-----------
scalar, fd, fem
    Run a convergence study of that kind.  Without ``--config`` a built-in
    study is used; with one, its ``space.kind`` must match the subcommand.
converge
    Run whatever study the config file describes.
checks
    Print the stability/barrier/comparison/decay pass-fail table.
"""

from __future__ import annotations

import argparse
import logging
import sys

from fracl1._kernels import set_threads
from fracl1.analysis_checks import run_checks
from fracl1.exceptions import Fracl1Error
from fracl1.harness import StudyConfig, emit, load_config, run_study

logger = logging.getLogger("fracl1")

DEFAULTS = {
    "scalar": {"alpha": 0.5, "r": "optimal", "M": [64, 128, 256, 512, 1024, 2048], "solution": "t_alpha"},
    "fd": {
        "alpha": 0.5, "r": "optimal", "M": [16, 32, 64, 128], "solution": "t_alpha_sinsin",
        "space": {"kind": "fd", "d": 2, "N": [32]}, "rate_mode": "double_mesh",
    },
    "fem": {
        "alpha": 0.5, "r": "optimal", "M": [16, 32, 64, 128, 256], "solution": "t_alpha_cosxy",
        "space": {"kind": "fem", "N": [32]},
    },
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON study configuration")
    common.add_argument("--out", metavar="PATH", help="write the table here instead of stdout")
    common.add_argument("--format", choices=("csv", "markdown", "plotdata"), default="csv")
    common.add_argument("--threads", type=int, default=1, metavar="K")
    common.add_argument("--seed", type=int, default=0, metavar="S", help="seed for randomized checks")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fracl1", description="L1 schemes for time-fractional parabolic problems")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("scalar", "fd", "fem"):
        sub.add_parser(name, parents=[common], help=f"{name} convergence study")
    sub.add_parser("converge", parents=[common], help="convergence study described by --config")
    chk = sub.add_parser("checks", parents=[common], help="stability certificate table")
    chk.add_argument("--samples", type=int, default=1000, help="random instances per (alpha, r)")
    return p


def _study(args) -> StudyConfig:
    if args.command == "converge":
        if not args.config:
            raise Fracl1Error("converge needs --config")
        return load_config(args.config)
    if args.config:
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise Fracl1Error(f"config describes a {cfg.kind} study, not {args.command}")
        return cfg
    return StudyConfig.from_dict(DEFAULTS[args.command])


def _checks_table(rows, fmt: str) -> str:
    if fmt == "csv":
        lines = ["check,params,value,passed"]
        lines += [f"{r.check},{r.params},{r.value!r},{int(r.passed)}" for r in rows]
    else:
        lines = ["| check | params | value | result |", "|---|---|---|---|"]
        lines += [f"| {r.check} | {r.params} | {r.value:.4g} | {'PASS' if r.passed else 'FAIL'} |" for r in rows]
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    set_threads(args.threads)
    try:
        if args.command == "checks":
            rows = run_checks(n_random=args.samples, seed=args.seed)
            text = _checks_table(rows, args.format)
            ok = all(r.passed for r in rows)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0 if ok else 1
        cfg = _study(args)
        report = run_study(cfg, threads=args.threads)
        out = args.out or cfg.out
        text = emit(report, args.format, out)
        if not out:
            sys.stdout.write(text)
        return 0
    except Fracl1Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
