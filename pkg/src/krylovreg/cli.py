"""Command-line entry point: run experiments, scaling sweeps, trace checks."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, KrylovRegError

OUTPUT_ROOT_ENV = "KRYLOVREG_OUT"

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_USAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krylovreg",
        description="Solve Bayesian linear inverse problems with joint "
        "regularization-parameter selection and compare against dense baselines.",
    )
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("config", help="path to a key = value config file")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    scaling = sub.add_parser("scaling", help="time solver arms across problem sizes")
    scaling.add_argument("config", help="path to a key = value config file")
    scaling.add_argument(
        "--sizes", required=True, help="comma-separated problem sizes, e.g. 200,500,1000"
    )
    scaling.add_argument("--out", help="output directory (overrides the config)")
    scaling.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    verify = sub.add_parser("verify", help="re-check invariants on a trace.csv")
    verify.add_argument("trace", help="path to a trace.csv produced by 'run'")
    return parser


def _resolve_out(cfg_output: str, override: str | None) -> Path:
    chosen = Path(override) if override else Path(cfg_output)
    if not chosen.is_absolute():
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root:
            chosen = Path(root) / chosen
    return chosen


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "scaling":
            return _cmd_scaling(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KrylovRegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def _cmd_run(args) -> int:
    from .experiments import run_experiment

    cfg = load_config(args.config)
    out = _resolve_out(cfg.output, args.out)
    outcome = run_experiment(cfg, out, figures=not args.no_figures)
    for arm in outcome["arms"]:
        print(
            f"{arm.solver}: status={arm.result.status} lambda={arm.result.lam:.6g} "
            f"iterations={len(arm.result.history)} seconds={arm.seconds:.3f}"
        )
    for name, lam in outcome["oracles"].items():
        print(f"{name}: lambda={lam:.6g}")
    print(f"wrote {outcome['trace']} and {outcome['summary']}")
    return EXIT_OK


def _cmd_scaling(args) -> int:
    from .experiments import run_scaling

    cfg = load_config(args.config)
    try:
        sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --sizes value {args.sizes!r}") from exc
    if not sizes:
        raise ConfigError("--sizes is empty")
    out = _resolve_out(cfg.output, args.out)
    outcome = run_scaling(cfg, sizes, out, figures=not args.no_figures)
    for n, solver, iters, seconds in outcome["rows"]:
        print(f"n={n} {solver}: iterations={iters} seconds={seconds:.3f}")
    print(f"wrote {outcome['table']}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .experiments import verify_trace

    violations = verify_trace(args.trace)
    if violations:
        for message in violations:
            print(message, file=sys.stderr)
        print(f"{args.trace}: {len(violations)} violation(s)", file=sys.stderr)
        return EXIT_SOLVER
    print(f"{args.trace}: ok")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
