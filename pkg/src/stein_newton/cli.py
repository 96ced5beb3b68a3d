"""Command line entry point: ``stein run|compare|validate --config <path>``."""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .experiment import (
    ConfigError,
    execute,
    load_json,
    load_run_config,
    parse_compare_config,
    parse_validate_config,
    run_compare,
    run_validate,
)

logger = logging.getLogger("stein_newton")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def thread_limit():
    """Context capping BLAS threads per ``STEIN_THREADS`` (0 or unset = library default)."""
    raw = os.environ.get("STEIN_THREADS", "0")
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError("STEIN_THREADS", f"expected an integer, got {raw!r}") from None
    if count <= 0:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=count)


def _overrides(cfg, args):
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "out_dir", None) is not None:
        changes["out_dir"] = args.out_dir
    return dataclasses.replace(cfg, **changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _overrides(load_run_config(args.config), args)
    execute(cfg, Path(cfg.out_dir), plots=args.plots)
    print(f"wrote {cfg.out_dir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    raw = load_json(args.config)
    configs = [_overrides(c, args) for c in parse_compare_config(raw)]
    out = Path(args.out_dir or raw.get("out_dir", "out"))
    comparison = run_compare(configs, out, plots=args.plots)
    for pair in comparison["pairwise"]:
        print(f"{pair['a']} vs {pair['b']}: mean_rel={pair['mean_rel']:.4f} trace_rel={pair['trace_rel']:.4f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    raw = load_json(args.config)
    configs, dims = parse_validate_config(raw)
    configs = [_overrides(c, args) for c in configs]
    out = Path(args.out_dir or raw.get("out_dir", "out"))
    table = run_validate(configs, dims, out)
    names = [k for k in table["trace"] if k != "theoretical"]
    print(f"{'d':<5}  {'theoretical':>11}" + "".join(f"  {n:>11}" for n in names))
    for i, d in enumerate(dims):
        row = f"{table['trace']['theoretical'][i]:11.4f}" + "".join(f"  {table['trace'][n][i]:11.4f}" for n in names)
        print(f"{d:<5}  {row}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stein", description="Stein variational gradient and Newton experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in (
        ("run", cmd_run, "run one sampler configuration"),
        ("compare", cmd_compare, "run several variants on one problem and compare moments"),
        ("validate", cmd_validate, "linear-Gaussian discretization study against the exact posterior"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON config (schema v1)")
        p.add_argument("--out-dir", dest="out_dir", default=None)
        p.add_argument("--seed", type=int, default=None)
        if name != "validate":
            p.add_argument("--plots", action="store_true", help="write SVG scatter plots (2-d problems)")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: seed: must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with thread_limit():
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, MemoryError, ValueError) as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
