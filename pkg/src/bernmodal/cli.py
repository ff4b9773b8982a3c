"""Command-line entry point: ``bernmodal solve|sweep CONFIG``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import driver
from .exceptions import BernmodalError


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bernmodal", description="Bernstein-dual Petrov-Galerkin solver "
                                "for time-fractional PDEs on (0, 1).")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="problem config (.ini or .json)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--format", choices=driver.FORMATS, help="report format (overrides the config)")
    common.add_argument("--quad-points", type=int, help="Gauss-Legendre points for data integrals")
    common.add_argument("--grid", type=int, help="error grid intervals (default 20)")
    common.add_argument("--M", type=int, dest="steps", help="number of time steps")
    solve = sub.add_parser("solve", parents=[common], help="solve one (N, alpha) cell")
    solve.add_argument("--N", type=int, dest="degree", help="degree (default: first in config)")
    solve.add_argument("--alpha", type=float, help="fractional order (default: first in config)")
    sw = sub.add_parser("sweep", parents=[common], help="error table over N and alpha")
    sw.add_argument("--N", type=_int_list, dest="degrees", help="comma-separated degrees")
    sw.add_argument("--alpha", type=_float_list, help="comma-separated fractional orders")
    return p


def _configure(args) -> driver.ProblemConfig:
    cfg = driver.load_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.format is not None:
        overrides["format"] = args.format
    if args.quad_points is not None:
        overrides["quad_points"] = args.quad_points
    if args.grid is not None:
        overrides["grid"] = args.grid
    if args.steps is not None:
        overrides["M"] = args.steps
    if args.command == "sweep":
        if args.degrees:
            overrides["degrees"] = args.degrees
        if args.alpha:
            overrides["alpha"] = args.alpha
    else:
        if args.degree is not None:
            overrides["degrees"] = (args.degree,)
        if args.alpha is not None:
            overrides["alpha"] = (args.alpha,)
    return replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _configure(args)
        if args.command == "solve":
            report = driver.run(cfg).report
        else:
            report = driver.sweep(cfg)
        path = driver.emit(report, cfg.format, cfg.out_dir)
    except (BernmodalError, OSError) as exc:
        print(f"bernmodal: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(driver.to_markdown(report))
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
