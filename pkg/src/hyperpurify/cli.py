"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical or physicality failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import BUILTIN_CONFIGS, ConfigError, load_config
from .qmath import EXPERIMENTAL_TOL, load_matrix, validate_state
from .runner import NumericalFailure, dumps, run, summary_row, sweep, sweep_rows, to_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    report = run(cfg, timestamp=args.timestamp)
    if args.format == "csv":
        _emit(to_csv([summary_row(report)]), args.out)
    else:
        _emit(dumps(report), args.out)
    if args.figures:
        from .plotting import plot_density_matrices

        plot_density_matrices(report, Path(args.figures) / f"{cfg.name}_density.png")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.sweep is None:
        raise ConfigError(f"config {cfg.name!r} has no sweep block")
    reports = sweep(cfg, timestamp=args.timestamp)
    rows = sweep_rows(cfg, reports)
    if args.format == "json":
        _emit(dumps(reports), args.out)
    else:
        _emit(to_csv(rows), args.out)
    if args.figures:
        from .plotting import plot_sweep

        plot_sweep(rows, args.figures, stem=cfg.name)
    return EXIT_OK


def cmd_validate_fixture(args) -> int:
    try:
        m = load_matrix(args.path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read fixture {args.path}: {exc}") from None
    if m.shape[0] != m.shape[1]:
        raise ConfigError(f"fixture {args.path} is not square: {m.shape}")
    verdict = validate_state(m, args.tol)
    sys.stdout.write(json.dumps(verdict.as_dict(), indent=2) + "\n")
    return EXIT_OK if verdict else EXIT_NUMERICAL


def cmd_list(args) -> int:
    for name in BUILTIN_CONFIGS:
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperpurify", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, formats, default):
        sp.add_argument("--config", required=True, help="built-in config name or path to a JSON config")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--format", choices=formats, default=default)
        sp.add_argument("--figures", metavar="DIR", help="also render PNG figures into DIR")
        sp.add_argument("--timestamp", action="store_true",
                        help="record wall-clock time in provenance (breaks byte-for-byte reproducibility)")

    sp = sub.add_parser("run", help="run one configuration and write its report")
    common(sp, ("json", "csv"), "json")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run every grid point of the config's sweep block")
    common(sp, ("csv", "json"), "csv")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("validate-fixture", help="check a matrix fixture file for physicality")
    sp.add_argument("path")
    sp.add_argument("--tol", type=float, default=EXPERIMENTAL_TOL)
    sp.set_defaults(func=cmd_validate_fixture)

    sp = sub.add_parser("list-configs", help="print the names of the built-in configurations")
    sp.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
