"""Command-line entry points.

Verbs:
  run           sweep anneal times per the config, write CSV (+ figures)
  table         minimum-energy report from a sweep CSV
  exact         print the exact ground-state energy for given chain params
  shadow-bench  shadow estimator convergence study, write CSV (+ figure)

Exit codes: 0 success, 2 config error, 3 numerical divergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .dynamics import IntegrationDivergedError
from .harness import (ConfigError, ExperimentConfig, check_purity_monotone,
                      emit_bench_csv, emit_csv, exact_energy, load_config,
                      min_table, parse_bench_csv, parse_csv, render_table,
                      run_bench, run_sweep, write_meta)
from .model import XxzParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shadowanneal",
        description="Open-system quantum annealing with purification-based "
                    "error mitigation and classical-shadow estimators.")
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run a T-sweep and write records to CSV")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--out", help="output CSV path (overrides config output)")
    run.add_argument("--threads", type=int, default=1,
                     help="work-pool width for (seed, T) cells")
    run.add_argument("--no-figures", action="store_true",
                     help="skip PNG rendering next to the CSV")

    table = sub.add_parser("table", help="minimum-energy report from a sweep CSV")
    table.add_argument("--in", dest="input", required=True, help="sweep CSV path")

    exact = sub.add_parser("exact", help="print the exact ground-state energy")
    exact.add_argument("--n", type=int, required=True, help="number of qubits")
    exact.add_argument("--j", type=float, default=-1.0, help="coupling J")
    exact.add_argument("--delta", type=float, default=-0.73, help="anisotropy")
    exact.add_argument("--h", type=float, default=1.0, help="uniform y-field")

    bench = sub.add_parser("shadow-bench",
                           help="shadow estimator convergence study")
    bench.add_argument("--config", required=True, help="JSON experiment config")
    bench.add_argument("--out", help="output CSV path (overrides config output)")
    bench.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering next to the CSV")
    return p


def _resolve_output(cfg: ExperimentConfig, cli_out: Optional[str], verb: str) -> str:
    out = cli_out or cfg.output
    if not out:
        raise ConfigError(f"{verb} needs an output path: pass --out or set "
                          f"\"output\" in the config")
    return out


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = _resolve_output(cfg, args.out, "run")
    meta: dict = {}
    records = run_sweep(cfg, threads=args.threads, meta_sink=meta)
    emit_csv(records, out)
    warnings = check_purity_monotone(records)
    if warnings:
        meta["purity_warnings"] = warnings
    meta_path = write_meta(out, cfg, len(records), meta)
    print(f"wrote {len(records)} records to {out}")
    print(f"wrote run metadata to {meta_path}")
    if not args.no_figures:
        from .plots import purity_figure, relative_error_figure, sweep_figure_paths
        parsed = parse_csv(out)
        err_png, pur_png = sweep_figure_paths(out)
        print(f"wrote figure {relative_error_figure(parsed, err_png)}")
        print(f"wrote figure {purity_figure(parsed, pur_png)}")
    return EXIT_OK


def _cmd_table(args) -> int:
    records = parse_csv(args.input)
    try:
        report = min_table(records)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(render_table(report))
    return EXIT_OK


def _cmd_exact(args) -> int:
    try:
        params = XxzParams(n_qubits=args.n, j=args.j, delta=args.delta, h=args.h)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"{exact_energy(params):.12g}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = load_config(args.config)
    out = _resolve_output(cfg, args.out, "shadow-bench")
    meta: dict = {}
    records = run_bench(cfg, meta_sink=meta)
    emit_bench_csv(records, out)
    meta_path = write_meta(out, cfg, len(records), meta)
    print(f"wrote {len(records)} bench records to {out}")
    print(f"wrote run metadata to {meta_path}")
    if not args.no_figures:
        from .plots import bench_figure, bench_figure_path
        parsed = parse_bench_csv(out)
        print(f"wrote figure {bench_figure(parsed, bench_figure_path(out))}")
    return EXIT_OK


_DISPATCH = {
    "run": _cmd_run,
    "table": _cmd_table,
    "exact": _cmd_exact,
    "shadow-bench": _cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationDivergedError as exc:
        print(f"integration diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
