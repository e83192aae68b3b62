"""Command-line interface.

Subcommands:
  run          execute a benchmark from a JSON config, write trace CSVs
               and an aggregate JSON
  theory-check run the randomised checks of the supporting guarantees
  plot-data    fold trace CSVs into a tidy per-iteration summary CSV

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 theory-check failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .config import ConfigError, apply_overrides, load_config
from .gp import NumericalError
from .harness import run_experiment
from .theory import theory_check_suite

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_THEORY = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uibo",
                                     description="Bayesian optimisation under "
                                                 "uncertain inputs: benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark experiment")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--methods", help="comma-separated method names to run")
    run.add_argument("--trials", type=int)
    run.add_argument("--iterations", type=int)
    run.add_argument("--seed", type=int)

    check = sub.add_parser("theory-check", help="run the theoretical-property checks")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--mgf-samples", type=int, default=1_000_000,
                       help="Monte Carlo samples per MGF check")
    check.add_argument("--pinsker-samples", type=int, default=200_000,
                       help="Monte Carlo samples per mismatch-bound check")

    plot = sub.add_parser("plot-data", help="summarise trace CSVs for plotting")
    plot.add_argument("--traces", required=True, help="directory holding trace_*.csv")
    plot.add_argument("--out", required=True, help="tidy summary CSV to write")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    methods = args.methods.split(",") if args.methods else None
    config = apply_overrides(config, methods=methods, trials=args.trials,
                             iterations=args.iterations, seed=args.seed)
    result = run_experiment(config, out_dir=Path(args.out))
    for label, agg in result.aggregates.items():
        if agg["trials"]:
            final = agg["mean_regret_mean"][-1]
            print(f"{label}: {agg['trials']} trials, final mean regret {final:.6g}")
        else:
            print(f"{label}: no completed trials")
    for failure in result.failures:
        print(f"FAILED trial {failure['trial']} method {failure['method']}: "
              f"{failure['error']}", file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_NUMERICAL


def _cmd_theory_check(args) -> int:
    report = theory_check_suite(seed=args.seed, mgf_samples=args.mgf_samples,
                                pinsker_samples=args.pinsker_samples)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_THEORY


def _cmd_plot_data(args) -> int:
    trace_dir = Path(args.traces)
    paths = sorted(trace_dir.glob("trace_*.csv"))
    if not paths:
        raise ConfigError(f"no trace_*.csv files under {trace_dir}")
    series: dict[tuple[str, int], list[float]] = defaultdict(list)
    for path in paths:
        with path.open(newline="") as handle:
            for row in csv.DictReader(handle):
                key = (row["method"], int(row["t"]))
                series[key].append(float(row["mean_regret"]))
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["method,t,mean_regret_mean,mean_regret_std,trials"]
    for (method, t) in sorted(series, key=lambda k: (k[0], k[1])):
        vals = np.asarray(series[(method, t)])
        std = vals.std(ddof=1) if vals.size > 1 else 0.0
        lines.append(f"{method},{t},{vals.mean():.17g},{std:.17g},{vals.size}")
    out_path.write_text("\n".join(lines) + "\n")
    print(f"wrote {out_path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "theory-check":
            return _cmd_theory_check(args)
        return _cmd_plot_data(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
