"""Command-line entry point.

Subcommands: ``synth`` (privatize a CSV), ``test`` (classical two-sample
test on a CSV), ``dp-test`` (the DP Mann-Whitney baseline), ``experiment``
(run an error-rate grid from a JSON config), and ``report`` (re-render
saved reports). Exit codes: 0 success, 1 usage error, 2 data or config
error. Every run prints a reproducibility header with the resolved seed
and the effective configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import harness, report as report_mod
from .data import (
    IngestionError,
    build_histogram,
    load_cardio_csv,
    load_grouped_csv,
    save_grouped_csv,
    table_from_grouped,
)
from .dpmw import DPMWConfig, dp_mann_whitney
from .harness import ConfigError, GeneratorSpec
from .rng import RandomSource
from .stattests import chi_squared, mann_whitney_u, median_test, t_test
from .synth import PrivacyBudget, marginal_ipf, mwem, perturbed_histogram, smoothed_histogram

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _outdir(value: str | None) -> Path:
    base = Path(os.environ.get("DPSYNTH_OUTDIR", "."))
    if value is None:
        return base
    path = Path(value)
    return path if path.is_absolute() else base / path


def _resolve_seed(seed: int | None) -> int:
    return secrets.randbits(63) if seed is None else seed


def _print_header(command: str, seed: int, config: dict) -> None:
    print(f"# dpsynth {command}")
    print(f"# seed: {seed}")
    print(f"# config: {json.dumps(config, sort_keys=True, default=str)}")


def _load_input(path: str, cardio: bool):
    return load_cardio_csv(path) if cardio else load_grouped_csv(path)


def _binning_from_args(args) -> object:
    if args.bins is not None:
        if args.lo is None or args.hi is None:
            raise ConfigError("--bins requires --lo and --hi")
        return {"count": args.bins, "lo": args.lo, "hi": args.hi}
    return args.binning


def _cmd_synth(args) -> int:
    seed = _resolve_seed(args.seed)
    binning = _binning_from_args(args)
    spec = GeneratorSpec(kind="csv", mode="null", csv_path=args.input, binning=binning).binning_spec()
    _print_header(
        "synth",
        seed,
        {
            "input": args.input,
            "method": args.method,
            "epsilon": args.epsilon,
            "m": args.m,
            "iterations": args.iterations,
            "binning": binning,
            "normalize": args.normalize,
            "out": str(args.out),
        },
    )
    data = _load_input(args.input, args.cardio)
    budget = PrivacyBudget(args.epsilon)
    rng = RandomSource(seed)
    if args.method == "smoothed":
        if args.m is None:
            raise ConfigError("--m (synthetic size) is required for the smoothed method")
        synthetic = smoothed_histogram(build_histogram(data, spec), budget, args.m, rng)
    elif args.method == "perturbed":
        synthetic = perturbed_histogram(build_histogram(data, spec), budget, rng, normalize=args.normalize)
    elif args.method == "mwem":
        synthetic = mwem(build_histogram(data, spec), budget, args.iterations, rng)
    else:
        synthetic = marginal_ipf(table_from_grouped(data, spec), budget, rng)
    out = _outdir(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_grouped_csv(synthetic.data, out)
    sidecar = out.with_suffix(out.suffix + ".provenance.json")
    sidecar.write_text(
        json.dumps(synthetic.provenance.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {synthetic.data.n} records to {out}")
    print(f"wrote provenance to {sidecar}")
    return 0


_TEST_FNS = {"mw_u": mann_whitney_u, "t": t_test, "median": median_test}


def _cmd_test(args) -> int:
    seed = _resolve_seed(args.seed)
    _print_header("test", seed, {"input": args.input, "test": args.test, "variable": args.variable})
    data = _load_input(args.input, args.cardio)
    x = data.group_values(0, args.variable)
    y = data.group_values(1, args.variable)
    if args.test == "chi2":
        # Distinct observed values become the table categories.
        levels = np.unique(np.concatenate((x, y))) if (x.size or y.size) else np.array([])
        if levels.size > 20:
            raise ConfigError(
                "chi2 on the CLI expects a categorical column (<= 20 distinct values)"
            )
        table = np.array([[(vals == lv).sum() for lv in levels] for vals in (x, y)])
        outcome = chi_squared(table)
    else:
        outcome = _TEST_FNS[args.test](x, y)
    print(json.dumps(outcome.to_dict(), sort_keys=True))
    return 0


def _cmd_dp_test(args) -> int:
    seed = _resolve_seed(args.seed)
    cfg = DPMWConfig(
        PrivacyBudget(args.epsilon, args.delta),
        size_fraction=args.size_fraction,
        null_samples=args.null_samples,
    )
    _print_header(
        "dp-test",
        seed,
        {
            "input": args.input,
            "epsilon": args.epsilon,
            "delta": args.delta,
            "size_fraction": args.size_fraction,
            "null_samples": args.null_samples,
        },
    )
    data = _load_input(args.input, args.cardio)
    outcome = dp_mann_whitney(data, cfg, RandomSource(seed))
    print(json.dumps(outcome.to_dict(), sort_keys=True))
    return 0


def _cmd_experiment(args) -> int:
    config = harness.load_config(args.config, seed=args.seed)
    _print_header("experiment", config.seed, harness.config_to_dict(config))
    reports = harness.run_grid(config, workers=args.workers)
    outdir = _outdir(args.out)
    written = report_mod.emit_report(reports, outdir, alpha=config.alpha)
    for path in written:
        print(f"wrote {path}")
    suppressed = sum(r.suppressed for r in reports)
    print(f"{len(reports)} cells, {suppressed} suppressed (feasible < {config.min_feasible})")
    return 0


def _cmd_report(args) -> int:
    reports, alpha = report_mod.load_reports_json(args.reports)
    _print_header("report", 0, {"reports": args.reports, "formats": args.formats})
    outdir = _outdir(args.out)
    formats = tuple(args.formats.split(","))
    for path in report_mod.emit_report(reports, outdir, formats=formats, alpha=alpha):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dpsynth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate DP-synthetic data from a CSV")
    p.add_argument("--input", required=True, help="input CSV (group,value header, or a cardio file)")
    p.add_argument("--cardio", action="store_true", help="treat the input as the cardiovascular CSV")
    p.add_argument("--method", required=True, choices=["perturbed", "smoothed", "mwem", "marginal-ipf"])
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--m", type=int, help="synthetic size (smoothed method only)")
    p.add_argument("--iterations", type=int, default=10, help="MWEM rounds")
    p.add_argument("--binning", choices=["gaussian100", "bmi24", "psa40"], default="bmi24")
    p.add_argument("--bins", type=int, help="custom bin count (with --lo/--hi)")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--normalize", action="store_true", help="perturbed: resample to the original size")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output CSV path (under DPSYNTH_OUTDIR if relative)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("test", help="run a classical two-sample test on a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--cardio", action="store_true")
    p.add_argument("--test", required=True, choices=list(harness.TESTS))
    p.add_argument("--variable", help="extra column to test instead of 'value'")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("dp-test", help="run the DP Mann-Whitney U test on a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--cardio", action="store_true")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--size-fraction", type=float, default=0.65)
    p.add_argument("--null-samples", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_dp_test)

    p = sub.add_parser("experiment", help="run an error-rate grid from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="overrides the seed in the config file")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("report", help="re-render saved reports.json")
    p.add_argument("--reports", required=True)
    p.add_argument("--formats", default="csv,json,svg")
    p.add_argument("--out", default="results")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, IngestionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
