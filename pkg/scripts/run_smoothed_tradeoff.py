#!/usr/bin/env python3
"""Smoothed-histogram privacy/utility trade-off on Gaussian data.

One large original dataset (n=20000), synthetic sizes 50..1000, full
epsilon grid, null and signal modes. Outputs under results/smoothed/.
"""

import argparse
import sys
from pathlib import Path

from dpsynth.harness import ExperimentConfig, GeneratorSpec, run_grid
from dpsynth.report import emit_report

EPSILONS = (0.01, 0.1, 1.0, 5.0, 10.0)
SYNTHETIC_SIZES = (50, 100, 500, 1000)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repetitions", type=int, default=200)
    parser.add_argument("--original-size", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--out", default="results/smoothed")
    args = parser.parse_args()

    reports = []
    for mode in ("null", "signal"):
        config = ExperimentConfig(
            generator=GeneratorSpec(kind="gaussian", mode=mode),
            synthesizer="smoothed",
            epsilons=EPSILONS,
            original_sizes=(args.original_size,),
            synthetic_sizes=SYNTHETIC_SIZES,
            repetitions=args.repetitions,
            seed=args.seed,
        )
        print(f"running smoothed ({mode}) over {len(EPSILONS) * len(SYNTHETIC_SIZES)} cells ...")
        reports.extend(run_grid(config, workers=args.workers))
    for path in emit_report(reports, Path(args.out)):
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
