#!/usr/bin/env python3
"""Run the full desk-scale experiment battery into results/.

Paper-scale runs (N=50000, the instability window) are enabled with
--paper-scale and take substantially longer.
"""

import argparse
import sys
from pathlib import Path

from mlbn.bench import ExperimentConfig, run_scenario


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--paper-scale", action="store_true")
    parser.add_argument("--seeds", type=int, default=10)
    args = parser.parse_args()

    seeds = tuple(range(args.seeds))
    configs = [
        ExperimentConfig(scenario="recovery", graph="star4", N=2000, sigma=0.0, seeds=seeds),
        ExperimentConfig(
            scenario="inactivation",
            N=50_000 if args.paper_scale else 1000,
            sigma=0.1,
            seeds=seeds,
            paper_scale=args.paper_scale,
        ),
        ExperimentConfig(
            scenario="table1", sigma=0.1, seeds=seeds, paper_scale=args.paper_scale
        ),
        ExperimentConfig(
            scenario="instability",
            N=50_000 if args.paper_scale else 5000,
            sigma=0.1,
            seeds=seeds,
            paper_scale=args.paper_scale,
        ),
    ]
    out = Path(args.out)
    for cfg in configs:
        print(f"running {cfg.scenario} ...", flush=True)
        result = run_scenario(cfg)
        path = result.write(out, cfg.scenario)
        print(f"  {len(result.rows)} rows -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
