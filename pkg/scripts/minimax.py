#!/usr/bin/env python3
"""Power of the grid-divergence test over subsample sizes 2..21 on the benchmark
scenarios, and the minimax-regret size choice.

    python3 scripts/minimax.py --N 30
    python3 scripts/minimax.py --N 300 --json report300.json
"""

import argparse
import json
import math

from rankcopula.indep_bench import benchmark_scenarios
from rankcopula.power import ThresholdCache, default_size_range, power_table


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, default=30, choices=(30, 300))
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--threshold-reps", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--cache", default=None)
    ap.add_argument("--json", default=None, help="also write the report as JSON")
    args = ap.parse_args()

    rep = power_table(benchmark_scenarios(args.N), args.N, default_size_range(args.N), math.inf, reps=args.reps,
                      seed=args.seed, threshold_reps=args.threshold_reps, cache=ThresholdCache(args.cache),
                      threads=args.threads)
    print(rep.render_text())
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rep.to_dict(), fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
