#!/usr/bin/env python3
"""Independence-test powers on the eight benchmark scenarios: form-aware test,
Cramer-von Mises and the grid-divergence test at a fixed size per scenario.

    python3 scripts/indep_power.py --N 30
    python3 scripts/indep_power.py --N 300 --num-subsamples inf
"""

import argparse

from rankcopula.core import derive_stream, spawn_seed
from rankcopula.estimator import parse_num_subsamples
from rankcopula.indep_bench import benchmark_scenarios, fitted_donut_test, scenario_sample
from rankcopula.power import TestSpec, ThresholdCache, estimate_power

# power-optimal subsample size of each benchmark scenario
BENCHMARK_SIZES = {30: [2, 10, 15, 15, 2, 9, 13, 14], 300: [2, 17, 19, 20, 4, 17, 19, 21]}


def fitted_power(sc, N, reps, seed):
    base = spawn_seed(seed, 0xD0, N)
    return sum(fitted_donut_test(scenario_sample(sc, N, derive_stream(base, r)), 0.05).reject for r in range(reps)) / reps


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, default=30, choices=(30, 300))
    ap.add_argument("--num-subsamples", type=parse_num_subsamples, default=10_000)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--threshold-reps", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--cache", default=None, help="threshold cache file")
    ap.add_argument("--fitted-donut", action="store_true", help="also report the fitted-mean KS donut test")
    args = ap.parse_args()

    cache = ThresholdCache(args.cache)
    print(f"{'scenario':>22} {'smart':>7} {'cvm':>7} {'new':>7} {'size':>5}")
    for sc, n in zip(benchmark_scenarios(args.N), BENCHMARK_SIZES[args.N]):
        specs = (TestSpec("smart"), TestSpec("deheuvels"), TestSpec("new", 0.05, n, args.num_subsamples))
        row = [estimate_power(s, sc, args.N, args.reps, args.seed, cache, args.threshold_reps).rate for s in specs]
        line = f"{sc.label:>22} " + " ".join(f"{p:7.3f}" for p in row) + f" {n:5d}"
        if args.fitted_donut and sc.kind.value == "donut":
            line += f"   fitted-mean KS {fitted_power(sc, args.N, args.reps, args.seed):.3f}"
        print(line, flush=True)


if __name__ == "__main__":
    main()
