#!/usr/bin/env python3
"""Rejection rates under the null: independence tests on uniform samples and the
goodness-of-fit test on Frank samples (with and without refitting).

    python3 scripts/null_calibration.py indep --N 30 --size 8
    python3 scripts/null_calibration.py gof --N 50 --theta 2 --size 12 --reps 200
"""

import argparse
import math
from dataclasses import replace

import numpy as np

from rankcopula.copulas import Frank
from rankcopula.core import BivariateSample, derive_stream, spawn_seed
from rankcopula.gof import GofConfig, ReferenceBank, gof_test
from rankcopula.indep_bench import indep_threshold, null_statistics


def indep(args):
    m = math.inf if args.num_subsamples == "inf" else int(args.num_subsamples)
    thr = indep_threshold(args.N, args.size, m, args.alpha, reps=args.reps, seed=args.seed)
    fresh = null_statistics(args.N, [args.size], m, reps=args.reps, seed=args.seed + 1)[:, 0]
    rate = float(np.mean(fresh > thr))
    print(f"new test N={args.N} n={args.size} m={args.num_subsamples}: rate {rate:.4f}"
          f" +- {math.sqrt(rate * (1 - rate) / args.reps):.4f}")


def gof(args):
    for refit in (True, False):
        config = GofConfig(args.size, num_subsamples=math.inf, null_replicates=500, reference_seed=args.seed, refit=refit)
        bank = ReferenceBank(args.N, config)
        rejects = 0
        for r in range(args.reps):
            uv = Frank(args.theta).sample(args.N, derive_stream(args.seed + 1, r))
            rejects += gof_test(BivariateSample(uv[:, 0], uv[:, 1]), replace(config, seed=spawn_seed(args.seed, r)), bank).reject
        print(f"gof Frank({args.theta}) N={args.N} n={args.size} refit={refit}: rate {rejects / args.reps:.3f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="which", required=True)
    p = sub.add_parser("indep")
    p.add_argument("--N", type=int, default=30)
    p.add_argument("--size", type=int, default=8)
    p.add_argument("--num-subsamples", default="10000")
    p.add_argument("--reps", type=int, default=3000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=indep)
    p = sub.add_parser("gof")
    p.add_argument("--N", type=int, default=50)
    p.add_argument("--theta", type=float, default=2.0)
    p.add_argument("--size", type=int, default=12)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=5)
    p.set_defaults(func=gof)
    args = ap.parse_args()
    args.func(args)


if __name__ == "__main__":
    main()
