#!/usr/bin/env python3
"""Sweep the capacity slack epsilon and report the imbalance/memory trade-off.

Routes with salted-hash probing over n*alpha virtual bins folded onto n
workers, the same structure the consistent-grouping layer uses.

Example:
    python3 scripts/run_epsilon_sweep.py --messages 1000000 --workers 10 --alpha 10
"""

import argparse
import sys

from streambal.partitioners import PowerOfRandomChoices
from streambal.workload import ZipfSampler


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--messages", type=int, default=1_000_000)
    parser.add_argument("--keys", type=int, default=100_000)
    parser.add_argument("--zipf", type=float, default=1.0)
    parser.add_argument("--workers", type=int, default=10)
    parser.add_argument("--alpha", type=int, default=10)
    parser.add_argument("--epsilons", type=float, nargs="+",
                        default=[1e-4, 1e-3, 1e-2, 1e-1, 1.0])
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    ranks = ZipfSampler(args.keys, args.zipf, args.seed).sample_ranks(args.messages)
    keys = [str(r).encode() for r in ranks]
    bins = args.workers * args.alpha

    print(f"{'epsilon':>10} {'imbalance':>12} {'memory':>10}")
    for eps in args.epsilons:
        p = PowerOfRandomChoices(bins, args.seed, eps)
        for key in keys:
            p.route(key)
        worker_load = [0] * args.workers
        for vw, load in enumerate(p.load):
            worker_load[vw % args.workers] += load
        imb = max(worker_load) - sum(worker_load) / args.workers
        _, memory = p.memory_footprint()
        print(f"{eps:>10g} {imb:>12.1f} {memory:>10}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
