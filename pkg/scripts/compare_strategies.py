#!/usr/bin/env python3
"""Route one skewed stream through every strategy and tabulate imbalance/memory.

Example:
    python3 scripts/compare_strategies.py --messages 1000000 --zipf 1.4 --bins 100
"""

import argparse
import sys
import time

from streambal.partitioners import STRATEGIES, make_partitioner
from streambal.workload import ZipfSampler


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--messages", type=int, default=1_000_000)
    parser.add_argument("--keys", type=int, default=100_000)
    parser.add_argument("--zipf", type=float, default=1.4)
    parser.add_argument("--bins", type=int, default=100)
    parser.add_argument("--epsilon", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    ranks = ZipfSampler(args.keys, args.zipf, args.seed).sample_ranks(args.messages)
    keys = [str(r).encode() for r in ranks]

    print(f"{'strategy':<8} {'norm_imbalance':>14} {'memory':>10} {'seconds':>8}")
    for name in STRATEGIES:
        p = make_partitioner(name, args.bins, args.seed, args.epsilon)
        started = time.monotonic()
        for i, key in enumerate(keys):
            p.route(key, i)
        elapsed = time.monotonic() - started
        avg = sum(p.load) / args.bins
        norm = (max(p.load) - avg) / avg
        _, memory = p.memory_footprint()
        print(f"{name:<8} {norm:>14.6f} {memory:>10} {elapsed:>8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
