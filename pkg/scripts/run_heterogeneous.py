#!/usr/bin/env python3
"""Simulate heterogeneous workers and compare delegation-aware routing with
static strategies; writes one metrics CSV per strategy.

Example:
    python3 scripts/run_heterogeneous.py --messages 1000000 --out out/hetero
"""

import argparse
import sys
from pathlib import Path

from streambal.core import WorkloadSpec, normalize_capacities
from streambal.metrics import export
from streambal.simulator import SimConfig, run
from streambal.workload import CapacitySchedule, heterogeneous_profile


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--messages", type=int, default=1_000_000)
    parser.add_argument("--keys", type=int, default=100_000)
    parser.add_argument("--zipf", type=float, default=1.0)
    parser.add_argument("--workers", type=int, default=10)
    parser.add_argument("--fast-workers", type=int, default=3)
    parser.add_argument("--speedup", type=float, default=5.0)
    parser.add_argument("--rho", type=float, default=0.8)
    parser.add_argument("--strategies", nargs="+", default=["cg", "kg", "sg"])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out/hetero")
    args = parser.parse_args()

    workload = WorkloadSpec(
        distinct_keys=args.keys,
        zipf_exponent=args.zipf,
        message_count=args.messages,
        seed=args.seed,
    )
    schedule = CapacitySchedule(normalize_capacities(
        heterogeneous_profile(args.workers, args.fast_workers, args.speedup)
    ))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    for strategy in args.strategies:
        config = SimConfig(
            strategy=strategy,
            n=args.workers,
            workload=workload,
            schedule=schedule,
            rho=args.rho,
            seed=args.seed,
        )
        result = run(config)
        path = out_dir / f"metrics_{strategy}.csv"
        export(result.series, str(path), "csv")
        # Post-warmup samples from the arrival phase; the drain tail is excluded.
        warm = [
            value
            for tick, value in zip(result.series.column("tick"),
                                   result.series.column("norm_imbalance"))
            if 0.2 * args.messages <= tick <= args.messages
        ]
        print(f"{strategy}: post-warmup mean norm_imbalance="
              f"{sum(warm) / len(warm):.4f} p99_latency={result.latency_p99} "
              f"migrations={len(result.migrations)} -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
