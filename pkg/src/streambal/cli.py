"""Command-line front end: single runs, parameter sweeps, trace generation.

Config precedence is command-line override > config file > built-in default;
the seed additionally falls back to the STREAMBAL_SEED environment variable.
Exit codes: 0 success, 1 validation error, 2 runtime error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional

from . import __version__
from .cg import DelegationConfig, write_migration_log
from .core import ValidationError, WorkloadSpec, normalize_capacities
from .metrics import export
from .partitioners import write_routing_log
from .simulator import SimConfig, SimResult, run
from .workload import CapacitySchedule, generate_stream, heterogeneous_profile, write_trace

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_IO = 3

DEFAULTS = {
    "workload": {"distinct_keys": 100_000, "zipf_exponent": 1.0, "message_count": 100_000},
    "capacities": {"n": 10, "y": 0, "zfactor": 1.0},
    "strategy": {"name": "cg", "epsilon": 0.01, "alpha": 10},
    "delegation": {"theta_idle": 0.75, "theta_busy": 0.85, "time_slot": 1000},
    "simulator": {"rho": 0.8, "sources": 1, "sample_interval": None,
                  "utilization_mode": "arrival_rate"},
    "output": {"dir": "out", "format": "csv", "log_routing": False, "log_migrations": False},
}

SWEEP_COLUMNS = (
    "strategy", "n", "epsilon", "alpha", "z", "seed",
    "final_imbalance", "final_norm_imbalance", "total_memory", "max_queue", "p99_lat", "error",
)


def _merged(config: dict) -> dict:
    merged = {}
    for section, defaults in DEFAULTS.items():
        merged[section] = dict(defaults)
        merged[section].update(config.get(section, {}))
    for section in config:
        if section not in merged:
            merged[section] = config[section]
    return merged


def _resolve_seed(args, config: dict) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    file_seed = config.get("workload", {}).get("seed")
    if file_seed is not None:
        return int(file_seed)
    env_seed = os.environ.get("STREAMBAL_SEED")
    if env_seed is not None:
        return int(env_seed)
    return 0


def _raw_capacities(cap_cfg: dict) -> list[float]:
    if "raw" in cap_cfg:
        return [float(c) for c in cap_cfg["raw"]]
    return heterogeneous_profile(
        int(cap_cfg["n"]), int(cap_cfg.get("y", 0)), float(cap_cfg.get("zfactor", 1.0))
    )


def _build_schedule(cap_cfg: dict) -> CapacitySchedule:
    initial = normalize_capacities(_raw_capacities(cap_cfg))
    events = []
    for event in cap_cfg.get("events", []):
        raw = event.get("raw")
        if raw is None:
            raw = heterogeneous_profile(
                initial.n, int(event.get("y", 0)), float(event.get("zfactor", 1.0))
            )
        events.append((int(event["after_messages"]), tuple(float(c) for c in raw)))
    return CapacitySchedule(initial, tuple(events))


def _build_workload(wl_cfg: dict, seed: int, z: Optional[float] = None) -> WorkloadSpec:
    if wl_cfg.get("trace_path"):
        return WorkloadSpec(trace_path=wl_cfg["trace_path"], seed=seed)
    return WorkloadSpec(
        distinct_keys=int(wl_cfg["distinct_keys"]),
        zipf_exponent=float(z if z is not None else wl_cfg["zipf_exponent"]),
        message_count=int(wl_cfg["message_count"]),
        seed=seed,
    )


def _build_sim_config(config: dict, args, overrides: Optional[dict] = None) -> SimConfig:
    overrides = overrides or {}
    seed = overrides.get("seed", _resolve_seed(args, config))
    strat_cfg = config["strategy"]
    cap_cfg = dict(config["capacities"])
    if "n" in overrides:
        cap_cfg["n"] = overrides["n"]
    schedule = _build_schedule(cap_cfg)
    strategy = overrides.get("strategy") or getattr(args, "strategy", None) or strat_cfg["name"]
    deleg = config["delegation"]
    sim = config["simulator"]
    return SimConfig(
        strategy=strategy,
        n=schedule.initial.n,
        workload=_build_workload(config["workload"], seed, overrides.get("z")),
        schedule=schedule,
        epsilon=float(overrides.get("epsilon", strat_cfg.get("epsilon", 0.01))),
        alpha=int(overrides.get("alpha", strat_cfg.get("alpha", 10))),
        delegation=DelegationConfig(
            theta_idle=float(deleg["theta_idle"]),
            theta_busy=float(deleg["theta_busy"]),
            time_slot=int(deleg["time_slot"]),
        ),
        sources=int(sim["sources"]),
        rho=float(sim["rho"]),
        seed=seed,
        sample_interval=sim.get("sample_interval"),
        utilization_mode=sim.get("utilization_mode", "arrival_rate"),
        log_routing=bool(config["output"].get("log_routing", False)
                         or getattr(args, "log_routing", False)),
    )


def _atomic_write(path: Path, payload: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(payload, encoding="utf-8")
    tmp.replace(path)


def _write_manifest(out_dir: Path, config: dict, seed: int, strategy: str,
                    outputs: list[str], wall_clock: float) -> None:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    manifest = {
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
        "seed": seed,
        "strategy": strategy,
        "outputs": outputs,
        "wall_clock_seconds": wall_clock,
        "version": __version__,
    }
    _atomic_write(out_dir / "run_manifest.json", json.dumps(manifest, indent=2) + "\n")


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return _merged({})
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return _merged(json.load(fh))
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc


def _summary_row(point: dict, result: SimResult, error: str = "") -> list:
    caps = result.final_profile.capacities
    utils = [a / c for a, c in zip(result.worker_arrivals, caps)]
    avg = sum(utils) / len(utils)
    imb = max(utils) - avg
    return [
        point["strategy"], point["n"], point["epsilon"], point["alpha"],
        point["z"], point["seed"],
        format(imb, ".6g"), format(imb / avg if avg else 0.0, ".6g"),
        result.total_memory,
        max(result.series.column("max_queue"), default=0),
        format(result.latency_p99, ".6g"),
        error,
    ]


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    sim_config = _build_sim_config(config, args)
    out_dir = Path(args.out or config["output"]["dir"])
    fmt = args.format or config["output"]["format"]
    if fmt not in ("csv", "json"):
        raise ValidationError(f"format must be csv or json, got {fmt!r}")
    started = time.monotonic()
    result = run(sim_config)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    metrics_path = out_dir / f"metrics.{fmt}"
    export(result.series, str(metrics_path), fmt)
    outputs.append(str(metrics_path))
    if args.log_routing or config["output"].get("log_routing"):
        path = out_dir / "routing_log.csv"
        write_routing_log(str(path), result.routing_log or [])
        outputs.append(str(path))
    if args.log_migrations or config["output"].get("log_migrations"):
        path = out_dir / "migration_log.csv"
        write_migration_log(str(path), result.migrations)
        outputs.append(str(path))
    _write_manifest(out_dir, config, sim_config.seed, sim_config.strategy,
                    outputs, time.monotonic() - started)
    print(f"routed={result.routed} served={result.served} "
          f"total_memory={result.total_memory} p99_latency={result.latency_p99}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    grid = config.get("grid")
    if not grid:
        raise ValidationError("sweep config needs a 'grid' section")
    base_seed = _resolve_seed(args, config)
    axes = {
        "strategy": grid.get("strategy", [config["strategy"]["name"]]),
        "n": grid.get("n", [config["capacities"]["n"]]),
        "epsilon": grid.get("epsilon", [config["strategy"].get("epsilon", 0.01)]),
        "alpha": grid.get("alpha", [config["strategy"].get("alpha", 10)]),
        "z": grid.get("z", [config["workload"].get("zipf_exponent", 1.0)]),
        "seed": grid.get("seed", [base_seed]),
    }
    out_dir = Path(args.out or config["output"]["dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    rows = []
    any_failed = False
    for combo in itertools.product(*axes.values()):
        point = dict(zip(axes.keys(), combo))
        try:
            sim_config = _build_sim_config(config, args, overrides=point)
            result = run(sim_config)
            rows.append(_summary_row(point, result))
        except Exception as exc:  # a failing point is recorded; the sweep continues
            any_failed = True
            rows.append([point["strategy"], point["n"], point["epsilon"], point["alpha"],
                         point["z"], point["seed"], "", "", "", "", "", str(exc)])
    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        writer.writerows(rows)
    _write_manifest(out_dir, config, base_seed, "sweep",
                    [str(sweep_path)], time.monotonic() - started)
    print(f"sweep wrote {len(rows)} rows to {sweep_path}")
    return EXIT_RUNTIME if any_failed else EXIT_OK


def cmd_gen_trace(args) -> int:
    seed = args.seed if args.seed is not None else int(os.environ.get("STREAMBAL_SEED", "0"))
    if args.messages == 0:
        messages = []
    else:
        spec = WorkloadSpec(
            distinct_keys=args.keys,
            zipf_exponent=args.zipf,
            message_count=args.messages,
            seed=seed,
        )
        messages = generate_stream(spec)
    write_trace(args.out, messages,
                header=f"zipf trace: keys={args.keys} z={args.zipf} "
                       f"m={args.messages} seed={seed}")
    print(f"wrote {len(messages)} messages to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streambal",
                                     description="Stream partitioning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one simulation")
    sim.add_argument("--config", help="JSON config file")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--strategy", choices=SIM_STRATEGY_NAMES)
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--format", choices=["csv", "json"])
    sim.add_argument("--log-routing", action="store_true")
    sim.add_argument("--log-migrations", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    sweep = sub.add_parser("sweep", help="run a parameter grid")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--strategy", choices=SIM_STRATEGY_NAMES)
    sweep.add_argument("--out")
    sweep.set_defaults(func=cmd_sweep)

    gen = sub.add_parser("gen-trace", help="write a synthetic trace file")
    gen.add_argument("--keys", type=int, default=100_000)
    gen.add_argument("--zipf", type=float, default=1.0)
    gen.add_argument("--messages", type=int, required=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen_trace)
    return parser


SIM_STRATEGY_NAMES = ("kg", "sg", "pkg", "potc", "porc", "ch", "cg")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
