"""Imbalance and memory measures plus time-series export.

The exported CSV/JSON schema is a stable contract:
tick,imbalance,norm_imbalance,max_util,avg_util,max_queue,avg_queue,
p50_lat,p99_lat,max_lat,throughput,total_memory
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from .core import ValidationError

COLUMNS = (
    "tick",
    "imbalance",
    "norm_imbalance",
    "max_util",
    "avg_util",
    "max_queue",
    "avg_queue",
    "p50_lat",
    "p99_lat",
    "max_lat",
    "throughput",
    "total_memory",
)


def imbalance(loads: Sequence[float], capacities: Sequence[float]) -> float:
    """Max normalized load minus average normalized load."""
    if len(loads) != len(capacities):
        raise ValidationError("loads and capacities must have equal length")
    for i, c in enumerate(capacities):
        if c <= 0:
            raise ValidationError(f"capacity at index {i} must be positive")
    utils = [l / c for l, c in zip(loads, capacities)]
    return max(utils) - sum(utils) / len(utils)


def normalized_imbalance(loads: Sequence[float], capacities: Sequence[float], m: float) -> float:
    """Imbalance relative to the average normalized load; dimensionless."""
    if m <= 0:
        raise ValidationError("m must be positive")
    utils = [l / c for l, c in zip(loads, capacities)]
    avg = sum(utils) / len(utils)
    if avg == 0:
        return 0.0
    return (max(utils) - avg) / avg


def sg_memory_upper_bound(counts: Sequence[int], n: int) -> int:
    """Sum over keys of min(occurrences, n)."""
    return sum(min(c, n) for c in counts)


def porc_memory_lower_bound(pmf: Sequence[float], n: int, epsilon: float) -> int:
    """Sum over keys of ceil(p_i * n / (1 + epsilon))."""
    return sum(math.ceil(p * n / (1.0 + epsilon)) for p in pmf)


def percentile(sorted_values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile over a pre-sorted sequence; 0 when empty."""
    if not sorted_values:
        return 0.0
    idx = min(len(sorted_values) - 1, max(0, math.ceil(q * len(sorted_values)) - 1))
    return sorted_values[idx]


@dataclass
class MetricsSeries:
    """Time-indexed samples, one row per sampling interval."""

    rows: list[tuple] = field(default_factory=list)

    def append(self, row: tuple) -> None:
        if len(row) != len(COLUMNS):
            raise ValidationError(f"metrics row needs {len(COLUMNS)} fields")
        if self.rows and row[0] <= self.rows[-1][0]:
            raise ValidationError("sample ticks must be strictly increasing")
        self.rows.append(row)

    def column(self, name: str) -> list:
        i = COLUMNS.index(name)
        return [row[i] for row in self.rows]

    def last(self, name: str):
        return self.column(name)[-1]


def _fmt(value) -> str:
    if isinstance(value, int):
        return str(value)
    return format(value, ".6g")


def export(series: MetricsSeries, path: str, fmt: str = "csv") -> None:
    """Write the series deterministically; numbers carry 6 significant digits."""
    if fmt == "csv":
        lines = [",".join(COLUMNS)]
        lines.extend(",".join(_fmt(v) for v in row) for row in series.rows)
        payload = "\n".join(lines) + "\n"
    elif fmt == "json":
        records = [
            {col: (v if isinstance(v, int) else float(format(v, ".6g")))
             for col, v in zip(COLUMNS, row)}
            for row in series.rows
        ]
        payload = json.dumps(records, indent=2) + "\n"
    else:
        raise ValidationError(f"unknown export format {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"failed writing metrics to {path}: {exc}") from exc
