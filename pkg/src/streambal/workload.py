"""Zipf stream synthesis, trace ingestion, and capacity schedules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import CapacityProfile, Message, ValidationError, WorkloadSpec, normalize_capacities


def zipf_pmf(r: int, c: int, z: float) -> float:
    """Probability of the rank-r key among c keys with exponent z."""
    if not (1 <= r <= c):
        raise ValidationError(f"rank {r} out of range [1, {c}]")
    if z < 0:
        raise ValidationError("zipf exponent must be >= 0")
    ranks = np.arange(1, c + 1, dtype=np.float64)
    weights = ranks ** -z
    return float((1.0 / r ** z) / weights.sum())


class ZipfSampler:
    """Inverse-CDF sampler over ranks 1..c; the cumulative table is built eagerly."""

    def __init__(self, c: int, z: float, seed: int):
        if c < 1:
            raise ValidationError("need at least one key")
        if z < 0:
            raise ValidationError("zipf exponent must be >= 0")
        self.c = c
        self.z = z
        ranks = np.arange(1, c + 1, dtype=np.float64)
        weights = ranks ** -z
        self.pmf = weights / weights.sum()
        self._cum = np.cumsum(self.pmf)
        self._cum[-1] = 1.0
        self._rng = np.random.default_rng(seed)

    def sample_ranks(self, m: int) -> np.ndarray:
        """m i.i.d. 0-based rank indices (0 = most frequent key)."""
        u = self._rng.random(m)
        return np.searchsorted(self._cum, u, side="right")


def generate_stream(spec: WorkloadSpec) -> list[Message]:
    """Materialize the workload: m messages, one per tick, keys as decimal rank strings."""
    if not spec.is_synthetic:
        return read_trace(spec.trace_path)
    sampler = ZipfSampler(spec.distinct_keys, spec.zipf_exponent, spec.seed)
    idx = sampler.sample_ranks(spec.message_count)
    key_bytes = [str(r).encode() for r in range(spec.distinct_keys)]
    return [Message(i, key_bytes[idx[i]], i) for i in range(spec.message_count)]


def read_trace(path: str) -> list[Message]:
    """Parse `timestamp,key` lines; `#` starts a comment; timestamps must not regress."""
    messages: list[Message] = []
    last_ts = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            ts_str, sep, key = line.partition(",")
            if not sep:
                raise ValidationError(f"{path}:{lineno}: expected 'timestamp,key'")
            try:
                ts = int(ts_str)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: bad timestamp {ts_str!r}") from None
            if last_ts is not None and ts < last_ts:
                raise ValidationError(f"{path}:{lineno}: timestamp regression {ts} < {last_ts}")
            last_ts = ts
            messages.append(Message(len(messages), key.encode(), ts))
    return messages


def write_trace(path: str, messages: Sequence[Message], header: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for msg in messages:
            fh.write(f"{msg.timestamp},{msg.key.decode('utf-8')}\n")


def heterogeneous_profile(n: int, y: int, zfactor: float) -> list[float]:
    """Raw capacities where y machines are zfactor times more powerful than the rest."""
    if zfactor < 1:
        raise ValidationError("zfactor must be >= 1")
    if y < 0 or (y >= n and zfactor > 1):
        raise ValidationError("need 0 <= y <= n-1 (or zfactor == 1)")
    return [zfactor] * y + [1.0] * (n - y)


@dataclass(frozen=True)
class CapacitySchedule:
    """Initial profile plus capacity-change events at routed-message thresholds."""

    initial: CapacityProfile
    events: tuple[tuple[int, tuple[float, ...]], ...] = ()

    def __post_init__(self) -> None:
        last = 0
        for threshold, raw in self.events:
            if threshold <= last:
                raise ValidationError("event thresholds must be strictly increasing")
            if len(raw) != self.initial.n:
                raise ValidationError("capacity events must keep the worker count")
            last = threshold

    def profile_for_event(self, index: int) -> CapacityProfile:
        return normalize_capacities(list(self.events[index][1]))
