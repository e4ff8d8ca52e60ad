"""Routing strategies over n bins: KG, SG, PKG, PoTC, PoRC and CH-with-bounded-load.

Every strategy exposes ``route(key, msg_id) -> (bin, aux)`` and mutates its own
load vector. ``aux`` is the salt used (PoRC), the probe count (CH) or 0.
A "bin" is a virtual worker when driven by the consistent-grouping layer, or a
physical worker when the strategy is used standalone.

Each instance is a single-writer state machine; run parallel experiments on
independent instances.
"""

from __future__ import annotations

import csv
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable

from .core import ValidationError
from .hashing import hash64, salted_index, unit_circle

PORC_PROBE_CAP_FACTOR = 64


@dataclass(frozen=True, slots=True)
class RouteRecord:
    """Audit-trail entry for one routed message."""

    message_id: int
    key: bytes
    bin: int
    aux: int  # salt used (PoRC), probe count (CH), 0 otherwise
    tick: int


class Partitioner:
    """Common load-vector state shared by all strategies."""

    name = "base"

    def __init__(self, n: int, seed: int = 0):
        if n < 1:
            raise ValidationError("partitioner needs n >= 1 bins")
        self.n = n
        self.seed = seed
        self.load = [0] * n
        self.total_routed = 0
        self._key_bins: dict[bytes, set[int]] = {}

    def route(self, key: bytes, msg_id: int = 0) -> tuple[int, int]:
        raise NotImplementedError

    def _commit(self, key: bytes, bin_: int) -> None:
        self.load[bin_] += 1
        self.total_routed += 1
        bins = self._key_bins.get(key)
        if bins is None:
            self._key_bins[key] = {bin_}
        else:
            bins.add(bin_)

    def memory_footprint(self) -> tuple[list[int], int]:
        """Per-bin distinct-key counts and the total over all bins."""
        per_bin = [0] * self.n
        total = 0
        for bins in self._key_bins.values():
            total += len(bins)
            for b in bins:
                per_bin[b] += 1
        return per_bin, total

    @property
    def distinct_keys(self) -> int:
        return len(self._key_bins)


class KeyGrouping(Partitioner):
    """Hash the key, always to the same bin. Load- and time-independent."""

    name = "kg"

    def __init__(self, n: int, seed: int = 0):
        super().__init__(n, seed)
        self._cache: dict[bytes, int] = {}

    def route(self, key: bytes, msg_id: int = 0) -> tuple[int, int]:
        b = self._cache.get(key)
        if b is None:
            b = self._cache[key] = hash64(key, self.seed) % self.n
        self._commit(key, b)
        return b, 0


class ShuffleGrouping(Partitioner):
    """Round-robin, key-oblivious."""

    name = "sg"

    def __init__(self, n: int, seed: int = 0):
        super().__init__(n, seed)
        self.rr_cursor = 0

    def route(self, key: bytes, msg_id: int = 0) -> tuple[int, int]:
        b = self.rr_cursor
        self.rr_cursor = (b + 1) % self.n
        self._commit(key, b)
        return b, 0


class PartialKeyGrouping(Partitioner):
    """Two hashed candidates per key; route to the lesser loaded.

    Ties break to the smaller bin index. Each key touches at most two bins.
    """

    name = "pkg"

    def __init__(self, n: int, seed: int = 0):
        if n < 2:
            raise ValidationError("pkg needs n >= 2 bins")
        super().__init__(n, seed)
        self._cache: dict[bytes, tuple[int, int]] = {}

    def route(self, key: bytes, msg_id: int = 0) -> tuple[int, int]:
        pair = self._cache.get(key)
        if pair is None:
            b1 = salted_index(key, 1, self.n, self.seed)
            b2 = salted_index(key, 1, self.n, self.seed ^ 1)
            pair = self._cache[key] = (b1, b2)
        b1, b2 = pair
        load = self.load
        if load[b1] < load[b2]:
            b = b1
        elif load[b2] < load[b1]:
            b = b2
        else:
            b = min(b1, b2)
        self._commit(key, b)
        return b, 0


class PowerOfTwoChoices(Partitioner):
    """Two candidates hashed from the message id (not the key)."""

    name = "potc"

    def __init__(self, n: int, seed: int = 0):
        if n < 2:
            raise ValidationError("potc needs n >= 2 bins")
        super().__init__(n, seed)

    def route(self, key: bytes, msg_id: int = 0) -> tuple[int, int]:
        mid = msg_id.to_bytes(8, "little")
        b1 = hash64(mid, self.seed ^ 2) % self.n
        b2 = hash64(mid, self.seed ^ 3) % self.n
        load = self.load
        if load[b1] < load[b2]:
            b = b1
        elif load[b2] < load[b1]:
            b = b2
        else:
            b = min(b1, b2)
        self._commit(key, b)
        return b, 0


class PowerOfRandomChoices(Partitioner):
    """Salted-hash probing to the first bin under the running capacity threshold.

    A bin is full when its load reaches (1+epsilon) * (m_t + 1) / n, where m_t
    counts messages routed before the current one. Counting the arriving
    message keeps the first placement well-defined while preserving the bound
    I(m) <= epsilon * m / n + 1.
    """

    name = "porc"

    def __init__(self, n: int, seed: int = 0, epsilon: float = 0.01):
        super().__init__(n, seed)
        if epsilon < 0:
            raise ValidationError("epsilon must be >= 0")
        self.epsilon = epsilon
        self._eps1 = 1.0 + epsilon
        self._probe_cap = PORC_PROBE_CAP_FACTOR * n
        # Per-key probe sequences, extended lazily; hot keys re-probe on every
        # arrival so caching the salted indices dominates the running time.
        self._seq: dict[bytes, list[int]] = {}

    def route(self, key: bytes, msg_id: int = 0) -> tuple[int, int]:
        seq = self._seq.get(key)
        if seq is None:
            seq = self._seq[key] = []
        threshold = self._eps1 * (self.total_routed + 1) / self.n
        load = self.load
        i = 0
        while True:
            if i == len(seq):
                seq.append(salted_index(key, i + 1, self.n, self.seed))
            b = seq[i]
            if load[b] < threshold:
                break
            i += 1
            if i >= self._probe_cap:
                raise RuntimeError("porc probe bound exceeded")
        self._commit(key, b)
        return b, i + 1


class ConsistentHashingBoundedLoad(Partitioner):
    """Clockwise ring walk to the first bin under the same running threshold.

    Each bin is placed exactly once on the unit circle; multiplicity, when
    needed, comes from the virtual-worker layer above.
    """

    name = "ch"

    def __init__(self, n: int, seed: int = 0, epsilon: float = 0.01):
        super().__init__(n, seed)
        if epsilon < 0:
            raise ValidationError("epsilon must be >= 0")
        self.epsilon = epsilon
        self._eps1 = 1.0 + epsilon
        placed = sorted((unit_circle(str(b).encode(), seed), b) for b in range(n))
        self.ring = placed
        self._positions = [p for p, _ in placed]
        self._order = [b for _, b in placed]
        if len(set(self._positions)) != n:
            raise ValidationError("ring position collision; change the seed")
        self._start: dict[bytes, int] = {}

    def route(self, key: bytes, msg_id: int = 0) -> tuple[int, int]:
        start = self._start.get(key)
        if start is None:
            pos = unit_circle(key, self.seed)
            start = bisect_right(self._positions, pos) % self.n
            self._start[key] = start
        threshold = self._eps1 * (self.total_routed + 1) / self.n
        load = self.load
        order = self._order
        n = self.n
        for probes in range(n):
            b = order[(start + probes) % n]
            if load[b] < threshold:
                self._commit(key, b)
                return b, probes + 1
        # At least one bin is always below the (m_t+1)-average threshold.
        raise AssertionError("ch walked the full ring without placement")


STRATEGIES = {
    "kg": KeyGrouping,
    "sg": ShuffleGrouping,
    "pkg": PartialKeyGrouping,
    "potc": PowerOfTwoChoices,
    "porc": PowerOfRandomChoices,
    "ch": ConsistentHashingBoundedLoad,
}


def make_partitioner(name: str, n: int, seed: int = 0, epsilon: float = 0.01) -> Partitioner:
    if name not in STRATEGIES:
        raise ValidationError(f"unknown strategy {name!r}")
    cls = STRATEGIES[name]
    if name in ("porc", "ch"):
        return cls(n, seed, epsilon)
    return cls(n, seed)


def memory_footprint_from_log(n: int, records: Iterable[RouteRecord]) -> tuple[list[int], int]:
    """Per-bin distinct-key counts and total, recomputed from a routing log."""
    seen: list[set[bytes]] = [set() for _ in range(n)]
    for rec in records:
        seen[rec.bin].add(rec.key)
    per_bin = [len(s) for s in seen]
    return per_bin, sum(per_bin)


def write_routing_log(path: str, records: Iterable[RouteRecord]) -> None:
    """CSV export: message_id,key,bin,salt_or_probes,tick."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["message_id", "key", "bin", "salt_or_probes", "tick"])
        for rec in records:
            writer.writerow(
                [rec.message_id, rec.key.decode("utf-8", "replace"), rec.bin, rec.aux, rec.tick]
            )
