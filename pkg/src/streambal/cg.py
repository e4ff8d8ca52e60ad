"""Consistent grouping: virtual-worker table, delegation signals, FCFS pairing,
and eventually-consistent per-source views.

Signals are broadcast as sequenced envelopes carrying the emitting worker's
view of the per-virtual-worker loads. Sources buffer envelopes and apply them
in sequence order, so every source that has received the full signal stream
holds a bitwise-identical table, regardless of ack interleaving.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import Signal, SignalKind, ValidationError
from .partitioners import PowerOfRandomChoices


@dataclass
class DelegationConfig:
    theta_idle: float = 0.75
    theta_busy: float = 0.85
    time_slot: int = 1000

    def __post_init__(self) -> None:
        if not (0 < self.theta_idle < self.theta_busy):
            raise ValidationError("need 0 < theta_idle < theta_busy")
        if self.time_slot < 1:
            raise ValidationError("time_slot must be a positive tick count")


class WorkerClass:
    IDLE = "idle"
    OK = "ok"
    BUSY = "busy"


def classify_worker(utilization: float, capacity: float, config: DelegationConfig) -> str:
    """Busy above theta_busy*c, idle below theta_idle*c; boundaries map to Ok."""
    if capacity <= 0:
        raise ValidationError("capacity must be positive")
    if utilization > config.theta_busy * capacity:
        return WorkerClass.BUSY
    if utilization < config.theta_idle * capacity:
        return WorkerClass.IDLE
    return WorkerClass.OK


def emit_signal(
    worker: int,
    old_class: str,
    new_class: str,
    tick: int,
    last_signal_tick: int,
    time_slot: int,
) -> Optional[Signal]:
    """Signal on a transition into Busy or Idle, gated by the time slot."""
    if new_class == old_class:
        return None
    if tick - last_signal_tick < time_slot:
        return None
    if new_class == WorkerClass.BUSY:
        return Signal(worker, SignalKind.DECREASE_WORKLOAD, tick)
    if new_class == WorkerClass.IDLE:
        return Signal(worker, SignalKind.INCREASE_WORKLOAD, tick)
    return None


class VirtualWorkerTable:
    """Mapping of virtual workers to physical workers.

    The total virtual-worker count alpha*n is conserved; only ownership moves.
    """

    def __init__(self, assignment: list[int], n: int, alpha: int):
        self.assignment = assignment
        self.n = n
        self.alpha = alpha
        self._owned: list[set[int]] = [set() for _ in range(n)]
        for vw, w in enumerate(assignment):
            self._owned[w].add(vw)

    @property
    def num_virtual(self) -> int:
        return len(self.assignment)

    def owned_by(self, worker: int) -> set[int]:
        return self._owned[worker]

    def migrate(self, vw: int, to_worker: int) -> None:
        frm = self.assignment[vw]
        self._owned[frm].discard(vw)
        self._owned[to_worker].add(vw)
        self.assignment[vw] = to_worker

    def copy(self) -> "VirtualWorkerTable":
        return VirtualWorkerTable(list(self.assignment), self.n, self.alpha)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VirtualWorkerTable) and self.assignment == other.assignment


def init_ring(n: int, alpha: int) -> VirtualWorkerTable:
    """Initial table: virtual worker v maps to worker v mod n."""
    if n < 1 or alpha < 1:
        raise ValidationError("init_ring needs n >= 1 and alpha >= 1")
    return VirtualWorkerTable([v % n for v in range(alpha * n)], n, alpha)


@dataclass
class PairingQueues:
    """FCFS idle/busy queues. A worker appears at most once across both."""

    idle: deque = field(default_factory=deque)
    busy: deque = field(default_factory=deque)

    def enqueue(self, worker: int, kind: SignalKind) -> None:
        target = self.busy if kind is SignalKind.DECREASE_WORKLOAD else self.idle
        other = self.idle if kind is SignalKind.DECREASE_WORKLOAD else self.busy
        if worker in other:
            other.remove(worker)
        if worker not in target:
            target.append(worker)

    def copy(self) -> "PairingQueues":
        return PairingQueues(deque(self.idle), deque(self.busy))


@dataclass(frozen=True, slots=True)
class Migration:
    tick: int
    vw: int
    from_worker: int
    to_worker: int
    trigger_worker: int


def pair_and_migrate(
    queues: PairingQueues,
    table: VirtualWorkerTable,
    vw_loads: list[int],
) -> Optional[tuple[int, int, int]]:
    """Pair the busy-queue head with the idle-queue head and move one virtual worker.

    The moved virtual worker is the most loaded one owned by the busy worker
    (ties to the lowest id). Returns (vw, from, to) or None if no pair exists.
    """
    while queues.busy and queues.idle:
        frm = queues.busy[0]
        owned = table.owned_by(frm)
        if not owned:
            queues.busy.popleft()
            continue
        to = queues.idle[0]
        vw = min(owned, key=lambda v: (-vw_loads[v], v))
        queues.busy.popleft()
        queues.idle.popleft()
        table.migrate(vw, to)
        return vw, frm, to
    return None


@dataclass(frozen=True, slots=True)
class SignalEnvelope:
    """A delegation signal plus its global sequence number and the per-virtual-
    worker load snapshot taken at emission time."""

    seq: int
    signal: Signal
    vw_loads: tuple[int, ...]


class GroupingState:
    """Single-writer table + queues machine; applies envelopes in order."""

    def __init__(self, table: VirtualWorkerTable):
        self.table = table
        self.queues = PairingQueues()
        self.vw_loads: list[int] = [0] * table.num_virtual

    def apply(self, env: SignalEnvelope) -> Optional[tuple[int, int, int]]:
        self.vw_loads = list(env.vw_loads)
        self.queues.enqueue(env.signal.worker, env.signal.kind)
        return pair_and_migrate(self.queues, self.table, self.vw_loads)


class SourceView:
    """A source's eventually-consistent replica of the grouping state.

    Envelopes may arrive out of order across workers; they are buffered and
    applied in global sequence order so all views converge once the stream is
    fully delivered.
    """

    def __init__(self, source_id: int, table: VirtualWorkerTable):
        self.source_id = source_id
        self.state = GroupingState(table)
        self.next_seq = 0
        self._pending: dict[int, SignalEnvelope] = {}

    @property
    def table(self) -> VirtualWorkerTable:
        return self.state.table

    def deliver(self, envelopes: Iterable[SignalEnvelope]) -> list[tuple[int, int, int]]:
        """Deliver piggybacked envelopes; returns migrations applied locally."""
        for env in envelopes:
            if env.seq >= self.next_seq:
                self._pending[env.seq] = env
        migrations = []
        while self.next_seq in self._pending:
            env = self._pending.pop(self.next_seq)
            self.next_seq += 1
            mig = self.state.apply(env)
            if mig is not None:
                migrations.append(mig)
        return migrations


class ConsistentGrouping:
    """PoRC over alpha*n equal-sized virtual workers plus capacity-driven
    reassignment of virtual workers to physical workers.

    Routing state (the virtual-worker loads) is shared by all sources; each
    source resolves virtual worker -> physical worker through its own view.
    """

    def __init__(
        self,
        n: int,
        alpha: int,
        epsilon: float,
        seed: int,
        num_sources: int = 1,
        delegation: Optional[DelegationConfig] = None,
    ):
        if num_sources < 1:
            raise ValidationError("need at least one source")
        self.n = n
        self.alpha = alpha
        self.delegation = delegation or DelegationConfig()
        self.porc = PowerOfRandomChoices(n * alpha, seed, epsilon)
        base = init_ring(n, alpha)
        self.canonical = GroupingState(base.copy())
        self.sources = [SourceView(i, base.copy()) for i in range(num_sources)]
        self._seq = 0
        self.migration_log: list[Migration] = []

    def route(self, source_id: int, key: bytes) -> tuple[int, int]:
        """Returns (virtual worker, physical worker) per the source's view."""
        vw, _salt = self.porc.route(key)
        return vw, self.sources[source_id].table.assignment[vw]

    def emit(self, signal: Signal) -> SignalEnvelope:
        """Sequence a signal, apply it to the canonical machine, and return the
        envelope for piggybacked delivery to the sources."""
        env = SignalEnvelope(self._seq, signal, tuple(self.porc.load))
        self._seq += 1
        mig = self.canonical.apply(env)
        if mig is not None:
            vw, frm, to = mig
            self.migration_log.append(Migration(signal.issued_at, vw, frm, to, signal.worker))
        return env

    def virtual_workers_of(self, worker: int) -> int:
        return len(self.canonical.table.owned_by(worker))


def write_migration_log(path: str, migrations: Iterable[Migration]) -> None:
    """CSV export: tick,vw,from_worker,to_worker,trigger_worker."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "vw", "from_worker", "to_worker", "trigger_worker"])
        for m in migrations:
            writer.writerow([m.tick, m.vw, m.from_worker, m.to_worker, m.trigger_worker])
