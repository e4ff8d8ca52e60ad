"""Deterministic tick-driven queueing simulation.

Per tick, in order: (1) deliver the previous tick's acks to their owning
sources, applying piggybacked signals; (2) inject this tick's arrival at a
round-robin source and route it; (3) fluid service: each worker accrues
service credit and dequeues whole messages, producing acks; (4) at time-slot
boundaries workers classify themselves and may emit delegation signals;
(5) apply capacity-schedule events crossed by the routed-message count.

Service is deterministic fluid (a capacity accumulator), so a run is a pure
function of its configuration. Network latency is zero.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .aggregation import PartialCounts, aggregate
from .cg import ConsistentGrouping, DelegationConfig, Migration, WorkerClass, classify_worker
from .core import CapacityProfile, Signal, SignalKind, ValidationError, WorkloadSpec
from .metrics import MetricsSeries, percentile
from .partitioners import RouteRecord, make_partitioner
from .workload import CapacitySchedule, generate_stream

SIM_STRATEGIES = ("kg", "sg", "pkg", "potc", "porc", "ch", "cg")


@dataclass
class WorkerRuntime:
    """One simulated worker: unbounded FIFO queue plus a service accumulator."""

    worker: int
    service_rate: float  # messages per tick
    queue: deque = field(default_factory=deque)
    accumulator: float = 0.0
    window_arrivals: int = 0  # monitoring window (reset each time slot)
    sample_arrivals: int = 0  # metrics window (reset each sample interval)
    total_arrivals: int = 0
    keys: set = field(default_factory=set)


def utilization(runtime: WorkerRuntime, window: int, mode: str = "arrival_rate") -> float:
    """Trailing-window utilization of a worker, normalized by its capacity."""
    if window < 1:
        raise ValidationError("utilization window must be >= 1 tick")
    if mode == "queue_length":
        return len(runtime.queue) / (runtime.service_rate * window)
    return runtime.window_arrivals / (runtime.service_rate * window)


def service_step(runtime: WorkerRuntime, tick: int) -> list[tuple[int, int, bytes]]:
    """One tick of fluid service: accrue capacity credit and dequeue whole messages.

    Returns the completed (arrival_tick, source, key) entries, in FIFO order.
    No credit accrues while the queue is empty.
    """
    q = runtime.queue
    if not q:
        runtime.accumulator = 0.0
        return []
    runtime.accumulator += runtime.service_rate
    k = int(runtime.accumulator)
    if k <= 0:
        return []
    if k > len(q):
        k = len(q)
    runtime.accumulator -= k
    return [q.popleft() for _ in range(k)]


@dataclass(frozen=True, slots=True)
class AckEvent:
    message_id: int
    worker: int
    finish_tick: int
    piggybacked: Optional[Signal] = None


@dataclass(frozen=True, slots=True)
class ClassificationSample:
    """Monitoring snapshot: worker class and virtual-worker count at a slot boundary."""

    tick: int
    worker: int
    worker_class: str
    virtual_workers: int
    capacity: float


@dataclass
class SimConfig:
    strategy: str
    n: int
    workload: WorkloadSpec
    schedule: CapacitySchedule
    epsilon: float = 0.01
    alpha: int = 10
    delegation: DelegationConfig = field(default_factory=DelegationConfig)
    sources: int = 1
    rho: float = 0.8
    seed: int = 0
    sample_interval: Optional[int] = None
    utilization_mode: str = "arrival_rate"
    log_routing: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in SIM_STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if not (0 < self.rho < 1):
            raise ValidationError("rho must be in (0, 1): the system must be well provisioned")
        if self.sources < 1:
            raise ValidationError("need at least one source")
        if self.epsilon < 0:
            raise ValidationError("epsilon must be >= 0")
        if self.alpha < 1:
            raise ValidationError("alpha must be >= 1")
        if self.schedule.initial.n != self.n:
            raise ValidationError("capacity profile size must equal n")
        if self.utilization_mode not in ("arrival_rate", "queue_length"):
            raise ValidationError("utilization_mode must be arrival_rate or queue_length")


@dataclass
class SimResult:
    series: MetricsSeries
    routed: int
    served: int
    worker_arrivals: list[int]
    worker_memory: list[int]
    final_profile: CapacityProfile
    latency_p50: float
    latency_p99: float
    latency_max: float
    aggregated_totals: dict[bytes, int]
    migrations: list[Migration]
    classifications: list[ClassificationSample]
    signals: list[Signal]
    routing_log: Optional[list[RouteRecord]] = None
    grouping: Optional[ConsistentGrouping] = None

    @property
    def total_memory(self) -> int:
        return sum(self.worker_memory)


def run(config: SimConfig, stream=None) -> SimResult:
    """Execute until every message is routed and all queues are drained."""
    if stream is None:
        stream = generate_stream(config.workload)
    m = len(stream)
    n = config.n
    s = config.sources
    t0 = config.delegation.time_slot
    sample_interval = config.sample_interval or max(1, m // 200)

    profile = config.schedule.initial
    workers = [
        WorkerRuntime(w, profile.capacities[w] / config.rho) for w in range(n)
    ]

    use_cg = config.strategy == "cg"
    grouping: Optional[ConsistentGrouping] = None
    partitioner = None
    if use_cg:
        grouping = ConsistentGrouping(
            n, config.alpha, config.epsilon, config.seed, s, config.delegation
        )
        # Signals pending delivery, per (worker, source); drained with each ack.
        pending: list[list[list]] = [[[] for _ in range(s)] for _ in range(n)]
    else:
        partitioner = make_partitioner(config.strategy, n, config.seed, config.epsilon)

    partials = [PartialCounts(w) for w in range(n)]
    routing_log: Optional[list[RouteRecord]] = [] if config.log_routing else None
    classifications: list[ClassificationSample] = []
    signals: list[Signal] = []
    series = MetricsSeries()

    events = list(config.schedule.events)
    event_idx = 0

    routed = 0
    served = 0
    queued = 0
    tick = 0
    ack_buffer: list[tuple[int, int]] = []  # (source, worker) acks from last tick
    interval_latencies: list[int] = []
    all_latencies: list[int] = []
    served_in_interval = 0
    last_sample_tick = 0

    def record_sample(now: int) -> None:
        nonlocal served_in_interval
        width = now - last_sample_tick
        caps = profile.capacities
        arr_utils = [wr.sample_arrivals / c for wr, c in zip(workers, caps)]
        avg_u = sum(arr_utils) / n
        imb = max(arr_utils) - avg_u
        norm = imb / avg_u if avg_u > 0 else 0.0
        rate_utils = [
            wr.sample_arrivals / (wr.service_rate * width) if width else 0.0 for wr in workers
        ]
        qlens = [len(wr.queue) for wr in workers]
        lats = sorted(interval_latencies)
        series.append(
            (
                now,
                imb,
                norm,
                max(rate_utils),
                sum(rate_utils) / n,
                max(qlens),
                sum(qlens) / n,
                float(percentile(lats, 0.50)),
                float(percentile(lats, 0.99)),
                float(lats[-1]) if lats else 0.0,
                served_in_interval / width if width else 0.0,
                sum(len(wr.keys) for wr in workers),
            )
        )
        for wr in workers:
            wr.sample_arrivals = 0
        interval_latencies.clear()
        served_in_interval = 0

    while routed < m or queued > 0:
        # (1) ack delivery with piggybacked signals
        if ack_buffer:
            if use_cg:
                for src, w in ack_buffer:
                    box = pending[w][src]
                    if box:
                        grouping.sources[src].deliver(box)
                        box.clear()
            ack_buffer = []

        # (2) one arrival per tick via a round-robin source
        if routed < m:
            msg = stream[routed]
            src = routed % s
            if use_cg:
                vw, w = grouping.route(src, msg.key)
                aux = vw
            else:
                w, aux = partitioner.route(msg.key, msg.id)
            wr = workers[w]
            wr.queue.append((tick, src, msg.key))
            wr.window_arrivals += 1
            wr.sample_arrivals += 1
            wr.total_arrivals += 1
            wr.keys.add(msg.key)
            queued += 1
            routed += 1
            if routing_log is not None:
                routing_log.append(RouteRecord(msg.id, msg.key, w, aux, tick))
            # (5) capacity-schedule events keyed on the routed-message count
            while event_idx < len(events) and routed >= events[event_idx][0]:
                profile = config.schedule.profile_for_event(event_idx)
                for wr2 in workers:
                    wr2.service_rate = profile.capacities[wr2.worker] / config.rho
                event_idx += 1

        # (3) fluid service
        for wr in workers:
            completed = service_step(wr, tick)
            if completed:
                pcounts = partials[wr.worker].counts
                for arrival, src, key in completed:
                    lat = tick - arrival
                    interval_latencies.append(lat)
                    all_latencies.append(lat)
                    pcounts[key] = pcounts.get(key, 0) + 1
                    ack_buffer.append((src, wr.worker))
                k = len(completed)
                served += k
                queued -= k
                served_in_interval += k  # no credit accrues on an empty queue

        # (4) monitoring at time-slot boundaries, while arrivals continue
        if use_cg and routed < m and tick > 0 and tick % t0 == 0:
            canon_queues = grouping.canonical.queues
            for wr in workers:
                u = utilization(wr, t0, config.utilization_mode)
                cls = classify_worker(u, 1.0, config.delegation)
                classifications.append(
                    ClassificationSample(
                        tick,
                        wr.worker,
                        cls,
                        grouping.virtual_workers_of(wr.worker),
                        profile.capacities[wr.worker],
                    )
                )
                # Re-queue a persistently busy/idle worker that was paired out.
                wants = None
                if cls == WorkerClass.BUSY and wr.worker not in canon_queues.busy:
                    wants = SignalKind.DECREASE_WORKLOAD
                elif cls == WorkerClass.IDLE and wr.worker not in canon_queues.idle:
                    wants = SignalKind.INCREASE_WORKLOAD
                if wants is not None:
                    sig = Signal(wr.worker, wants, tick)
                    signals.append(sig)
                    env = grouping.emit(sig)
                    for src in range(s):
                        pending[wr.worker][src].append(env)
                wr.window_arrivals = 0

        tick += 1
        if tick - last_sample_tick == sample_interval:
            record_sample(tick)
            last_sample_tick = tick

    if tick > last_sample_tick:
        record_sample(tick)

    if use_cg:
        # Model a final broadcast so every view converges at shutdown.
        for w in range(n):
            for src in range(s):
                box = pending[w][src]
                if box:
                    grouping.sources[src].deliver(box)
                    box.clear()

    all_latencies.sort()
    return SimResult(
        series=series,
        routed=routed,
        served=served,
        worker_arrivals=[wr.total_arrivals for wr in workers],
        worker_memory=[len(wr.keys) for wr in workers],
        final_profile=profile,
        latency_p50=float(percentile(all_latencies, 0.50)),
        latency_p99=float(percentile(all_latencies, 0.99)),
        latency_max=float(all_latencies[-1]) if all_latencies else 0.0,
        aggregated_totals=aggregate(partials),
        migrations=list(grouping.migration_log) if grouping else [],
        classifications=classifications,
        signals=signals,
        routing_log=routing_log,
        grouping=grouping,
    )
