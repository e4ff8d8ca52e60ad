"""Shared domain types: messages, capacity profiles, delegation signals."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

# Fixed tolerances; deliberately not configurable.
NORMALIZATION_TOL = 1e-9
IDEMPOTENCE_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when a constructor or operation argument violates its contract."""


@dataclass(frozen=True, slots=True)
class Message:
    """One stream event. `key` is an opaque byte string; values are not modeled."""

    id: int
    key: bytes
    timestamp: int


@dataclass(frozen=True)
class CapacityProfile:
    """Per-worker capacities normalized to sum to 1. Order is preserved as given."""

    capacities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.capacities) < 1:
            raise ValidationError("capacity profile needs at least one worker")
        for i, c in enumerate(self.capacities):
            if c <= 0:
                raise ValidationError(f"capacity at index {i} must be positive, got {c}")
        total = sum(self.capacities)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"capacities must sum to 1 (got {total})")

    @property
    def n(self) -> int:
        return len(self.capacities)


def normalize_capacities(raw: Sequence[float]) -> CapacityProfile:
    """Divide each entry by the total so the capacities sum to 1.

    Order is preserved; no sorting happens here.
    """
    if len(raw) == 0:
        raise ValidationError("capacity list is empty")
    for i, c in enumerate(raw):
        if c <= 0:
            raise ValidationError(f"capacity at index {i} must be positive, got {c}")
    total = float(sum(raw))
    return CapacityProfile(tuple(c / total for c in raw))


class SignalKind(enum.Enum):
    INCREASE_WORKLOAD = "increase"
    DECREASE_WORKLOAD = "decrease"


@dataclass(frozen=True, slots=True)
class Signal:
    """Binary delegation signal a worker sends to the sources."""

    worker: int
    kind: SignalKind
    issued_at: int


@dataclass(frozen=True)
class WorkloadSpec:
    """Either a synthetic Zipf workload or a trace file, never both."""

    distinct_keys: Optional[int] = None
    zipf_exponent: Optional[float] = None
    message_count: Optional[int] = None
    seed: int = 0
    trace_path: Optional[str] = None

    def __post_init__(self) -> None:
        synthetic = self.message_count is not None
        if synthetic == (self.trace_path is not None):
            raise ValidationError("exactly one of synthetic parameters or trace_path must be set")
        if synthetic:
            if self.distinct_keys is None or self.zipf_exponent is None:
                raise ValidationError("synthetic workload needs distinct_keys and zipf_exponent")
            if self.message_count < 1:
                raise ValidationError("message_count must be >= 1")
            if self.distinct_keys < 1:
                raise ValidationError("distinct_keys must be >= 1")
            if self.zipf_exponent < 0:
                raise ValidationError("zipf_exponent must be >= 0")

    @property
    def is_synthetic(self) -> bool:
        return self.trace_path is None
