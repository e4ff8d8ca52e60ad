"""Stream partitioning strategies and a deterministic queueing simulator."""

__version__ = "0.1.0"

from .core import (
    CapacityProfile,
    Message,
    Signal,
    SignalKind,
    ValidationError,
    WorkloadSpec,
    normalize_capacities,
)

__all__ = [
    "CapacityProfile",
    "Message",
    "Signal",
    "SignalKind",
    "ValidationError",
    "WorkloadSpec",
    "normalize_capacities",
    "__version__",
]
