"""Periodic aggregation of per-worker partial counts and SpaceSaving summaries.

The merged-summary error bound is realized as (max dropped count during the
merge) + (sum of the per-summary errors); the merge-truncation term is one
valid instantiation of the merging error, chosen because it is directly
measurable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .core import ValidationError


@dataclass
class PartialCounts:
    """Per-worker key counts accumulated since the last aggregation."""

    worker: int
    counts: dict[bytes, int] = field(default_factory=dict)

    def add(self, key: bytes, amount: int = 1) -> None:
        self.counts[key] = self.counts.get(key, 0) + amount


def aggregate(partials: Iterable[PartialCounts]) -> dict[bytes, int]:
    """Pointwise sum of per-worker counts. The caller clears the partials."""
    totals: dict[bytes, int] = {}
    for partial in partials:
        for key, count in partial.counts.items():
            totals[key] = totals.get(key, 0) + count
    return totals


class SpaceSavingSummary:
    """Bounded-size frequency summary: counts overestimate, errors bound the excess.

    entries maps key -> [count, error]. When full, an insert of a new key
    evicts a minimum-count entry (ties to the lexicographically smallest key)
    and inherits its count as the error.
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValidationError("summary capacity must be >= 1")
        self.k = k
        self.entries: dict[bytes, list[int]] = {}
        self.merge_error = 0  # nonzero only on summaries produced by ss_merge

    @property
    def delta(self) -> int:
        """Min tracked count when full, else 0; bounds any untracked frequency."""
        if len(self.entries) < self.k:
            return 0
        return min(count for count, _ in self.entries.values())

    def insert(self, key: bytes) -> None:
        entry = self.entries.get(key)
        if entry is not None:
            entry[0] += 1
            return
        if len(self.entries) < self.k:
            self.entries[key] = [1, 0]
            return
        evict_key = min(self.entries, key=lambda kk: (self.entries[kk][0], kk))
        min_count = self.entries[evict_key][0]
        del self.entries[evict_key]
        self.entries[key] = [min_count + 1, min_count]

    def estimate(self, key: bytes) -> Optional[int]:
        entry = self.entries.get(key)
        return None if entry is None else entry[0]

    def error_bound(self, key: bytes) -> Optional[int]:
        entry = self.entries.get(key)
        return None if entry is None else entry[1] + self.merge_error


def ss_insert(summary: SpaceSavingSummary, key: bytes) -> SpaceSavingSummary:
    summary.insert(key)
    return summary


def ss_merge(summaries: Sequence[SpaceSavingSummary], k: int) -> SpaceSavingSummary:
    """Pointwise-sum counts and errors, keep the top-k by count, and record the
    largest dropped count as the merging error."""
    merged_counts: dict[bytes, int] = {}
    merged_errors: dict[bytes, int] = {}
    for summary in summaries:
        for key, (count, error) in summary.entries.items():
            merged_counts[key] = merged_counts.get(key, 0) + count
            merged_errors[key] = merged_errors.get(key, 0) + error + summary.merge_error
    result = SpaceSavingSummary(k)
    ordered = sorted(merged_counts, key=lambda kk: (-merged_counts[kk], kk))
    kept, dropped = ordered[:k], ordered[k:]
    result.merge_error = max((merged_counts[kk] for kk in dropped), default=0)
    for key in kept:
        result.entries[key] = [merged_counts[key], merged_errors[key]]
    return result


def heavy_hitters(summary: SpaceSavingSummary, j: int) -> list[tuple[bytes, int, int]]:
    """Top-j (key, estimate, error_bound) by estimated count, ties lexicographic."""
    if j < 1:
        raise ValidationError("j must be >= 1")
    ordered = sorted(summary.entries.items(), key=lambda item: (-item[1][0], item[0]))
    return [(key, count, error + summary.merge_error) for key, (count, error) in ordered[:j]]


def export_heavy_hitters(
    path: str,
    summary: SpaceSavingSummary,
    j: int,
    true_counts: Optional[Mapping[bytes, int]] = None,
) -> None:
    """CSV export: rank,key,estimate,error_bound,true_count."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "key", "estimate", "error_bound", "true_count"])
        for rank, (key, estimate, bound) in enumerate(heavy_hitters(summary, j), start=1):
            true = "" if true_counts is None else true_counts.get(key, 0)
            writer.writerow([rank, key.decode("utf-8", "replace"), estimate, bound, true])
