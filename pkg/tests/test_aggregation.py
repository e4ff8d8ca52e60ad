from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streambal.aggregation import (
    PartialCounts,
    SpaceSavingSummary,
    aggregate,
    export_heavy_hitters,
    heavy_hitters,
    ss_insert,
    ss_merge,
)
from streambal.core import ValidationError
from streambal.partitioners import KeyGrouping
from streambal.workload import ZipfSampler


def zipf_keys(m, c, z, seed=0):
    ranks = ZipfSampler(c, z, seed).sample_ranks(m)
    return [str(r).encode() for r in ranks]


# --- partial counts ---


def test_aggregate_is_pointwise_sum():
    a = PartialCounts(0)
    b = PartialCounts(1)
    for key in (b"x", b"x", b"y"):
        a.add(key)
    b.add(b"y", 3)
    b.add(b"z")
    assert aggregate([a, b]) == {b"x": 2, b"y": 4, b"z": 1}
    assert aggregate([]) == {}


@given(st.lists(st.lists(st.binary(min_size=1, max_size=4), max_size=50), max_size=5))
@settings(max_examples=40)
def test_aggregate_conserves_counts(streams):
    partials = []
    everything = Counter()
    for w, keys in enumerate(streams):
        partial = PartialCounts(w)
        for key in keys:
            partial.add(key)
        everything.update(keys)
        partials.append(partial)
    assert aggregate(partials) == dict(everything)


# --- space saving ---


def test_ss_hand_trace():
    s = SpaceSavingSummary(2)
    for key in (b"A", b"A", b"B", b"C"):
        ss_insert(s, key)
    # C evicted B (the min-count entry) and inherited its count as error.
    assert s.entries == {b"A": [2, 0], b"C": [2, 1]}
    assert s.estimate(b"A") == 2
    assert s.error_bound(b"A") == 0
    assert s.estimate(b"C") == 2
    assert s.error_bound(b"C") == 1
    assert s.estimate(b"B") is None
    assert s.delta == 2


def test_ss_eviction_tie_breaks_lexicographically():
    s = SpaceSavingSummary(2)
    ss_insert(s, b"b")
    ss_insert(s, b"a")
    ss_insert(s, b"c")  # both at count 1: evict b"a"
    assert set(s.entries) == {b"b", b"c"}


def test_ss_delta_zero_until_full():
    s = SpaceSavingSummary(3)
    ss_insert(s, b"x")
    assert s.delta == 0


def test_ss_capacity_validation():
    with pytest.raises(ValidationError):
        SpaceSavingSummary(0)


@given(st.lists(st.binary(min_size=1, max_size=3), min_size=1, max_size=300),
       st.integers(min_value=1, max_value=10))
@settings(max_examples=50)
def test_ss_error_bounds_hold(keys, k):
    s = SpaceSavingSummary(k)
    true = Counter()
    for key in keys:
        ss_insert(s, key)
        true[key] += 1
    assert len(s.entries) <= k
    for key, (count, error) in s.entries.items():
        # Counts overestimate by at most the recorded error.
        assert count - error <= true[key] <= count
        assert error <= s.delta
    # Any untracked key appeared at most delta times.
    for key, freq in true.items():
        if key not in s.entries:
            assert freq <= s.delta


def test_merge_hand_trace():
    a = SpaceSavingSummary(2)
    for key in (b"A", b"A", b"B"):
        ss_insert(a, key)
    b = SpaceSavingSummary(2)
    for key in (b"A", b"C", b"C"):
        ss_insert(b, key)
    merged = ss_merge([a, b], 2)
    # Sums: A=3, B=1, C=2; keep A and C, drop B, so merge_error = 1.
    assert merged.entries == {b"A": [3, 0], b"C": [2, 0]}
    assert merged.merge_error == 1
    assert merged.error_bound(b"A") == 1


def test_merged_bound_on_skewed_stream():
    # Four workers each summarize their share; the merged estimate error is
    # bounded by the summed per-summary deltas plus the merge truncation.
    keys = zipf_keys(100_000, 5000, 1.2)
    kg = KeyGrouping(4, seed=0)
    summaries = [SpaceSavingSummary(50) for _ in range(4)]
    true = Counter()
    for i, key in enumerate(keys):
        w, _ = kg.route(key, i)
        ss_insert(summaries[w], key)
        true[key] += 1
    bound = sum(s.delta for s in summaries)
    merged = ss_merge(summaries, 50)
    for key, (count, error) in merged.entries.items():
        assert count - true[key] <= bound
        assert count >= true[key]
        assert error + merged.merge_error <= bound
    # Under key grouping every key lives in exactly one summary, so each
    # estimate inherits a single summary's error, not the sum.
    per_key_bound = max(s.delta for s in summaries)
    for key, (count, error) in merged.entries.items():
        assert count - true[key] <= per_key_bound


def test_heavy_hitters_ordering():
    s = SpaceSavingSummary(4)
    for key, times in ((b"a", 5), (b"b", 3), (b"c", 3), (b"d", 1)):
        for _ in range(times):
            ss_insert(s, key)
    top = heavy_hitters(s, 3)
    assert [k for k, _, _ in top] == [b"a", b"b", b"c"]
    with pytest.raises(ValidationError):
        heavy_hitters(s, 0)


def test_export_heavy_hitters(tmp_path):
    s = SpaceSavingSummary(2)
    for key in (b"x", b"x", b"y"):
        ss_insert(s, key)
    path = tmp_path / "hh.csv"
    export_heavy_hitters(str(path), s, 2, true_counts={b"x": 2, b"y": 1})
    lines = path.read_text().splitlines()
    assert lines[0] == "rank,key,estimate,error_bound,true_count"
    assert lines[1] == "1,x,2,0,2"
    assert lines[2] == "2,y,1,0,1"
