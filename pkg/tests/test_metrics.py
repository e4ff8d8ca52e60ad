import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from streambal.core import ValidationError
from streambal.metrics import (
    COLUMNS,
    MetricsSeries,
    export,
    imbalance,
    normalized_imbalance,
    percentile,
    porc_memory_lower_bound,
    sg_memory_upper_bound,
)


def test_imbalance_uniform_capacities():
    assert imbalance([6, 4], [0.5, 0.5]) == pytest.approx(2.0)
    assert imbalance([5, 5], [0.5, 0.5]) == 0.0


def test_imbalance_respects_capacity():
    # Loads proportional to capacities are perfectly balanced.
    assert imbalance([8, 2], [0.8, 0.2]) == pytest.approx(0.0)
    assert imbalance([2, 8], [0.8, 0.2]) > 0


def test_imbalance_validation():
    with pytest.raises(ValidationError):
        imbalance([1, 2], [0.5])
    with pytest.raises(ValidationError):
        imbalance([1, 2], [1.0, 0.0])


def test_normalized_imbalance():
    # utils (12, 8): max 12, avg 10 -> 2/10
    assert normalized_imbalance([6, 4], [0.5, 0.5], 10) == pytest.approx(0.2)
    assert normalized_imbalance([0, 0], [0.5, 0.5], 10) == 0.0


@given(
    st.lists(st.integers(min_value=0, max_value=1000), min_size=1, max_size=20),
)
def test_imbalance_nonnegative(loads):
    n = len(loads)
    caps = [1 / n] * n
    assert imbalance(loads, caps) >= -1e-12
    if sum(loads) > 0:
        assert normalized_imbalance(loads, caps, sum(loads)) >= -1e-12


def test_sg_memory_upper_bound():
    # Keys seen 1, 3, and 200 times over 100 bins.
    assert sg_memory_upper_bound([1, 3, 200], 100) == 1 + 3 + 100
    assert sg_memory_upper_bound([], 10) == 0


def test_porc_memory_lower_bound():
    # Single key, p=1, n=50, eps=0.01: ceil(50/1.01) = ceil(49.50...) = 50.
    assert porc_memory_lower_bound([1.0], 50, 0.01) == 50
    # Uniform 4 keys over 2 bins: ceil(0.5 * 2 / 1.0) = 1 each.
    assert porc_memory_lower_bound([0.25] * 4, 2, 0.0) == 4


def test_percentile_nearest_rank():
    vals = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
    assert percentile(vals, 0.50) == 5
    assert percentile(vals, 0.99) == 10
    assert percentile(vals, 0.0) == 1
    assert percentile(vals, 1.0) == 10
    assert percentile([], 0.5) == 0.0
    assert percentile([42], 0.99) == 42


def _row(tick, fill=0.0):
    return (tick,) + (fill,) * (len(COLUMNS) - 1)


def test_series_validation():
    series = MetricsSeries()
    series.append(_row(10))
    with pytest.raises(ValidationError):
        series.append(_row(10))
    with pytest.raises(ValidationError):
        series.append(_row(5))
    with pytest.raises(ValidationError):
        series.append((20, 0.0))
    series.append(_row(20, 1.5))
    assert series.column("tick") == [10, 20]
    assert series.last("imbalance") == 1.5


def test_export_csv_golden(tmp_path):
    series = MetricsSeries()
    series.append((100, 1.5, 0.25, 0.9, 0.8, 12, 3.5, 1.0, 4.0, 7.0, 0.95, 42))
    path = tmp_path / "out.csv"
    export(series, str(path), "csv")
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert lines[1] == "100,1.5,0.25,0.9,0.8,12,3.5,1,4,7,0.95,42"
    assert text.endswith("\n")


def test_export_empty(tmp_path):
    path = tmp_path / "empty.csv"
    export(MetricsSeries(), str(path), "csv")
    assert path.read_text() == ",".join(COLUMNS) + "\n"


def test_export_json_round_trip(tmp_path):
    series = MetricsSeries()
    series.append((1, 0.5, 0.1, 0.0, 0.0, 2, 1.0, 0.0, 0.0, 0.0, 1.0, 3))
    path = tmp_path / "out.json"
    export(series, str(path), "json")
    records = json.loads(path.read_text())
    assert records == [
        {
            "tick": 1,
            "imbalance": 0.5,
            "norm_imbalance": 0.1,
            "max_util": 0.0,
            "avg_util": 0.0,
            "max_queue": 2,
            "avg_queue": 1.0,
            "p50_lat": 0.0,
            "p99_lat": 0.0,
            "max_lat": 0.0,
            "throughput": 1.0,
            "total_memory": 3,
        }
    ]


def test_export_deterministic(tmp_path):
    series = MetricsSeries()
    series.append((1, 1 / 3, 0.1, 0.0, 0.0, 2, 1.0, 0.0, 0.0, 0.0, 1.0, 3))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    export(series, str(a), "csv")
    export(series, str(b), "csv")
    assert a.read_bytes() == b.read_bytes()


def test_export_bad_format(tmp_path):
    with pytest.raises(ValidationError):
        export(MetricsSeries(), str(tmp_path / "x"), "xml")


def test_export_unwritable_path_names_target():
    with pytest.raises(OSError, match="/nonexistent-dir/out.csv"):
        export(MetricsSeries(), "/nonexistent-dir/out.csv", "csv")
