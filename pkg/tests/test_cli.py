import csv
import json

import pytest

from streambal.cli import main

SMALL_CONFIG = {
    "workload": {"distinct_keys": 50, "zipf_exponent": 1.0, "message_count": 2000},
    "capacities": {"n": 4},
    "strategy": {"name": "sg"},
}


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def test_simulate_smoke(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL_CONFIG)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    captured = capsys.readouterr()
    assert "routed=2000 served=2000" in captured.out
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert metrics[0].startswith("tick,imbalance,")
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["strategy"] == "sg"
    assert str(out / "metrics.csv") in manifest["outputs"]


def test_simulate_validation_error_names_field(tmp_path, capsys):
    config = dict(SMALL_CONFIG)
    config["strategy"] = {"name": "porc", "epsilon": -0.5}
    cfg = write_config(tmp_path, config)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "epsilon" in capsys.readouterr().err


def test_simulate_bad_config_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", "--config", str(bad)]) == 1


def test_simulate_missing_config_is_io_error(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "absent.json")]) == 3


def test_seed_precedence(tmp_path, monkeypatch):
    config = dict(SMALL_CONFIG)
    config["workload"] = dict(config["workload"], seed=5)
    cfg = write_config(tmp_path, config)
    monkeypatch.setenv("STREAMBAL_SEED", "9")

    out1 = tmp_path / "o1"
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(out1)]) == 0
    assert json.loads((out1 / "run_manifest.json").read_text())["seed"] == 7

    out2 = tmp_path / "o2"
    assert main(["simulate", "--config", cfg, "--out", str(out2)]) == 0
    assert json.loads((out2 / "run_manifest.json").read_text())["seed"] == 5

    config["workload"].pop("seed")
    cfg3 = write_config(tmp_path, config, "c3.json")
    out3 = tmp_path / "o3"
    assert main(["simulate", "--config", cfg3, "--out", str(out3)]) == 0
    assert json.loads((out3 / "run_manifest.json").read_text())["seed"] == 9


def test_simulate_strategy_override_and_logs(tmp_path):
    cfg = write_config(tmp_path, SMALL_CONFIG)
    out = tmp_path / "out"
    assert main([
        "simulate", "--config", cfg, "--strategy", "porc",
        "--out", str(out), "--log-routing", "--log-migrations",
    ]) == 0
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["strategy"] == "porc"
    routing = (out / "routing_log.csv").read_text().splitlines()
    assert len(routing) == 1 + SMALL_CONFIG["workload"]["message_count"]
    assert (out / "migration_log.csv").read_text().splitlines()[0].startswith("tick,vw")


def test_simulate_json_format(tmp_path):
    cfg = write_config(tmp_path, SMALL_CONFIG)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out), "--format", "json"]) == 0
    records = json.loads((out / "metrics.json").read_text())
    assert records and "norm_imbalance" in records[0]


def test_simulate_outputs_byte_identical(tmp_path):
    cfg = write_config(tmp_path, SMALL_CONFIG)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--seed", "3", "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--seed", "3", "--out", str(b)]) == 0
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()


def test_sweep_grid(tmp_path, capsys):
    config = dict(SMALL_CONFIG)
    config["grid"] = {"strategy": ["sg", "porc"], "epsilon": [0.01, 0.1]}
    cfg = write_config(tmp_path, config)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert {row["strategy"] for row in rows} == {"sg", "porc"}
    assert all(row["error"] == "" for row in rows)
    assert all(float(row["final_imbalance"]) >= 0 for row in rows)


def test_sweep_records_failures_and_continues(tmp_path, capsys):
    config = dict(SMALL_CONFIG)
    config["grid"] = {"strategy": ["sg", "pkg"], "n": [1, 4]}
    cfg = write_config(tmp_path, config)
    out = tmp_path / "sweep"
    # pkg with a single bin is invalid: that point fails, the others complete.
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 2
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    failed = [row for row in rows if row["error"]]
    assert len(failed) == 1
    assert failed[0]["strategy"] == "pkg" and failed[0]["n"] == "1"


def test_sweep_requires_grid(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL_CONFIG)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")]) == 1
    assert "grid" in capsys.readouterr().err


def test_gen_trace_round_trip(tmp_path, capsys):
    out = str(tmp_path / "trace.csv")
    assert main(["gen-trace", "--keys", "20", "--zipf", "1.0",
                 "--messages", "500", "--seed", "2", "--out", out]) == 0
    from streambal.workload import read_trace

    msgs = read_trace(out)
    assert len(msgs) == 500
    assert all(0 <= int(m.key) < 20 for m in msgs)


def test_gen_trace_empty(tmp_path):
    out = str(tmp_path / "empty.csv")
    assert main(["gen-trace", "--messages", "0", "--out", out]) == 0
    from streambal.workload import read_trace

    assert read_trace(out) == []


def test_gen_trace_byte_identical(tmp_path):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    for path in (a, b):
        assert main(["gen-trace", "--keys", "10", "--messages", "200",
                     "--seed", "4", "--out", path]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_unknown_strategy_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit):
        main(["simulate", "--strategy", "bogus"])
