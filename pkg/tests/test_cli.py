"""Command line behavior: exit codes, output files, seed override."""

from __future__ import annotations

import json

import pytest

from ulasim.cli import main

SCENARIO = {
    "seed": 99,
    "horizon_s": 8,
    "segments": [
        {
            "name": "cams",
            "device_type": "camera",
            "subnet_id": 1,
            "device_count": 3,
            "pre_registered_bots": 1,
        }
    ],
    "external": {"seed_bots": 1, "legit_clients": 2},
    "legit": {"rate_rps": 20},
    "botnet": {
        "fan_out": 3,
        "miss_ratio": 0.5,
        "attacks": [{"attack_class": "volumetric", "rate_pps": 20, "start_s": 2, "duration_s": 3}],
    },
    "defense": {"ingress_on": True, "egress_on": True},
}


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(SCENARIO), encoding="utf-8")
    return path


def test_run_exits_zero_and_writes_reports(scenario_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--scenario", str(scenario_file), "--out", str(out)]) == 0
    for name in ("summary.json", "timeseries.csv", "isolation.csv"):
        assert (out / name).is_file()
    stdout = capsys.readouterr().out
    assert "victim_availability" in stdout
    assert "seed 99" in stdout


def test_run_defense_off_arm(tmp_path):
    # no internal foothold: the only infection path is the seed bot's
    # inbound scanning, which ingress filtering blocks entirely
    raw = json.loads(json.dumps(SCENARIO))
    raw["segments"][0]["pre_registered_bots"] = 0
    path = tmp_path / "s.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    out_on = tmp_path / "on"
    out_off = tmp_path / "off"
    main(["run", "--scenario", str(path), "--out", str(out_on)])
    main(["run", "--scenario", str(path), "--out", str(out_off), "--defense", "off"])
    on = json.loads((out_on / "summary.json").read_text())
    off = json.loads((out_off / "summary.json").read_text())
    assert on["peak_infected"] == 0
    assert off["peak_infected"] == 3


def test_seed_override_changes_outputs(scenario_file, tmp_path, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    main(["run", "--scenario", str(scenario_file), "--out", str(out_a), "--seed", "7"])
    assert "seed 7" in capsys.readouterr().out
    main(["run", "--scenario", str(scenario_file), "--out", str(out_b)])
    a = (out_a / "timeseries.csv").read_bytes()
    b = (out_b / "timeseries.csv").read_bytes()
    assert a != b


def test_missing_scenario_exits_one_and_names_path(tmp_path, capsys):
    missing = tmp_path / "absent.json"
    code = main(["run", "--scenario", str(missing), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "absent.json" in capsys.readouterr().err


def test_invalid_document_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 1, "horizon_s": 0, "segments": []}), encoding="utf-8")
    code = main(["run", "--scenario", str(bad), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--no-such-flag"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_compare_writes_compare_json(scenario_file, tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", "--scenario", str(scenario_file), "--out", str(out)]) == 0
    doc = json.loads((out / "compare.json").read_text())
    assert set(doc) == {"off", "on", "deltas"}
    assert (out / "on" / "summary.json").is_file()
    assert (out / "off" / "summary.json").is_file()
    stdout = capsys.readouterr().out
    assert "defense_off" in stdout and "defense_on" in stdout
