"""Counters, bucketing, summaries, and the report file formats."""

from __future__ import annotations

import json

import pytest

from ulasim.metrics import (
    TIMESERIES_COLUMNS,
    MetricsLog,
    check_conservation,
    emit,
    summarize,
)
from ulasim.runner import run_scenario
from ulasim.scenario import validate_scenario

from ulasim.defense import DROP_REASON_NAMES as REASONS
from ulasim.traffic import PACKET_CLASS_NAMES as CLASSES


def log_of(horizon=60):
    return MetricsLog(horizon, CLASSES, REASONS)


# ---- bucketing ----


def test_cell_covers_half_open_seconds():
    log = log_of()
    assert log.cell(0) == 0  # t=0 lands in row 1
    assert log.cell(1) == 0
    assert log.cell(1_000_000) == 0  # row 1 covers (0, 1]
    assert log.cell(1_000_001) == 1
    assert log.cell(59_999_999) == 59
    assert log.cell(10**9) == 59  # post-horizon outcomes clamp to the last row


def test_infection_at_12_3_seconds_counts_from_row_13():
    log = log_of()
    log.record_infection(12_300_000)
    csv = _rows(log)
    infected_col = TIMESERIES_COLUMNS.index("infected")
    by_second = {int(r[0]): int(r[infected_col]) for r in csv}
    assert by_second[12] == 0
    assert all(by_second[s] == 1 for s in range(13, 61))


def _rows(log):
    from ulasim.metrics import _render_timeseries_csv

    lines = _render_timeseries_csv(log).strip().split("\n")
    assert lines[0] == ",".join(TIMESERIES_COLUMNS)
    return [line.split(",") for line in lines[1:]]


# ---- conservation ----


def test_conservation_identity_holds_and_raises():
    log = log_of()
    log.record_generated(0, "legit_request", 10)
    log.record_delivered(500, "legit_request", 6)
    log.record_gw_drop(600, "legit_request", "AclDeny", 3)
    log.record_never_routed("legit_request", 1)
    check_conservation(log)
    log.record_generated(700, "attack_volumetric", 5)
    with pytest.raises(AssertionError) as err:
        check_conservation(log)
    assert "attack_volumetric" in str(err.value)
    log.record_victim_drop("attack_volumetric", "link", 5)
    check_conservation(log)


# ---- summary ratios ----


def test_summary_zero_denominator_defaults():
    summary = summarize(log_of())
    assert summary.victim_availability == 1.0  # no legit offered: service intact
    assert summary.legit_drop_rate == 0.0
    assert summary.attack_delivery_rate == 0.0


def test_summary_ratios_round_to_six_decimals():
    log = log_of()
    log.record_generated(0, "legit_request", 3)
    log.record_victim_served(100, "legit_request", 1)
    summary = summarize(log)
    assert summary.victim_availability == 0.333333
    assert 0.0 <= summary.victim_availability <= 1.0


def test_summary_attack_delivery_rate():
    log = log_of()
    log.record_generated(0, "attack_volumetric", 200)
    log.record_victim_delivered("attack_volumetric", 50)
    assert summarize(log).attack_delivery_rate == 0.25


# ---- isolation bookkeeping ----


def test_isolation_intervals_merge_only_when_touching():
    log = log_of()
    log.record_isolation(0, 5_000_000, 10_000_000)
    log.record_isolation(0, 8_000_000, 15_000_000)  # overlaps: extends
    log.record_isolation(0, 20_000_000, 25_000_000)  # separate span
    log.record_isolation(1, 6_000_000, 9_000_000)
    assert log.isolation_events == 4
    assert log.isolation_intervals[0] == [[5_000_000, 15_000_000], [20_000_000, 25_000_000]]
    assert log.isolation_intervals[1] == [[6_000_000, 9_000_000]]
    # summed in-run isolated time: 10 + 5 + 3 seconds
    assert log.isolated_time_us() == 18_000_000


def test_isolated_time_clips_at_horizon():
    log = log_of(horizon=10)
    log.record_isolation(0, 8_000_000, 70_000_000)
    assert log.isolated_time_us() == 2_000_000
    assert summarize(log).total_isolated_time_s == 2.0


# ---- shaping delay ----


def test_shape_delay_stats():
    log = log_of()
    log.record_shape_delay(0, 2)
    log.record_shape_delay(6_000, 1)
    log.record_shape_delay(2_000_000, 1)
    assert log.shape_count == 4
    assert log.shape_max_us == 2_000_000
    assert log.shape_hist[0] == 2
    assert log.shape_hist[5_000] == 1
    assert log.shape_hist[1_000_000] == 1
    summary = summarize(log)
    assert summary.mean_shaping_delay_us == float(f"{2_006_000 / 4:.3f}")
    assert summary.max_shaping_delay_us == 2_000_000


# ---- report files ----


def test_emit_writes_three_files_with_stable_bytes(tmp_path):
    log = log_of(horizon=2)
    log.record_generated(0, "legit_request", 4)
    log.record_delivered(100, "legit_request", 4)
    log.record_isolation(0, 500_000, 1_500_000)
    summary = summarize(log)
    first = emit(summary, log, tmp_path / "a")
    second = emit(summary, log, tmp_path / "b")
    for key in ("summary", "timeseries", "isolation"):
        assert first[key].read_bytes() == second[key].read_bytes()
    parsed = json.loads(first["summary"].read_text())
    assert parsed["victim_availability"] == summary.victim_availability
    assert list(parsed) == [
        "victim_availability",
        "legit_drop_rate",
        "attack_delivery_rate",
        "peak_infected",
        "isolation_events",
        "total_isolated_time_s",
        "mean_shaping_delay_us",
        "max_shaping_delay_us",
    ]
    iso = first["isolation"].read_text().strip().split("\n")
    assert iso[0] == "segment_id,start_s,end_s"
    assert iso[1] == "0,0.500000,1.500000"


def test_empty_run_renders_header_only_csvs(tmp_path):
    log = MetricsLog(0, CLASSES, REASONS)
    paths = emit(summarize(log), log, tmp_path)
    assert paths["timeseries"].read_text() == ",".join(TIMESERIES_COLUMNS) + "\n"
    assert paths["isolation"].read_text() == "segment_id,start_s,end_s\n"


def test_sixty_second_run_renders_sixty_rows(tmp_path):
    doc = validate_scenario(
        {
            "seed": 9,
            "horizon_s": 60,
            "segments": [
                {"name": "cams", "device_type": "camera", "subnet_id": 1, "device_count": 2}
            ],
            "external": {"legit_clients": 1},
            "legit": {"rate_rps": 5},
            "botnet": {"fan_out": 0},
        }
    )
    result = run_scenario(doc, out_dir=tmp_path)
    lines = (tmp_path / "timeseries.csv").read_text().strip().split("\n")
    assert len(lines) == 61  # header + one row per second
    assert [line.split(",")[0] for line in lines[1:]] == [str(s) for s in range(1, 61)]
    # the emitted summary matches the returned one byte-for-byte on reload
    parsed = json.loads((tmp_path / "summary.json").read_text())
    assert parsed["victim_availability"] == result.summary.victim_availability
