"""Scenario schema: defaults, validation, field-path errors."""

from __future__ import annotations

import json

import pytest

from ulasim.scenario import (
    DEFAULT_BURST_INTERVAL_US,
    DEFAULT_C2_PORT,
    DEFAULT_FAN_OUT,
    DEFAULT_LINK_LATENCY_US,
    DEFAULT_MISS_RATIO,
    InvalidScenario,
    IoFailure,
    parse_scenario,
    validate_scenario,
)

MINIMAL = {
    "seed": 1,
    "horizon_s": 10,
    "segments": [{"name": "cams", "device_type": "camera", "subnet_id": 1, "device_count": 3}],
}


def test_minimal_doc_fills_defaults():
    doc = validate_scenario(MINIMAL)
    assert doc.seed == 1
    assert doc.horizon_s == 10
    assert doc.link_latency_us == DEFAULT_LINK_LATENCY_US
    seg = doc.segments[0]
    assert seg.pct_default_creds == 1.0
    assert seg.pct_unpatched == 0.0
    assert seg.pre_registered_bots == 0
    assert seg.bucket is None and seg.shaper is None
    assert seg.thresholds.max_connections == 0
    assert doc.external.seed_bots == 0
    assert doc.external.victim.placement == "external"
    assert doc.legit.rate_rps == 0.0
    assert doc.botnet.fan_out == DEFAULT_FAN_OUT
    assert doc.botnet.miss_ratio == DEFAULT_MISS_RATIO
    assert doc.botnet.c2_port == DEFAULT_C2_PORT
    assert doc.botnet.attacks == ()
    assert doc.defense.ingress_on is False
    assert doc.defense.detector is None


def test_duplicate_subnet_id_names_field_path():
    raw = dict(MINIMAL)
    raw["segments"] = [
        {"name": "a", "device_type": "camera", "subnet_id": 7, "device_count": 1},
        {"name": "b", "device_type": "router", "subnet_id": 7, "device_count": 1},
    ]
    with pytest.raises(InvalidScenario) as err:
        validate_scenario(raw)
    assert err.value.path == "segments[1].subnet_id"


def test_negative_rate_rejected():
    raw = dict(MINIMAL)
    raw["botnet"] = {
        "attacks": [{"attack_class": "volumetric", "rate_pps": -5, "start_s": 1, "duration_s": 1}]
    }
    with pytest.raises(InvalidScenario) as err:
        validate_scenario(raw)
    assert "rate_pps" in err.value.path


def test_unknown_keys_rejected_root_and_nested():
    raw = dict(MINIMAL)
    raw["extra"] = 1
    with pytest.raises(InvalidScenario):
        validate_scenario(raw)
    raw = dict(MINIMAL)
    raw["segments"] = [dict(MINIMAL["segments"][0], typo_key=1)]
    with pytest.raises(InvalidScenario) as err:
        validate_scenario(raw)
    assert "typo_key" in str(err.value)


def test_missing_required_fields():
    with pytest.raises(InvalidScenario) as err:
        validate_scenario({"seed": 1, "horizon_s": 5})
    assert err.value.path == "segments"
    with pytest.raises(InvalidScenario):
        validate_scenario({"horizon_s": 5, "segments": MINIMAL["segments"]})


def test_segments_must_be_nonempty():
    with pytest.raises(InvalidScenario):
        validate_scenario({"seed": 1, "horizon_s": 5, "segments": []})


def test_horizon_and_seed_bounds():
    with pytest.raises(InvalidScenario):
        validate_scenario(dict(MINIMAL, horizon_s=0))
    with pytest.raises(InvalidScenario):
        validate_scenario(dict(MINIMAL, seed=-1))
    with pytest.raises(InvalidScenario):
        validate_scenario(dict(MINIMAL, seed=1 << 64))
    doc = validate_scenario(dict(MINIMAL, seed=(1 << 64) - 1))
    assert doc.seed == (1 << 64) - 1


def test_attack_defaults_and_aliases():
    raw = dict(MINIMAL)
    # "attack" (single) and "attacks" (list) both accepted
    raw["botnet"] = {"attack": {"attack_class": "syn", "rate_pps": 5, "start_s": 2, "duration_s": 3}}
    doc = validate_scenario(raw)
    atk = doc.botnet.attacks[0]
    assert atk.attack_class == "syn"
    assert atk.target == "victim"
    assert atk.packet_size_bytes == 60  # syn class default filled in
    assert atk.include_seed_bots is True
    assert atk.burst_interval_us == DEFAULT_BURST_INTERVAL_US


def test_attack_after_horizon_rejected():
    raw = dict(MINIMAL)
    raw["botnet"] = {
        "attacks": [{"attack_class": "http", "rate_pps": 5, "start_s": 99, "duration_s": 1}]
    }
    with pytest.raises(InvalidScenario) as err:
        validate_scenario(raw)
    assert "start_s" in err.value.path


def test_unknown_attack_class_rejected():
    raw = dict(MINIMAL)
    raw["botnet"] = {
        "attacks": [{"attack_class": "teardrop", "rate_pps": 5, "start_s": 1, "duration_s": 1}]
    }
    with pytest.raises(InvalidScenario):
        validate_scenario(raw)


def test_acl_rules_parse_and_validate():
    raw = dict(MINIMAL)
    raw["defense"] = {
        "acl": [
            {"action": "deny", "dst_port": 23},
            {"action": "allow", "src_prefix": "fd00:0:0:1::/64", "classes": ["scan_probe"]},
        ]
    }
    doc = validate_scenario(raw)
    assert doc.defense.acl[0].action == "deny"
    assert doc.defense.acl[1].src_prefix == "fd00:0:0:1::/64"
    assert doc.defense.acl[1].classes == ("scan_probe",)


def test_acl_bad_prefix_and_class():
    raw = dict(MINIMAL)
    raw["defense"] = {"acl": [{"action": "deny", "dst_prefix": "fd00::"}]}
    with pytest.raises(InvalidScenario):  # missing /plen
        validate_scenario(raw)
    raw["defense"] = {"acl": [{"action": "deny", "dst_prefix": "fd00:::1/64"}]}
    with pytest.raises(InvalidScenario):
        validate_scenario(raw)
    raw["defense"] = {"acl": [{"action": "deny", "classes": ["warp_field"]}]}
    with pytest.raises(InvalidScenario) as err:
        validate_scenario(raw)
    assert "classes[0]" in err.value.path


def test_internal_victim_placement_checked():
    raw = dict(MINIMAL)
    raw["external"] = {"victim": {"placement": "internal", "segment_index": 3}}
    with pytest.raises(InvalidScenario) as err:
        validate_scenario(raw)
    assert err.value.path == "external.victim.segment_index"
    raw["external"] = {"victim": {"placement": "internal", "segment_index": 0, "device_index": 9}}
    with pytest.raises(InvalidScenario) as err:
        validate_scenario(raw)
    assert err.value.path == "external.victim.device_index"
    raw["external"] = {"victim": {"placement": "internal", "segment_index": 0, "device_index": 2}}
    doc = validate_scenario(raw)
    assert doc.external.victim.placement == "internal"


def test_external_legit_needs_clients():
    raw = dict(MINIMAL)
    raw["legit"] = {"rate_rps": 10}
    with pytest.raises(InvalidScenario) as err:
        validate_scenario(raw)
    assert err.value.path == "external.legit_clients"
    raw["external"] = {"legit_clients": 1}
    assert validate_scenario(raw).legit.rate_rps == 10


def test_defense_off_strips_every_switch():
    raw = dict(MINIMAL)
    raw["segments"] = [
        {
            "name": "cams",
            "device_type": "camera",
            "subnet_id": 1,
            "device_count": 3,
            "thresholds": {"max_pps": 10},
            "bucket": {"rate_pps": 5, "burst": 5},
            "shaper": {"drain_rate_pps": 5, "queue_cap": 10},
        }
    ]
    raw["defense"] = {
        "ingress_on": True,
        "egress_on": True,
        "acl": [{"action": "deny", "dst_port": 23}],
        "detector": {},
    }
    off = validate_scenario(raw).defense_off()
    assert off.defense.ingress_on is False
    assert off.defense.egress_on is False
    assert off.defense.acl == ()
    assert off.defense.detector is None
    seg = off.segments[0]
    assert seg.bucket is None and seg.shaper is None
    assert seg.thresholds.max_pps == 0
    # non-defense content untouched
    assert seg.device_count == 3
    assert off.seed == 1


def test_parse_scenario_file_round_trip(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(MINIMAL), encoding="utf-8")
    doc = parse_scenario(path)
    assert doc.segments[0].name == "cams"


def test_parse_scenario_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(IoFailure) as err:
        parse_scenario(missing)
    assert "nope.json" in str(err.value)


def test_parse_scenario_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(InvalidScenario):
        parse_scenario(path)
