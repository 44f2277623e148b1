"""Scenario documents: schema, defaults, validation.

A scenario is a JSON object describing the world (segments, external
hosts, victim), the botnet, the legitimate workload, and the gateway
defense posture. Parsing is strict: unknown keys are rejected and every
error names the offending field path, e.g. ``segments[1].subnet_id``.

Every default lives here, in one place, so a minimal document of
``{"seed": ..., "horizon_s": ..., "segments": [...]}`` expands to a fully
specified run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .addressing import MalformedAddress, parse_address

# ---- defaults ----

DEFAULT_LINK_LATENCY_US = 1_000
DEFAULT_FAN_OUT = 10
DEFAULT_MISS_RATIO = 0.9
DEFAULT_SCAN_INTERVAL_US = 1_000_000
DEFAULT_HANDSHAKE_DELAY_US = 500_000
DEFAULT_C2_PORT = 48101
DEFAULT_SCAN_PORTS = (23, 2323)
DEFAULT_SYN_HOLD_US = 5_000_000
DEFAULT_LEGIT_REQUEST_BYTES = 200
DEFAULT_LEGIT_RESPONSE_BYTES = 500
DEFAULT_VICTIM_CAPACITY_RPS = 100
DEFAULT_VICTIM_QUEUE_CAP = 100
DEFAULT_VICTIM_CONN_TABLE = 100
DEFAULT_DETECTOR_WINDOW_US = 1_000_000
DEFAULT_DETECTOR_LEARN_WINDOWS = 30
DEFAULT_DETECTOR_K = 3.0
DEFAULT_ISOLATION_DURATION_US = 60_000_000
DEFAULT_BURST_INTERVAL_US = 100_000

# Per-class default packet sizes, bytes.
ATTACK_SIZE_DEFAULTS = {"volumetric": 1400, "syn": 60, "http": 300}

ALLOWED_EGRESS_DEFAULT = ("legit_request", "legit_response")

PACKET_CLASS_NAMES = (
    "legit_request",
    "legit_response",
    "scan_probe",
    "c2_control",
    "attack_volumetric",
    "attack_syn",
    "attack_http",
)


class IoFailure(Exception):
    """Scenario file could not be read."""


class InvalidScenario(Exception):
    """Document failed validation; `path` names the offending field."""

    def __init__(self, path: str, reason: str) -> None:
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


# ---- document types ----


@dataclass(frozen=True, slots=True)
class ThresholdsSpec:
    max_connections: int = 0  # 0 = unlimited
    max_pps: int = 0
    max_bandwidth_bps: int = 0


@dataclass(frozen=True, slots=True)
class BucketSpec:
    rate_pps: int
    burst: int


@dataclass(frozen=True, slots=True)
class ShaperSpec:
    drain_rate_pps: int
    queue_cap: int


@dataclass(frozen=True, slots=True)
class SegmentSpec:
    name: str
    device_type: str
    subnet_id: int
    device_count: int
    pct_default_creds: float = 1.0
    pct_unpatched: float = 0.0
    pre_registered_bots: int = 0
    thresholds: ThresholdsSpec = field(default_factory=ThresholdsSpec)
    bucket: Optional[BucketSpec] = None
    shaper: Optional[ShaperSpec] = None


@dataclass(frozen=True, slots=True)
class VictimSpec:
    placement: str = "external"  # "external" | "internal"
    capacity_rps: int = DEFAULT_VICTIM_CAPACITY_RPS
    queue_cap: int = DEFAULT_VICTIM_QUEUE_CAP
    conn_table: int = DEFAULT_VICTIM_CONN_TABLE
    inbound_bps: int = 0  # 0 = unlimited
    segment_index: int = 0  # used when placement == "internal"
    device_index: int = 0


@dataclass(frozen=True, slots=True)
class ExternalSpec:
    seed_bots: int = 0
    legit_clients: int = 0
    victim: VictimSpec = field(default_factory=VictimSpec)


@dataclass(frozen=True, slots=True)
class LegitSpec:
    rate_rps: float = 0.0
    start_s: float = 0.0
    duration_s: Optional[float] = None  # None = to horizon
    request_bytes: int = DEFAULT_LEGIT_REQUEST_BYTES
    response_bytes: int = DEFAULT_LEGIT_RESPONSE_BYTES
    # "external": requests come from the external client hosts;
    # "internal": every internal device is a potential client.
    client_location: str = "external"


@dataclass(frozen=True, slots=True)
class AttackSpec:
    attack_class: str  # "volumetric" | "syn" | "http"
    rate_pps: int
    start_s: float
    duration_s: float
    target: str = "victim"  # "victim" or an explicit IPv6 literal
    packet_size_bytes: int = 0  # 0 = class default
    include_seed_bots: bool = True
    burst_interval_us: int = DEFAULT_BURST_INTERVAL_US


@dataclass(frozen=True, slots=True)
class BotnetSpec:
    fan_out: int = DEFAULT_FAN_OUT
    miss_ratio: float = DEFAULT_MISS_RATIO
    scan_interval_us: int = DEFAULT_SCAN_INTERVAL_US
    handshake_delay_us: int = DEFAULT_HANDSHAKE_DELAY_US
    c2_port: int = DEFAULT_C2_PORT
    scan_ports: tuple[int, ...] = DEFAULT_SCAN_PORTS
    syn_hold_us: int = DEFAULT_SYN_HOLD_US
    attacks: tuple[AttackSpec, ...] = ()


@dataclass(frozen=True, slots=True)
class AclRuleSpec:
    action: str  # "allow" | "deny"
    src_prefix: Optional[str] = None
    dst_prefix: Optional[str] = None
    dst_port: Optional[int] = None
    classes: Optional[tuple[str, ...]] = None


@dataclass(frozen=True, slots=True)
class DetectorSpec:
    window_us: int = DEFAULT_DETECTOR_WINDOW_US
    learn_windows: int = DEFAULT_DETECTOR_LEARN_WINDOWS
    k: float = DEFAULT_DETECTOR_K
    isolation_duration_us: int = DEFAULT_ISOLATION_DURATION_US


@dataclass(frozen=True, slots=True)
class DefenseSpec:
    ingress_on: bool = False
    egress_on: bool = False
    acl: tuple[AclRuleSpec, ...] = ()
    detector: Optional[DetectorSpec] = None
    allowed_egress_classes: tuple[str, ...] = ALLOWED_EGRESS_DEFAULT


@dataclass(frozen=True, slots=True)
class ScenarioDoc:
    seed: int
    horizon_s: int
    segments: tuple[SegmentSpec, ...]
    external: ExternalSpec = field(default_factory=ExternalSpec)
    legit: LegitSpec = field(default_factory=LegitSpec)
    botnet: BotnetSpec = field(default_factory=BotnetSpec)
    defense: DefenseSpec = field(default_factory=DefenseSpec)
    link_latency_us: int = DEFAULT_LINK_LATENCY_US

    def defense_off(self) -> "ScenarioDoc":
        """Copy with every defense switch forced off (the baseline arm of
        a comparison run)."""
        from dataclasses import replace

        off_segments = tuple(
            SegmentSpec(
                name=s.name,
                device_type=s.device_type,
                subnet_id=s.subnet_id,
                device_count=s.device_count,
                pct_default_creds=s.pct_default_creds,
                pct_unpatched=s.pct_unpatched,
                pre_registered_bots=s.pre_registered_bots,
                thresholds=ThresholdsSpec(),
                bucket=None,
                shaper=None,
            )
            for s in self.segments
        )
        return replace(self, segments=off_segments, defense=DefenseSpec())


# ---- strict reader helpers ----


def _require_mapping(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise InvalidScenario(path, f"expected object, got {type(value).__name__}")
    return value


def _reject_unknown(obj: dict, known: set[str], path: str) -> None:
    for key in obj:
        if key not in known:
            raise InvalidScenario(f"{path}.{key}" if path else key, "unknown key")


def _get_int(obj: dict, key: str, path: str, *, default=None, lo=None, hi=None) -> int:
    if key not in obj:
        if default is None:
            raise InvalidScenario(f"{path}{key}", "required field missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise InvalidScenario(f"{path}{key}", f"expected integer, got {v!r}")
    if lo is not None and v < lo:
        raise InvalidScenario(f"{path}{key}", f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise InvalidScenario(f"{path}{key}", f"must be <= {hi}, got {v}")
    return v


def _get_num(obj: dict, key: str, path: str, *, default=None, lo=None, hi=None) -> float:
    if key not in obj:
        if default is None:
            raise InvalidScenario(f"{path}{key}", "required field missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidScenario(f"{path}{key}", f"expected number, got {v!r}")
    if lo is not None and v < lo:
        raise InvalidScenario(f"{path}{key}", f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise InvalidScenario(f"{path}{key}", f"must be <= {hi}, got {v}")
    return float(v)


def _get_str(obj: dict, key: str, path: str, *, default=None, choices=None) -> str:
    if key not in obj:
        if default is None:
            raise InvalidScenario(f"{path}{key}", "required field missing")
        return default
    v = obj[key]
    if not isinstance(v, str):
        raise InvalidScenario(f"{path}{key}", f"expected string, got {v!r}")
    if choices is not None and v not in choices:
        raise InvalidScenario(f"{path}{key}", f"must be one of {sorted(choices)}, got {v!r}")
    return v


def _get_bool(obj: dict, key: str, path: str, *, default: bool) -> bool:
    if key not in obj:
        return default
    v = obj[key]
    if not isinstance(v, bool):
        raise InvalidScenario(f"{path}{key}", f"expected boolean, got {v!r}")
    return v


# ---- section parsers ----


def _parse_thresholds(raw: Any, path: str) -> ThresholdsSpec:
    obj = _require_mapping(raw, path)
    _reject_unknown(obj, {"max_connections", "max_pps", "max_bandwidth_bps"}, path)
    p = path + "."
    return ThresholdsSpec(
        max_connections=_get_int(obj, "max_connections", p, default=0, lo=0),
        max_pps=_get_int(obj, "max_pps", p, default=0, lo=0),
        max_bandwidth_bps=_get_int(obj, "max_bandwidth_bps", p, default=0, lo=0),
    )


def _parse_segment(raw: Any, path: str) -> SegmentSpec:
    obj = _require_mapping(raw, path)
    known = {
        "name",
        "device_type",
        "subnet_id",
        "device_count",
        "pct_default_creds",
        "pct_unpatched",
        "pre_registered_bots",
        "thresholds",
        "bucket",
        "shaper",
    }
    _reject_unknown(obj, known, path)
    p = path + "."
    device_type = _get_str(obj, "device_type", p)
    device_count = _get_int(obj, "device_count", p, lo=0)
    pre_reg = _get_int(obj, "pre_registered_bots", p, default=0, lo=0)
    if pre_reg > device_count:
        raise InvalidScenario(
            f"{p}pre_registered_bots", f"exceeds device_count ({pre_reg} > {device_count})"
        )
    bucket = None
    if obj.get("bucket") is not None:
        b = _require_mapping(obj["bucket"], p + "bucket")
        _reject_unknown(b, {"rate_pps", "burst"}, p + "bucket")
        bucket = BucketSpec(
            rate_pps=_get_int(b, "rate_pps", p + "bucket.", lo=1),
            burst=_get_int(b, "burst", p + "bucket.", lo=1),
        )
    shaper = None
    if obj.get("shaper") is not None:
        s = _require_mapping(obj["shaper"], p + "shaper")
        _reject_unknown(s, {"drain_rate_pps", "queue_cap"}, p + "shaper")
        shaper = ShaperSpec(
            drain_rate_pps=_get_int(s, "drain_rate_pps", p + "shaper.", lo=1),
            queue_cap=_get_int(s, "queue_cap", p + "shaper.", lo=1),
        )
    return SegmentSpec(
        name=_get_str(obj, "name", p, default=device_type),
        device_type=device_type,
        subnet_id=_get_int(obj, "subnet_id", p, lo=0, hi=0xFFFF),
        device_count=device_count,
        pct_default_creds=_get_num(obj, "pct_default_creds", p, default=1.0, lo=0.0, hi=1.0),
        pct_unpatched=_get_num(obj, "pct_unpatched", p, default=0.0, lo=0.0, hi=1.0),
        pre_registered_bots=pre_reg,
        thresholds=(
            _parse_thresholds(obj["thresholds"], p + "thresholds")
            if obj.get("thresholds") is not None
            else ThresholdsSpec()
        ),
        bucket=bucket,
        shaper=shaper,
    )


def _parse_victim(raw: Any, path: str) -> VictimSpec:
    obj = _require_mapping(raw, path)
    known = {
        "placement",
        "capacity_rps",
        "queue_cap",
        "conn_table",
        "inbound_bps",
        "segment_index",
        "device_index",
    }
    _reject_unknown(obj, known, path)
    p = path + "."
    return VictimSpec(
        placement=_get_str(obj, "placement", p, default="external", choices={"external", "internal"}),
        capacity_rps=_get_int(obj, "capacity_rps", p, default=DEFAULT_VICTIM_CAPACITY_RPS, lo=1),
        queue_cap=_get_int(obj, "queue_cap", p, default=DEFAULT_VICTIM_QUEUE_CAP, lo=0),
        conn_table=_get_int(obj, "conn_table", p, default=DEFAULT_VICTIM_CONN_TABLE, lo=0),
        inbound_bps=_get_int(obj, "inbound_bps", p, default=0, lo=0),
        segment_index=_get_int(obj, "segment_index", p, default=0, lo=0),
        device_index=_get_int(obj, "device_index", p, default=0, lo=0),
    )


def _parse_external(raw: Any, path: str) -> ExternalSpec:
    obj = _require_mapping(raw, path)
    _reject_unknown(obj, {"seed_bots", "legit_clients", "victim"}, path)
    p = path + "."
    victim = (
        _parse_victim(obj["victim"], p + "victim") if "victim" in obj else VictimSpec()
    )
    return ExternalSpec(
        seed_bots=_get_int(obj, "seed_bots", p, default=0, lo=0),
        legit_clients=_get_int(obj, "legit_clients", p, default=0, lo=0),
        victim=victim,
    )


def _parse_legit(raw: Any, path: str) -> LegitSpec:
    obj = _require_mapping(raw, path)
    known = {
        "rate_rps",
        "start_s",
        "duration_s",
        "request_bytes",
        "response_bytes",
        "client_location",
    }
    _reject_unknown(obj, known, path)
    p = path + "."
    duration: Optional[float]
    if obj.get("duration_s") is None:
        duration = None
    else:
        duration = _get_num(obj, "duration_s", p, lo=0.0)
    return LegitSpec(
        rate_rps=_get_num(obj, "rate_rps", p, default=0.0, lo=0.0),
        start_s=_get_num(obj, "start_s", p, default=0.0, lo=0.0),
        duration_s=duration,
        request_bytes=_get_int(obj, "request_bytes", p, default=DEFAULT_LEGIT_REQUEST_BYTES, lo=1),
        response_bytes=_get_int(obj, "response_bytes", p, default=DEFAULT_LEGIT_RESPONSE_BYTES, lo=1),
        client_location=_get_str(
            obj, "client_location", p, default="external", choices={"external", "internal"}
        ),
    )


def _parse_attack(raw: Any, path: str) -> AttackSpec:
    obj = _require_mapping(raw, path)
    known = {
        "attack_class",
        "target",
        "rate_pps",
        "packet_size_bytes",
        "start_s",
        "duration_s",
        "include_seed_bots",
        "burst_interval_us",
    }
    _reject_unknown(obj, known, path)
    p = path + "."
    klass = _get_str(obj, "attack_class", p, choices={"volumetric", "syn", "http"})
    size = _get_int(obj, "packet_size_bytes", p, default=ATTACK_SIZE_DEFAULTS[klass], lo=1)
    return AttackSpec(
        attack_class=klass,
        rate_pps=_get_int(obj, "rate_pps", p, lo=1),
        start_s=_get_num(obj, "start_s", p, lo=0.0),
        duration_s=_get_num(obj, "duration_s", p, lo=0.0),
        target=_get_str(obj, "target", p, default="victim"),
        packet_size_bytes=size,
        include_seed_bots=_get_bool(obj, "include_seed_bots", p, default=True),
        burst_interval_us=_get_int(obj, "burst_interval_us", p, default=DEFAULT_BURST_INTERVAL_US, lo=1),
    )


def _parse_botnet(raw: Any, path: str) -> BotnetSpec:
    obj = _require_mapping(raw, path)
    known = {
        "fan_out",
        "miss_ratio",
        "scan_interval_us",
        "handshake_delay_us",
        "c2_port",
        "scan_ports",
        "syn_hold_us",
        "attack",
        "attacks",
    }
    _reject_unknown(obj, known, path)
    p = path + "."
    if "attack" in obj and "attacks" in obj:
        raise InvalidScenario(p + "attack", "give either 'attack' or 'attacks', not both")
    attacks: list[AttackSpec] = []
    if "attack" in obj and obj["attack"] is not None:
        raw_attack = obj["attack"]
        if isinstance(raw_attack, list):
            for i, item in enumerate(raw_attack):
                attacks.append(_parse_attack(item, f"{p}attack[{i}]"))
        else:
            attacks.append(_parse_attack(raw_attack, p + "attack"))
    elif "attacks" in obj and obj["attacks"] is not None:
        if not isinstance(obj["attacks"], list):
            raise InvalidScenario(p + "attacks", "expected array")
        for i, item in enumerate(obj["attacks"]):
            attacks.append(_parse_attack(item, f"{p}attacks[{i}]"))
    ports_raw = obj.get("scan_ports", list(DEFAULT_SCAN_PORTS))
    if not isinstance(ports_raw, list) or not ports_raw:
        raise InvalidScenario(p + "scan_ports", "expected non-empty array of ports")
    ports = []
    for i, port in enumerate(ports_raw):
        if isinstance(port, bool) or not isinstance(port, int) or not 0 < port < 65536:
            raise InvalidScenario(f"{p}scan_ports[{i}]", f"invalid port {port!r}")
        ports.append(port)
    return BotnetSpec(
        fan_out=_get_int(obj, "fan_out", p, default=DEFAULT_FAN_OUT, lo=0),
        miss_ratio=_get_num(obj, "miss_ratio", p, default=DEFAULT_MISS_RATIO, lo=0.0, hi=1.0),
        scan_interval_us=_get_int(obj, "scan_interval_us", p, default=DEFAULT_SCAN_INTERVAL_US, lo=1),
        handshake_delay_us=_get_int(obj, "handshake_delay_us", p, default=DEFAULT_HANDSHAKE_DELAY_US, lo=0),
        c2_port=_get_int(obj, "c2_port", p, default=DEFAULT_C2_PORT, lo=1, hi=65535),
        scan_ports=tuple(ports),
        syn_hold_us=_get_int(obj, "syn_hold_us", p, default=DEFAULT_SYN_HOLD_US, lo=0),
        attacks=tuple(attacks),
    )


def _parse_acl_rule(raw: Any, path: str) -> AclRuleSpec:
    obj = _require_mapping(raw, path)
    _reject_unknown(obj, {"action", "src_prefix", "dst_prefix", "dst_port", "classes"}, path)
    p = path + "."
    action = _get_str(obj, "action", p, choices={"allow", "deny"})
    port = None
    if obj.get("dst_port") is not None:
        port = _get_int(obj, "dst_port", p, lo=1, hi=65535)
    classes = None
    if obj.get("classes") is not None:
        if not isinstance(obj["classes"], list):
            raise InvalidScenario(p + "classes", "expected array of class names")
        out = []
        for i, name in enumerate(obj["classes"]):
            if name not in PACKET_CLASS_NAMES:
                raise InvalidScenario(f"{p}classes[{i}]", f"unknown packet class {name!r}")
            out.append(name)
        classes = tuple(out)
    src = _check_prefix(obj.get("src_prefix"), p + "src_prefix")
    dst = _check_prefix(obj.get("dst_prefix"), p + "dst_prefix")
    return AclRuleSpec(action=action, src_prefix=src, dst_prefix=dst, dst_port=port, classes=classes)


def _check_prefix(value: Any, path: str) -> Optional[str]:
    """Validate an address/length prefix string like ``fd00::/8``."""
    if value is None:
        return None
    if not isinstance(value, str):
        raise InvalidScenario(path, "expected string prefix")
    addr_part, sep, len_part = value.partition("/")
    if not sep or not len_part.isdigit() or not 0 <= int(len_part) <= 128:
        raise InvalidScenario(path, f"bad prefix length in {value!r}")
    try:
        parse_address(addr_part)
    except MalformedAddress as exc:
        raise InvalidScenario(path, str(exc)) from exc
    return value


def _parse_detector(raw: Any, path: str) -> DetectorSpec:
    obj = _require_mapping(raw, path)
    _reject_unknown(obj, {"window_us", "learn_windows", "k", "isolation_duration_us"}, path)
    p = path + "."
    return DetectorSpec(
        window_us=_get_int(obj, "window_us", p, default=DEFAULT_DETECTOR_WINDOW_US, lo=1),
        learn_windows=_get_int(obj, "learn_windows", p, default=DEFAULT_DETECTOR_LEARN_WINDOWS, lo=1),
        k=_get_num(obj, "k", p, default=DEFAULT_DETECTOR_K, lo=0.0),
        isolation_duration_us=_get_int(
            obj, "isolation_duration_us", p, default=DEFAULT_ISOLATION_DURATION_US, lo=1
        ),
    )


def _parse_defense(raw: Any, path: str) -> DefenseSpec:
    obj = _require_mapping(raw, path)
    known = {"ingress_on", "egress_on", "acl", "detector", "allowed_egress_classes"}
    _reject_unknown(obj, known, path)
    p = path + "."
    rules: list[AclRuleSpec] = []
    if obj.get("acl") is not None:
        if not isinstance(obj["acl"], list):
            raise InvalidScenario(p + "acl", "expected array of rules")
        for i, rule in enumerate(obj["acl"]):
            rules.append(_parse_acl_rule(rule, f"{p}acl[{i}]"))
    detector = None
    if obj.get("detector") is not None:
        detector = _parse_detector(obj["detector"], p + "detector")
    allowed = list(ALLOWED_EGRESS_DEFAULT)
    if obj.get("allowed_egress_classes") is not None:
        if not isinstance(obj["allowed_egress_classes"], list):
            raise InvalidScenario(p + "allowed_egress_classes", "expected array of class names")
        allowed = []
        for i, name in enumerate(obj["allowed_egress_classes"]):
            if name not in PACKET_CLASS_NAMES:
                raise InvalidScenario(
                    f"{p}allowed_egress_classes[{i}]", f"unknown packet class {name!r}"
                )
            allowed.append(name)
    return DefenseSpec(
        ingress_on=_get_bool(obj, "ingress_on", p, default=False),
        egress_on=_get_bool(obj, "egress_on", p, default=False),
        acl=tuple(rules),
        detector=detector,
        allowed_egress_classes=tuple(allowed),
    )


# ---- entry points ----


def validate_scenario(raw: Any) -> ScenarioDoc:
    obj = _require_mapping(raw, "<root>")
    known = {"seed", "horizon_s", "link_latency_us", "segments", "external", "legit", "botnet", "defense"}
    _reject_unknown(obj, known, "")
    seed = _get_int(obj, "seed", "", lo=0, hi=(1 << 64) - 1)
    horizon_s = _get_int(obj, "horizon_s", "", lo=1)
    if "segments" not in obj:
        raise InvalidScenario("segments", "required field missing")
    if not isinstance(obj["segments"], list) or not obj["segments"]:
        raise InvalidScenario("segments", "expected non-empty array")
    segments = tuple(
        _parse_segment(raw_seg, f"segments[{i}]") for i, raw_seg in enumerate(obj["segments"])
    )
    seen_subnets: dict[int, int] = {}
    for i, seg in enumerate(segments):
        if seg.subnet_id in seen_subnets:
            raise InvalidScenario(
                f"segments[{i}].subnet_id",
                f"duplicate subnet_id {seg.subnet_id} (also segments[{seen_subnets[seg.subnet_id]}])",
            )
        seen_subnets[seg.subnet_id] = i
    external = _parse_external(obj["external"], "external") if "external" in obj else ExternalSpec()
    if external.victim.placement == "internal":
        si = external.victim.segment_index
        if si >= len(segments):
            raise InvalidScenario("external.victim.segment_index", f"no segment with index {si}")
        if external.victim.device_index >= segments[si].device_count:
            raise InvalidScenario(
                "external.victim.device_index",
                f"segment {si} has only {segments[si].device_count} devices",
            )
    doc = ScenarioDoc(
        seed=seed,
        horizon_s=horizon_s,
        segments=segments,
        external=external,
        legit=_parse_legit(obj["legit"], "legit") if "legit" in obj else LegitSpec(),
        botnet=_parse_botnet(obj["botnet"], "botnet") if "botnet" in obj else BotnetSpec(),
        defense=_parse_defense(obj["defense"], "defense") if "defense" in obj else DefenseSpec(),
        link_latency_us=_get_int(obj, "link_latency_us", "", default=DEFAULT_LINK_LATENCY_US, lo=0),
    )
    horizon_us = doc.horizon_s * 1_000_000
    for i, atk in enumerate(doc.botnet.attacks):
        if atk.start_s * 1_000_000 > horizon_us:
            raise InvalidScenario(f"botnet.attacks[{i}].start_s", "attack starts after horizon")
    if (
        doc.legit.rate_rps > 0
        and doc.legit.client_location == "external"
        and doc.external.legit_clients == 0
    ):
        raise InvalidScenario(
            "external.legit_clients",
            "legit.rate_rps > 0 with external clients requires at least one client host",
        )
    return doc


def parse_scenario(path: str | Path) -> ScenarioDoc:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read scenario file {p}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidScenario("<document>", f"not valid JSON: {exc}") from exc
    return validate_scenario(raw)
