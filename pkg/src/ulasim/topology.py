"""World model: segments, devices, external hosts, and path classes.

The network is a star: every segment hangs off one gateway, and the
external internet is a flat set of addressable hosts behind that same
gateway. Routing is therefore a pure function of where a packet was
emitted (inside which segment, or outside) and where its destination
address lives. Spoofed source addresses never influence routing; they
only matter to the filters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Optional

from .addressing import (
    AddressScope,
    UlaPrefix,
    classify,
    device_address,
    generate_ula_prefix,
    parse_address,
)
from .botnet import BotState
from .scenario import ScenarioDoc

# External hosts draw addresses from the documentation block; the gateway
# sits in a reserved sub-block so host numbering is independent of it.
EXT_HOST_BASE = parse_address("2001:db8::")
GATEWAY_ADDR = parse_address("2001:db8:ffff::1")


class Credential(Enum):
    Default = auto()
    Strong = auto()


class Firmware(Enum):
    Unpatched = auto()
    Patched = auto()


class Role(Enum):
    C2Server = auto()
    Victim = auto()
    LegitClient = auto()
    SeedBot = auto()


class RouteDecision(Enum):
    DeliverIntraSegment = auto()
    ViaGatewayInterSegment = auto()
    ViaGatewayEgress = auto()  # internal -> Global
    ViaGatewayIngress = auto()  # Global -> internal
    ExternalOnly = auto()  # Global -> Global, never touches the gateway
    Unroutable = auto()


@dataclass(frozen=True, slots=True)
class DeviceProfile:
    device_type: str
    credential_strength: Credential
    firmware: Firmware

    @property
    def vulnerable(self) -> bool:
        return self.credential_strength is Credential.Default or self.firmware is Firmware.Unpatched


@dataclass(slots=True)
class Device:
    id: int
    address: int
    segment_id: int
    profile: DeviceProfile
    bot_state: BotState = BotState.Clean


@dataclass(slots=True)
class Segment:
    id: int
    name: str
    device_type: str
    prefix: UlaPrefix
    isolated_until: Optional[int] = None  # us; None = not isolated


@dataclass(frozen=True, slots=True)
class ExternalHost:
    id: int
    address: int
    role: Role


@dataclass(slots=True)
class Topology:
    """Everything build_topology derives from a scenario.

    Immutable after construction except for per-run device/segment state
    (bot_state, isolated_until), which the engine owns.
    """

    segments: list[Segment]
    devices: list[Device]
    hosts: list[ExternalHost]
    link_latency: int
    gateway_addr: int = GATEWAY_ADDR
    device_by_addr: dict[int, Device] = field(default_factory=dict)
    host_by_addr: dict[int, ExternalHost] = field(default_factory=dict)
    segment_by_top64: dict[int, Segment] = field(default_factory=dict)
    devices_in_segment: dict[int, list[Device]] = field(default_factory=dict)
    c2: Optional[ExternalHost] = None
    victim_host: Optional[ExternalHost] = None
    victim_device: Optional[Device] = None
    seed_bots: list[ExternalHost] = field(default_factory=list)
    legit_clients: list[ExternalHost] = field(default_factory=list)

    @property
    def victim_addr(self) -> int:
        if self.victim_host is not None:
            return self.victim_host.address
        assert self.victim_device is not None
        return self.victim_device.address

    def segment_of(self, addr: int) -> Optional[Segment]:
        return self.segment_by_top64.get(addr >> 64)


def _profile_for(spec_seg, index: int) -> DeviceProfile:
    """Deterministic vulnerability assignment: the default-credential
    share fills from the front of the segment, the unpatched share from
    the back. No randomness, so infection oracles can recompute it."""
    n = spec_seg.device_count
    k_creds = int(spec_seg.pct_default_creds * n + 0.5)
    k_unpatched = int(spec_seg.pct_unpatched * n + 0.5)
    creds = Credential.Default if index < k_creds else Credential.Strong
    firmware = Firmware.Unpatched if index >= n - k_unpatched else Firmware.Patched
    return DeviceProfile(spec_seg.device_type, creds, firmware)


def build_topology(scenario: ScenarioDoc, rng=None) -> Topology:
    """Materialize the world for one scenario.

    Address plan: segment prefixes come from the scenario seed (same site
    id, per-segment subnet id); device interface ids count from 1 in
    declaration order; external hosts take successive addresses from
    2001:db8:: in a fixed role order (C2, external victim, seed bots,
    legit clients). `rng` is accepted for signature stability but the
    plan is fully deterministic.
    """
    segments: list[Segment] = []
    devices: list[Device] = []
    device_by_addr: dict[int, Device] = {}
    segment_by_top64: dict[int, Segment] = {}
    devices_in_segment: dict[int, list[Device]] = {}

    next_device_id = 1
    for seg_idx, spec_seg in enumerate(scenario.segments):
        prefix = generate_ula_prefix(scenario.seed, spec_seg.subnet_id)
        seg = Segment(id=seg_idx, name=spec_seg.name, device_type=spec_seg.device_type, prefix=prefix)
        segments.append(seg)
        segment_by_top64[prefix.top64] = seg
        members: list[Device] = []
        for i in range(spec_seg.device_count):
            dev = Device(
                id=next_device_id,
                address=device_address(prefix, i + 1),
                segment_id=seg_idx,
                profile=_profile_for(spec_seg, i),
            )
            if i < spec_seg.pre_registered_bots:
                dev.bot_state = BotState.Registered
            next_device_id += 1
            devices.append(dev)
            members.append(dev)
            device_by_addr[dev.address] = dev
        devices_in_segment[seg_idx] = members

    hosts: list[ExternalHost] = []
    host_by_addr: dict[int, ExternalHost] = {}
    next_host_addr = EXT_HOST_BASE + 1
    next_host_id = 1

    def add_host(role: Role) -> ExternalHost:
        nonlocal next_host_addr, next_host_id
        host = ExternalHost(id=next_host_id, address=next_host_addr, role=role)
        hosts.append(host)
        host_by_addr[host.address] = host
        next_host_addr += 1
        next_host_id += 1
        return host

    c2 = add_host(Role.C2Server)
    victim_host = None
    victim_device = None
    if scenario.external.victim.placement == "external":
        victim_host = add_host(Role.Victim)
    else:
        seg_members = devices_in_segment[scenario.external.victim.segment_index]
        victim_device = seg_members[scenario.external.victim.device_index]
    seed_bots = [add_host(Role.SeedBot) for _ in range(scenario.external.seed_bots)]
    legit_clients = [add_host(Role.LegitClient) for _ in range(scenario.external.legit_clients)]

    return Topology(
        segments=segments,
        devices=devices,
        hosts=hosts,
        link_latency=scenario.link_latency_us,
        device_by_addr=device_by_addr,
        host_by_addr=host_by_addr,
        segment_by_top64=segment_by_top64,
        devices_in_segment=devices_in_segment,
        c2=c2,
        victim_host=victim_host,
        victim_device=victim_device,
        seed_bots=seed_bots,
        legit_clients=legit_clients,
    )


def route(topology: Topology, origin_segment: Optional[int], dst: int) -> RouteDecision:
    """Path class for a packet emitted from `origin_segment` (None when
    the emitter is an external host) toward `dst`.

    Routing goes by the emitter's physical side of the gateway plus the
    destination address; a forged source address cannot reroute a packet.
    """
    dst_seg = topology.segment_by_top64.get(dst >> 64)
    if origin_segment is not None:
        if dst_seg is not None:
            if dst_seg.id == origin_segment:
                return RouteDecision.DeliverIntraSegment
            return RouteDecision.ViaGatewayInterSegment
        if classify(dst) is AddressScope.UniqueLocal:
            # ULA outside every known segment: nothing routes it.
            return RouteDecision.Unroutable
        return RouteDecision.ViaGatewayEgress
    # external emitter
    if dst_seg is not None:
        return RouteDecision.ViaGatewayIngress
    if classify(dst) is AddressScope.UniqueLocal:
        return RouteDecision.Unroutable
    if dst in topology.host_by_addr:
        return RouteDecision.ExternalOnly
    return RouteDecision.Unroutable
