"""Run orchestration: builds one world per scenario, registers every
event handler, runs to the horizon, drains in-flight packets, and
produces the summary and report files.

Draw disciplines (fixed; replays and oracles depend on them):
  - scan: one RNG stream per bot (purpose 1, entity id); per probe the
    draws are miss-float, then target (u64 for a miss, bounded index for
    a hit), then port index. One scan step emits its hit probes first,
    then its missed probes grouped per port into count-batched packets.
  - legit: one stream (purpose 2); per arrival a client index, then the
    exponential gap to the next arrival. The first arrival sits one gap
    after the window opens.
  - spoofed sources: one stream per bot (purpose 3); one u64 per
    emission slot of a spoofing attack.

Entity ids unify devices and hosts: device.id for devices, and
len(devices) + host.id for external hosts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .addressing import parse_address
from .botnet import (
    ATTACK_PROFILES,
    AttackClass,
    AttackCommand,
    BotState,
    C2State,
    InfectionOutcome,
    attempt_infection,
    draw_probe,
    spoofed_source,
)
from .defense import (
    DROP_REASON_NAMES,
    AclAction,
    AclRule,
    AnomalyDetector,
    DropReason,
    GatewayPolicy,
)
from .kernel import US_PER_S, Engine, Event, EventKind
from .metrics import (
    MetricsLog,
    RunSummary,
    check_conservation,
    emit,
    summarize,
)
from .rng import PURPOSE_LEGIT, PURPOSE_MISC, PURPOSE_SCAN, derive_stream
from .scenario import ScenarioDoc
from .topology import Device, ExternalHost, RouteDecision, Topology, build_topology, route
from .traffic import (
    C2_CONTROL_BYTES,
    PACKET_CLASS_NAMES,
    SCAN_PROBE_BYTES,
    Packet,
    PacketClass,
    VictimService,
    slot_count,
)

DISPATCH_LEAD_US = 100_000

ATTACK_CLASS_BY_NAME = {
    "volumetric": AttackClass.Volumetric,
    "syn": AttackClass.ProtocolSyn,
    "http": AttackClass.AppLayerHttp,
}


@dataclass(frozen=True, slots=True)
class RunResult:
    summary: RunSummary
    log: MetricsLog
    paths: Optional[dict[str, Path]] = None


class Simulation:
    """One engine, one topology, one policy, one victim: the full state
    of a single run."""

    def __init__(self, scenario: ScenarioDoc):
        self.scenario = scenario
        self.horizon_us = scenario.horizon_s * US_PER_S
        self.engine = Engine()
        self.topology: Topology = build_topology(scenario)
        self.metrics = MetricsLog(scenario.horizon_s, PACKET_CLASS_NAMES, DROP_REASON_NAMES)
        self.victim = VictimService(
            capacity_rps=scenario.external.victim.capacity_rps,
            queue_cap=scenario.external.victim.queue_cap,
            conn_table=scenario.external.victim.conn_table,
            inbound_bps=scenario.external.victim.inbound_bps,
            syn_hold_us=scenario.botnet.syn_hold_us,
        )
        self.policy = self._build_policy()
        self.commands = self._build_commands()
        self.c2 = C2State(registered_bots={}, pending_commands=list(self.commands))

        n_dev = len(self.topology.devices)
        self._n_dev = n_dev
        self._device_by_entity: dict[int, Device] = {d.id: d for d in self.topology.devices}
        self._host_by_entity: dict[int, ExternalHost] = {
            n_dev + h.id: h for h in self.topology.hosts
        }
        self._host_bot_state: dict[int, BotState] = {}
        self._standing_orders: set[int] = set()
        self._scan_rngs = {}
        self._spoof_rngs = {}
        self._scan_pools: dict[int, list[int]] = {}
        self._dispatch_flow: dict[int, int] = {}
        self._flow_seq = 0
        self._legit_end_us = 0
        self._legit_rng = derive_stream(scenario.seed, PURPOSE_LEGIT)
        self._legit_clients = self._build_client_list()
        self.infection_times: dict[int, int] = {}

        eng = self.engine
        eng.on(EventKind.SCAN_STEP, self._on_scan_step)
        eng.on(EventKind.LEGIT_GEN, self._on_legit_gen)
        eng.on(EventKind.ATTACK_EMIT, self._on_attack_emit)
        eng.on(EventKind.C2_DISPATCH, self._on_c2_dispatch)
        eng.on(EventKind.DETECTOR_TICK, self._on_detector_tick)
        eng.on(EventKind.PACKET_AT_GATEWAY, self._on_packet_at_gateway)
        eng.on(EventKind.PACKET_AT_DEVICE, self._on_packet_at_device)
        eng.on(EventKind.PACKET_AT_HOST, self._on_packet_at_host)
        eng.on(EventKind.SHAPER_DEPART, self._on_shaper_depart)
        eng.on(EventKind.VICTIM_SERVE, self._on_victim_serve)
        eng.on(EventKind.SYN_RELEASE, self._on_syn_release)
        eng.on(EventKind.GW_CONN_RELEASE, self._on_gw_conn_release)

        self._schedule_initial()

    # ---- construction ----

    def _build_policy(self) -> GatewayPolicy:
        spec = self.scenario.defense
        detector = None
        if spec.detector is not None:
            d = spec.detector
            detector = AnomalyDetector(d.window_us, d.learn_windows, d.k, d.isolation_duration_us)
        rules = []
        for r in spec.acl:
            rules.append(
                AclRule(
                    action=AclAction.Allow if r.action == "allow" else AclAction.Deny,
                    src_net=_parse_net(r.src_prefix),
                    dst_net=_parse_net(r.dst_prefix),
                    dst_port=r.dst_port,
                    classes=(
                        frozenset(PacketClass(c) for c in r.classes)
                        if r.classes is not None
                        else None
                    ),
                )
            )
        policy = GatewayPolicy(
            self.topology,
            ingress_on=spec.ingress_on,
            egress_on=spec.egress_on,
            acl=tuple(rules),
            allowed_egress=frozenset(PacketClass(c) for c in spec.allowed_egress_classes),
            detector=detector,
            syn_hold_us=self.scenario.botnet.syn_hold_us,
        )
        for seg_idx, seg_spec in enumerate(self.scenario.segments):
            if seg_spec.bucket is not None:
                policy.set_bucket(seg_idx, seg_spec.bucket.rate_pps, seg_spec.bucket.burst)
            if seg_spec.shaper is not None:
                policy.set_shaper(seg_idx, seg_spec.shaper.drain_rate_pps, seg_spec.shaper.queue_cap)
            th = seg_spec.thresholds
            if th.max_connections or th.max_pps or th.max_bandwidth_bps:
                policy.set_thresholds(seg_idx, th.max_connections, th.max_pps, th.max_bandwidth_bps)
        return policy

    def _build_commands(self) -> list[AttackCommand]:
        out = []
        for spec in self.scenario.botnet.attacks:
            target = (
                self.topology.victim_addr
                if spec.target == "victim"
                else parse_address(spec.target)
            )
            out.append(
                AttackCommand(
                    attack_class=ATTACK_CLASS_BY_NAME[spec.attack_class],
                    target=target,
                    rate_pps=spec.rate_pps,
                    packet_size_bytes=spec.packet_size_bytes,
                    start=int(round(spec.start_s * US_PER_S)),
                    duration=max(1, int(round(spec.duration_s * US_PER_S))),
                    burst_interval_us=spec.burst_interval_us,
                    include_seed_bots=spec.include_seed_bots,
                )
            )
        return out

    def _build_client_list(self) -> list[tuple[int, Optional[int]]]:
        """(address, origin segment) per potential legit client."""
        if self.scenario.legit.client_location == "external":
            return [(h.address, None) for h in self.topology.legit_clients]
        return [(d.address, d.segment_id) for d in self.topology.devices]

    def _schedule_initial(self) -> None:
        eng = self.engine
        # seed bots: registered from the outset, scanning immediately
        for host in self.topology.seed_bots:
            entity = self._n_dev + host.id
            self._host_bot_state[entity] = BotState.Registered
            self.c2.register(entity)
            eng.schedule(0, EventKind.SCAN_STEP, entity)
        # pre-registered device bots: compromised before the window, with
        # their attack commands already in hand (standing orders)
        for seg_idx, seg_spec in enumerate(self.scenario.segments):
            members = self.topology.devices_in_segment[seg_idx]
            for dev in members[: seg_spec.pre_registered_bots]:
                self.c2.register(dev.id)
                self._standing_orders.add(dev.id)
                self.infection_times[dev.id] = 0
                self.metrics.record_infection(0)
                self.metrics.record_registration(0)
                eng.schedule(0, EventKind.SCAN_STEP, dev.id)
                for ci, cmd in enumerate(self.commands):
                    if cmd.start <= self.horizon_us:
                        eng.schedule(cmd.start, EventKind.ATTACK_EMIT, (dev.id, ci, 0))
        # command fan-out to everyone registered at dispatch time
        for ci, cmd in enumerate(self.commands):
            eng.schedule(
                max(0, cmd.start - DISPATCH_LEAD_US), EventKind.C2_DISPATCH, ("dispatch", ci)
            )
        # legitimate workload
        legit = self.scenario.legit
        if legit.rate_rps > 0 and self._legit_clients:
            start_us = int(round(legit.start_s * US_PER_S))
            if legit.duration_s is None:
                end_us = self.horizon_us
            else:
                end_us = min(self.horizon_us, start_us + int(round(legit.duration_s * US_PER_S)))
            self._legit_end_us = end_us
            first = start_us + self._legit_rng.exp_gap_us(legit.rate_rps)
            if first < end_us:
                eng.schedule(first, EventKind.LEGIT_GEN, None)
        # detector windows
        if self.policy.detector is not None:
            w = self.policy.detector.window_us
            if w <= self.horizon_us:
                eng.schedule(w, EventKind.DETECTOR_TICK, None)

    # ---- actor helpers ----

    def _bot_state(self, entity: int) -> BotState:
        dev = self._device_by_entity.get(entity)
        if dev is not None:
            return dev.bot_state
        return self._host_bot_state.get(entity, BotState.Clean)

    def _set_bot_state(self, entity: int, state: BotState) -> None:
        dev = self._device_by_entity.get(entity)
        if dev is not None:
            dev.bot_state = state
        else:
            self._host_bot_state[entity] = state

    def _actor_addr_seg(self, entity: int) -> tuple[int, Optional[int]]:
        dev = self._device_by_entity.get(entity)
        if dev is not None:
            return dev.address, dev.segment_id
        return self._host_by_entity[entity].address, None

    def _scan_rng(self, entity: int):
        rng = self._scan_rngs.get(entity)
        if rng is None:
            rng = self._scan_rngs[entity] = derive_stream(
                self.scenario.seed, PURPOSE_SCAN, entity
            )
        return rng

    def _spoof_rng(self, entity: int):
        rng = self._spoof_rngs.get(entity)
        if rng is None:
            rng = self._spoof_rngs[entity] = derive_stream(
                self.scenario.seed, PURPOSE_MISC, entity
            )
        return rng

    def _scan_pool(self, entity: int) -> list[int]:
        pool = self._scan_pools.get(entity)
        if pool is None:
            own_addr, _ = self._actor_addr_seg(entity)
            pool = [d.address for d in self.topology.devices if d.address != own_addr]
            pool.extend(h.address for h in self.topology.hosts if h.address != own_addr)
            self._scan_pools[entity] = pool
        return pool

    def _isolated_segment(self, seg_id: Optional[int], now: int) -> bool:
        if seg_id is None:
            return False
        seg = self.topology.segments[seg_id]
        return seg.isolated_until is not None and now < seg.isolated_until

    # ---- packet plumbing ----

    def _send(
        self,
        now: int,
        klass: PacketClass,
        src: int,
        dst: int,
        dst_port: int,
        size: int,
        count: int,
        origin_seg: Optional[int],
        spoofed: bool = False,
    ) -> Packet:
        self._flow_seq += 1
        pkt = Packet(
            src=src,
            dst=dst,
            dst_port=dst_port,
            size_bytes=size,
            klass=klass,
            spoofed_src=spoofed,
            flow_id=self._flow_seq,
            count=count,
            origin_segment=origin_seg,
        )
        self.metrics.record_generated(now, klass.value, count)
        decision = route(self.topology, origin_seg, dst)
        lat = self.topology.link_latency
        if decision is RouteDecision.Unroutable:
            self.metrics.record_never_routed(klass.value, count)
        elif decision is RouteDecision.DeliverIntraSegment:
            self.engine.schedule(now + lat, EventKind.PACKET_AT_DEVICE, (pkt, count, None))
        elif decision is RouteDecision.ExternalOnly:
            self.engine.schedule(now + lat, EventKind.PACKET_AT_HOST, (pkt, count, None))
        else:
            self.engine.schedule(now + lat, EventKind.PACKET_AT_GATEWAY, (pkt, decision))
        return pkt

    def _forward(self, pkt: Packet, count: int, gw_seg: Optional[int], now: int) -> None:
        """Gateway -> final hop for `count` admitted units."""
        lat = self.topology.link_latency
        if pkt.dst in self.topology.device_by_addr:
            self.engine.schedule(now + lat, EventKind.PACKET_AT_DEVICE, (pkt, count, gw_seg))
        elif pkt.dst in self.topology.host_by_addr:
            self.engine.schedule(now + lat, EventKind.PACKET_AT_HOST, (pkt, count, gw_seg))
        else:
            # egress toward address space nobody owns
            self.metrics.record_never_routed(pkt.klass.value, count)

    # ---- handlers: traffic sources ----

    def _on_scan_step(self, ev: Event) -> None:
        entity = ev.payload
        state = self._bot_state(entity)
        if state is not BotState.Registered and state is not BotState.Attacking:
            return
        now = self.engine.clock
        botnet = self.scenario.botnet
        self.engine.schedule(now + botnet.scan_interval_us, EventKind.SCAN_STEP, entity)
        addr, origin_seg = self._actor_addr_seg(entity)
        if self._isolated_segment(origin_seg, now):
            return
        if botnet.fan_out == 0:
            return
        rng = self._scan_rng(entity)
        pool = self._scan_pool(entity)
        hits: list[tuple[int, int]] = []
        misses: dict[int, list[int]] = {}  # port -> [first miss target, unit count]
        for _ in range(botnet.fan_out):
            probe = draw_probe(rng, pool, botnet.miss_ratio, botnet.scan_ports)
            if probe.miss:
                group = misses.get(probe.port)
                if group is None:
                    misses[probe.port] = [probe.target, 1]
                else:
                    group[1] += 1
            else:
                hits.append((probe.target, probe.port))
        for target, port in hits:
            self._send(
                now, PacketClass.SCAN_PROBE, addr, target, port, SCAN_PROBE_BYTES, 1, origin_seg
            )
        # misses all land in unallocated space; one batched packet per
        # port group is indistinguishable from singletons in every counter
        for port, (target, n) in misses.items():
            self._send(
                now, PacketClass.SCAN_PROBE, addr, target, port, SCAN_PROBE_BYTES, n, origin_seg
            )

    def _on_legit_gen(self, ev: Event) -> None:
        now = self.engine.clock
        legit = self.scenario.legit
        idx = self._legit_rng.next_below(len(self._legit_clients))
        src, origin_seg = self._legit_clients[idx]
        self._send(
            now,
            PacketClass.LEGIT_REQUEST,
            src,
            self.topology.victim_addr,
            80,
            legit.request_bytes,
            1,
            origin_seg,
        )
        nxt = now + self._legit_rng.exp_gap_us(legit.rate_rps)
        if nxt < self._legit_end_us:
            self.engine.schedule(nxt, EventKind.LEGIT_GEN, None)

    def _on_attack_emit(self, ev: Event) -> None:
        entity, ci, k = ev.payload
        cmd = self.commands[ci]
        now = self.engine.clock
        n_slots = max(1, -(-cmd.duration // cmd.burst_interval_us))
        total = cmd.rate_pps * cmd.duration // US_PER_S
        if k == 0 and self._bot_state(entity) is BotState.Registered:
            self._set_bot_state(entity, BotState.Attacking)
        units = slot_count(total, n_slots, k)
        if units > 0:
            wire_class, _default_size, spoofs = ATTACK_PROFILES[cmd.attack_class]
            addr, origin_seg = self._actor_addr_seg(entity)
            src = spoofed_source(self._spoof_rng(entity)) if spoofs else addr
            self._send(
                now,
                wire_class,
                src,
                cmd.target,
                80,
                cmd.packet_size_bytes,
                units,
                origin_seg,
                spoofed=spoofs,
            )
        if k + 1 < n_slots:
            self.engine.schedule(
                cmd.start + (k + 1) * cmd.burst_interval_us,
                EventKind.ATTACK_EMIT,
                (entity, ci, k + 1),
            )
        elif self._bot_state(entity) is BotState.Attacking:
            self._set_bot_state(entity, BotState.Registered)

    def _on_c2_dispatch(self, ev: Event) -> None:
        action, arg = ev.payload
        now = self.engine.clock
        botnet = self.scenario.botnet
        if action == "register":
            # infected device announces itself to the C2
            entity = arg
            dev = self._device_by_entity[entity]
            self._send(
                now,
                PacketClass.C2_CONTROL,
                dev.address,
                self.topology.c2.address,
                botnet.c2_port,
                C2_CONTROL_BYTES,
                1,
                dev.segment_id,
            )
            return
        ci = arg
        cmd = self.commands[ci]
        c2_addr = self.topology.c2.address
        for entity in self.c2.registered_bots:
            if entity in self._standing_orders:
                continue
            dev = self._device_by_entity.get(entity)
            if dev is None:
                if not cmd.include_seed_bots:
                    continue
                dst = self._host_by_entity[entity].address
            else:
                dst = dev.address
            pkt = self._send(
                now, PacketClass.C2_CONTROL, c2_addr, dst, botnet.c2_port, C2_CONTROL_BYTES, 1, None
            )
            self._dispatch_flow[pkt.flow_id] = ci

    def _on_detector_tick(self, ev: Event) -> None:
        now = self.engine.clock
        for iso in self.policy.close_window(now):
            self.metrics.record_isolation(iso.segment_id, iso.at, iso.until)
        nxt = now + self.policy.detector.window_us
        if nxt <= self.horizon_us:
            self.engine.schedule(nxt, EventKind.DETECTOR_TICK, None)

    # ---- handlers: gateway and delivery ----

    def _on_packet_at_gateway(self, ev: Event) -> None:
        pkt, decision = ev.payload
        now = self.engine.clock
        dst_seg = self.topology.segment_of(pkt.dst)
        attributed = self.policy.attributed_segment(pkt, dst_seg)
        self.policy.note_offered(attributed, pkt.count)
        out = self.policy.evaluate(pkt, decision, dst_seg, now)
        if out.drops:
            record = self.metrics.record_gw_drop
            name = pkt.klass.value
            for reason, n in out.drops:
                record(now, name, reason.name, n)
        if out.conn_opened:
            self.engine.schedule(
                now + out.conn_release_us, EventKind.GW_CONN_RELEASE, (attributed, out.conn_opened)
            )
        if not out.admitted:
            return
        shaper = self.policy.shaper_for(attributed)
        if shaper is None:
            self._forward(pkt, out.admitted, attributed, now)
            return
        accepted, dropped = shaper.enqueue(pkt, out.admitted, now)
        if dropped:
            self.policy.drop_counts[DropReason.ShapeDrop] += dropped
            self.metrics.record_gw_drop(now, pkt.klass.value, "ShapeDrop", dropped)
        if accepted and not shaper.busy:
            shaper.busy = True
            self.engine.schedule(shaper.next_depart(now), EventKind.SHAPER_DEPART, attributed)

    def _on_shaper_depart(self, ev: Event) -> None:
        attributed = ev.payload
        shaper = self.policy.shapers[attributed]
        now = self.engine.clock
        pkt, delay = shaper.depart_one(now)
        self.metrics.record_shape_delay(delay, 1)
        self._forward(pkt, 1, attributed, now)
        if shaper.occupancy > 0:
            self.engine.schedule(shaper.next_depart(now), EventKind.SHAPER_DEPART, attributed)
        else:
            shaper.busy = False

    def _gw_cut(self, pkt: Packet, count: int, gw_seg: Optional[int], now: int) -> bool:
        """In-flight loss across a severed gateway link: a packet whose
        attributed segment became isolated before final delivery is
        discarded, so no delivery is ever attributable to an isolated
        segment inside its isolation interval."""
        if gw_seg is None or not self._isolated_segment(gw_seg, now):
            return False
        self.policy.drop_counts[DropReason.IsolatedSegment] += count
        self.metrics.record_gw_drop(now, pkt.klass.value, "IsolatedSegment", count)
        return True

    def _on_packet_at_device(self, ev: Event) -> None:
        pkt, count, gw_seg = ev.payload
        now = self.engine.clock
        dev = self.topology.device_by_addr.get(pkt.dst)
        if dev is None:
            self.metrics.record_never_routed(pkt.klass.value, count)
            return
        if self._gw_cut(pkt, count, gw_seg, now):
            return
        if self.topology.victim_device is dev:
            self._victim_arrival(pkt, count, gw_seg, now)
            return
        name = pkt.klass.value
        self.metrics.record_delivered(now, name, count)
        if gw_seg is not None:
            self.metrics.record_gw_delivered(now, gw_seg, count)
        if pkt.origin_segment is None:
            self.metrics.ingress_delivered += count
        klass = pkt.klass
        if klass is PacketClass.SCAN_PROBE:
            if attempt_infection(dev) is InfectionOutcome.Infected:
                self.infection_times[dev.id] = now
                self.metrics.record_infection(now)
                self.engine.schedule(
                    now + self.scenario.botnet.handshake_delay_us,
                    EventKind.C2_DISPATCH,
                    ("register", dev.id),
                )
        elif klass is PacketClass.C2_CONTROL:
            self._command_received(pkt, dev.id, now)

    def _on_packet_at_host(self, ev: Event) -> None:
        pkt, count, gw_seg = ev.payload
        now = self.engine.clock
        host = self.topology.host_by_addr.get(pkt.dst)
        if host is None:
            self.metrics.record_never_routed(pkt.klass.value, count)
            return
        if self._gw_cut(pkt, count, gw_seg, now):
            return
        if self.topology.victim_host is host:
            self._victim_arrival(pkt, count, gw_seg, now)
            return
        name = pkt.klass.value
        self.metrics.record_delivered(now, name, count)
        if gw_seg is not None:
            self.metrics.record_gw_delivered(now, gw_seg, count)
        if pkt.klass is PacketClass.C2_CONTROL:
            if host is self.topology.c2:
                self._registration_received(pkt, now)
            else:
                self._command_received(pkt, self._n_dev + host.id, now)

    def _registration_received(self, pkt: Packet, now: int) -> None:
        dev = self.topology.device_by_addr.get(pkt.src)
        if dev is None or dev.bot_state is not BotState.Infected:
            return
        if self.c2.register(dev.id):
            dev.bot_state = BotState.Registered
            self.metrics.record_registration(now)
            self.engine.schedule(now, EventKind.SCAN_STEP, dev.id)

    def _command_received(self, pkt: Packet, entity: int, now: int) -> None:
        ci = self._dispatch_flow.pop(pkt.flow_id, None)
        if ci is None:
            return
        cmd = self.commands[ci]
        if now > cmd.start:
            return  # command arrived after its own start; expired
        self.engine.schedule(cmd.start, EventKind.ATTACK_EMIT, (entity, ci, 0))

    # ---- handlers: victim ----

    def _victim_arrival(self, pkt: Packet, count: int, gw_seg: Optional[int], now: int) -> None:
        name = pkt.klass.value
        metrics = self.metrics
        if pkt.klass is PacketClass.LEGIT_REQUEST:
            metrics.record_legit_arrival(now, count)
        res = self.victim.arrival(now, pkt, count)
        if res.link_dropped:
            metrics.record_victim_drop(name, "link", res.link_dropped)
        if res.queue_dropped:
            metrics.record_victim_drop(name, "queue", res.queue_dropped)
        if res.slot_dropped:
            metrics.record_victim_drop(name, "slots", res.slot_dropped)
        if res.accepted:
            metrics.record_delivered(now, name, res.accepted)
            metrics.record_victim_delivered(name, res.accepted)
            if gw_seg is not None:
                metrics.record_gw_delivered(now, gw_seg, res.accepted)
            if pkt.origin_segment is None and self.topology.victim_device is not None:
                metrics.ingress_delivered += res.accepted
        if res.syn_slots:
            self.engine.schedule(
                now + self.victim.syn_hold_us, EventKind.SYN_RELEASE, res.syn_slots
            )
        if res.enqueued and not self.victim.serving:
            self.victim.serving = True
            self.engine.schedule(self.victim.next_serve_at(now), EventKind.VICTIM_SERVE, None)

    def _on_victim_serve(self, ev: Event) -> None:
        now = self.engine.clock
        entry = self.victim.serve_one(now)
        if entry is None:
            self.victim.serving = False
            return
        self.metrics.record_victim_served(now, entry.klass.value, 1)
        if entry.klass is PacketClass.LEGIT_REQUEST:
            victim_seg = (
                self.topology.victim_device.segment_id
                if self.topology.victim_device is not None
                else None
            )
            self._send(
                now,
                PacketClass.LEGIT_RESPONSE,
                self.topology.victim_addr,
                entry.src,
                0,
                self.scenario.legit.response_bytes,
                1,
                victim_seg,
            )
        if self.victim.queued_units > 0:
            self.engine.schedule(self.victim.next_serve_at(now), EventKind.VICTIM_SERVE, None)
        else:
            self.victim.serving = False

    def _on_syn_release(self, ev: Event) -> None:
        self.victim.release_syn(ev.payload)

    def _on_gw_conn_release(self, ev: Event) -> None:
        seg_id, count = ev.payload
        self.policy.release_conns(seg_id, count)

    # ---- run ----

    def run(self) -> None:
        self.engine.run(self.horizon_us)
        self.engine.drain_in_flight()


def run_scenario(scenario: ScenarioDoc, out_dir: Optional[str | Path] = None) -> RunResult:
    """Run one scenario to completion; optionally write the report files."""
    sim = Simulation(scenario)
    sim.run()
    check_conservation(sim.metrics)
    summary = summarize(sim.metrics)
    paths = None
    if out_dir is not None:
        paths = emit(summary, sim.metrics, out_dir)
    return RunResult(summary, sim.metrics, paths)


_DELTA_FIELDS = ("victim_availability", "legit_drop_rate", "attack_delivery_rate")


def compare_scenarios(scenario: ScenarioDoc, out_dir: str | Path) -> tuple[RunResult, RunResult]:
    """Defense-off baseline vs the configured posture, same seed.

    Writes <out>/off/, <out>/on/, and <out>/compare.json with both
    summaries plus on-minus-off deltas for every summary ratio.
    """
    out = Path(out_dir)
    off = run_scenario(scenario.defense_off(), out / "off")
    on = run_scenario(scenario, out / "on")
    deltas = {
        f: float(f"{getattr(on.summary, f) - getattr(off.summary, f):.6f}")
        for f in _DELTA_FIELDS
    }
    doc = {
        "off": _summary_dict(off.summary),
        "on": _summary_dict(on.summary),
        "deltas": deltas,
    }
    (out / "compare.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return off, on


def _summary_dict(s: RunSummary) -> dict:
    return {
        "victim_availability": s.victim_availability,
        "legit_drop_rate": s.legit_drop_rate,
        "attack_delivery_rate": s.attack_delivery_rate,
        "peak_infected": s.peak_infected,
        "isolation_events": s.isolation_events,
        "total_isolated_time_s": s.total_isolated_time_s,
        "mean_shaping_delay_us": s.mean_shaping_delay_us,
        "max_shaping_delay_us": s.max_shaping_delay_us,
    }


def _parse_net(prefix: Optional[str]) -> Optional[tuple[int, int]]:
    if prefix is None:
        return None
    addr_part, _, len_part = prefix.partition("/")
    return parse_address(addr_part), int(len_part)
