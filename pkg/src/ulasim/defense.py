"""Gateway defense pipeline: scope filters, ACL, thresholds, rate
limiting, shaping, and the baseline anomaly detector.

Every gateway-traversing packet is evaluated in a fixed stage order:

    isolation check -> ingress/egress scope filter -> ACL
    -> threshold guard -> token bucket -> shaper

and every dropped unit carries exactly one DropReason. Stages are
count-aware: a flowlet may be split, with some units admitted and the
rest dropped by whichever stage ran out of room.

All stage arithmetic is integer-exact. The token bucket holds
micro-tokens (1 token = 1_000_000 utok), so a refill of rate_pps over
elapsed microseconds is exact; thresholds count admitted units and bits
per tumbling 1 s window; shaper and detector work on integer
microseconds throughout.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum, auto
from typing import Optional

from .kernel import US_PER_S, SimTime
from .topology import RouteDecision, Segment, Topology
from .traffic import Packet, PacketClass

UTOK_PER_TOKEN = 1_000_000

# Classes that count against a segment's live-connection threshold, and
# how long one such flow stays open at the gateway's accounting.
CONN_OPENING_CLASSES = frozenset(
    {PacketClass.ATTACK_SYN, PacketClass.LEGIT_REQUEST, PacketClass.ATTACK_HTTP}
)
REQUEST_CONN_HOLD_US = 1_000_000


class DropReason(Enum):
    IsolatedSegment = auto()
    UlaUnreachable = auto()
    SpoofedSource = auto()
    AclDeny = auto()
    ThresholdConn = auto()
    ThresholdPps = auto()
    ThresholdBw = auto()
    RateLimit = auto()
    ShapeDrop = auto()


DROP_REASON_NAMES = tuple(r.name for r in DropReason)


class AclAction(Enum):
    Allow = auto()
    Deny = auto()


@dataclass(frozen=True, slots=True)
class AclRule:
    """First-match rule; an absent matcher matches everything."""

    action: AclAction
    src_net: Optional[tuple[int, int]] = None  # (network address, prefix length)
    dst_net: Optional[tuple[int, int]] = None
    dst_port: Optional[int] = None
    classes: Optional[frozenset[PacketClass]] = None

    def matches(self, pkt: Packet) -> bool:
        if self.src_net is not None and not _in_net(pkt.src, self.src_net):
            return False
        if self.dst_net is not None and not _in_net(pkt.dst, self.dst_net):
            return False
        if self.dst_port is not None and pkt.dst_port != self.dst_port:
            return False
        if self.classes is not None and pkt.klass not in self.classes:
            return False
        return True


def _in_net(addr: int, net: tuple[int, int]) -> bool:
    network, plen = net
    if plen == 0:
        return True
    shift = 128 - plen
    return (addr >> shift) == (network >> shift)


def acl_eval(rules: tuple[AclRule, ...], pkt: Packet) -> AclAction:
    """Pure first-match evaluation with an implicit trailing Allow."""
    for rule in rules:
        if rule.matches(pkt):
            return rule.action
    return AclAction.Allow


class TokenBucket:
    """Integer micro-token bucket: starts full, refills at rate_pps,
    capped at burst tokens; each admitted unit costs one token."""

    __slots__ = ("rate_pps", "burst", "level_utok", "last_refill")

    def __init__(self, rate_pps: int, burst: int):
        self.rate_pps = rate_pps
        self.burst = burst
        self.level_utok = burst * UTOK_PER_TOKEN
        self.last_refill: SimTime = 0

    def admit(self, now: SimTime, count: int) -> int:
        """Units admitted out of `count` arriving at `now`."""
        elapsed = now - self.last_refill
        if elapsed > 0:
            cap = self.burst * UTOK_PER_TOKEN
            self.level_utok = min(cap, self.level_utok + self.rate_pps * elapsed)
            self.last_refill = now
        admitted = min(count, self.level_utok // UTOK_PER_TOKEN)
        self.level_utok -= admitted * UTOK_PER_TOKEN
        return admitted


@dataclass(slots=True)
class _ShaperEntry:
    pkt: Packet
    units: int
    enqueued_at: SimTime


class Shaper:
    """FIFO leaky bucket: departures at least gap_us apart, one unit per
    departure; a unit arriving to an idle shaper departs immediately.
    The caller schedules departure events at the times this class
    hands out."""

    __slots__ = ("drain_rate_pps", "queue_cap", "gap_us", "queue", "occupancy", "last_depart", "busy")

    def __init__(self, drain_rate_pps: int, queue_cap: int):
        self.drain_rate_pps = drain_rate_pps
        self.queue_cap = queue_cap
        # ceil so no 1 s window can ever hold more than drain_rate departures
        self.gap_us = (US_PER_S + drain_rate_pps - 1) // drain_rate_pps
        self.queue: deque[_ShaperEntry] = deque()
        self.occupancy = 0
        self.last_depart: SimTime = -self.gap_us
        self.busy = False  # a departure event is outstanding

    def enqueue(self, pkt: Packet, count: int, now: SimTime) -> tuple[int, int]:
        """Returns (accepted, dropped); caller must then consult
        next_depart/busy to keep the departure chain alive."""
        room = self.queue_cap - self.occupancy
        accepted = min(count, max(0, room))
        if accepted:
            self.queue.append(_ShaperEntry(pkt, accepted, now))
            self.occupancy += accepted
        return accepted, count - accepted

    def next_depart(self, now: SimTime) -> SimTime:
        return max(now, self.last_depart + self.gap_us)

    def depart_one(self, now: SimTime) -> tuple[Packet, int]:
        """Release the FIFO head unit; returns (packet, queuing delay)."""
        head = self.queue[0]
        head.units -= 1
        self.occupancy -= 1
        if head.units == 0:
            self.queue.popleft()
        self.last_depart = now
        return head.pkt, now - head.enqueued_at


class _ThresholdState:
    """Per-segment tumbling window counters plus live connection count."""

    __slots__ = ("max_conns", "max_pps", "max_bw_bps", "window_idx", "window_pps", "window_bits", "live_conns")

    def __init__(self, max_conns: int, max_pps: int, max_bw_bps: int):
        self.max_conns = max_conns
        self.max_pps = max_pps
        self.max_bw_bps = max_bw_bps
        self.window_idx = -1
        self.window_pps = 0
        self.window_bits = 0
        self.live_conns = 0

    def unlimited(self) -> bool:
        return self.max_conns == 0 and self.max_pps == 0 and self.max_bw_bps == 0


@dataclass(frozen=True, slots=True)
class IsolationEvent:
    segment_id: int
    at: SimTime
    until: SimTime


class AnomalyDetector:
    """Per-segment pps baseline learned over the first learn_windows
    windows (arithmetic mean); armed thereafter. A window whose offered
    pps exceeds k x baseline isolates the segment for
    isolation_duration (extending any isolation already in force)."""

    def __init__(self, window_us: int, learn_windows: int, k: float, isolation_duration_us: int):
        self.window_us = window_us
        self.learn_windows = learn_windows
        self.k = k
        self.isolation_duration_us = isolation_duration_us
        self._windows_seen: dict[int, int] = {}
        self._learn_sum: dict[int, int] = {}

    def baseline_pps(self, segment_id: int) -> float:
        seen = min(self._windows_seen.get(segment_id, 0), self.learn_windows)
        if seen == 0:
            return 0.0
        return self._learn_sum.get(segment_id, 0) / seen

    def armed(self, segment_id: int) -> bool:
        return self._windows_seen.get(segment_id, 0) >= self.learn_windows

    def step(self, segment_id: int, window_count: int, now: SimTime) -> Optional[IsolationEvent]:
        """Called at a window close with the offered packet count the
        gateway attributed to the segment during that window."""
        seen = self._windows_seen.get(segment_id, 0)
        self._windows_seen[segment_id] = seen + 1
        if seen < self.learn_windows:
            self._learn_sum[segment_id] = self._learn_sum.get(segment_id, 0) + window_count
            return None
        # trigger on window_count > k * (learn_sum / learn_windows),
        # compared multiplied-out so integer counts stay exact
        if window_count * self.learn_windows > self.k * self._learn_sum.get(segment_id, 0):
            return IsolationEvent(segment_id, now, now + self.isolation_duration_us)
        return None


@dataclass(frozen=True, slots=True)
class EvalOutcome:
    """Verdict for one flowlet across the pre-shaper stages.

    admitted: units that survived every stage up to (not including) the
    shaper; drops: (reason, units) pairs, at most one per stage;
    conn_opened/conn_release_us: live-connection slots taken at the
    gateway and when the caller must release them.
    """

    admitted: int
    drops: tuple[tuple[DropReason, int], ...]
    conn_opened: int = 0
    conn_release_us: int = 0


class GatewayPolicy:
    """All defense state for one gateway, plus the offered-traffic
    window counts the detector consumes.

    Built disabled by default: no filters, no rules, no per-segment
    stages, no detector. A policy with everything disabled admits every
    packet untouched (the defense-off arm).
    """

    def __init__(
        self,
        topology: Topology,
        *,
        ingress_on: bool = False,
        egress_on: bool = False,
        acl: tuple[AclRule, ...] = (),
        allowed_egress: frozenset[PacketClass] = frozenset(
            {PacketClass.LEGIT_REQUEST, PacketClass.LEGIT_RESPONSE}
        ),
        detector: Optional[AnomalyDetector] = None,
        syn_hold_us: int = 5_000_000,
    ):
        self.topology = topology
        self.ingress_on = ingress_on
        self.egress_on = egress_on
        self.acl = acl
        self.allowed_egress = allowed_egress
        self.detector = detector
        self.syn_hold_us = syn_hold_us
        self.buckets: dict[int, TokenBucket] = {}
        self.shapers: dict[int, Shaper] = {}
        self.thresholds: dict[int, _ThresholdState] = {}
        self.drop_counts: dict[DropReason, int] = {r: 0 for r in DropReason}
        self.window_counts: dict[int, int] = {}

    # -- configuration --

    def set_bucket(self, segment_id: int, rate_pps: int, burst: int) -> None:
        self.buckets[segment_id] = TokenBucket(rate_pps, burst)

    def set_shaper(self, segment_id: int, drain_rate_pps: int, queue_cap: int) -> None:
        self.shapers[segment_id] = Shaper(drain_rate_pps, queue_cap)

    def set_thresholds(self, segment_id: int, max_conns: int, max_pps: int, max_bw_bps: int) -> None:
        self.thresholds[segment_id] = _ThresholdState(max_conns, max_pps, max_bw_bps)

    # -- observation --

    def attributed_segment(self, pkt: Packet, dst_seg: Optional[Segment]) -> Optional[int]:
        """Which segment's budget and detector window this packet
        belongs to: the origin segment for internally emitted traffic,
        the destination segment for inbound traffic."""
        if pkt.origin_segment is not None:
            return pkt.origin_segment
        return dst_seg.id if dst_seg is not None else None

    def note_offered(self, segment_id: Optional[int], count: int) -> None:
        if segment_id is None or self.detector is None:
            return
        self.window_counts[segment_id] = self.window_counts.get(segment_id, 0) + count

    def close_window(self, now: SimTime) -> list[IsolationEvent]:
        """Detector step for every segment at a window boundary."""
        if self.detector is None:
            return []
        events = []
        for seg in self.topology.segments:
            count = self.window_counts.get(seg.id, 0)
            ev = self.detector.step(seg.id, count, now)
            if ev is not None:
                until = ev.until
                if seg.isolated_until is not None and seg.isolated_until > until:
                    until = seg.isolated_until
                seg.isolated_until = until
                events.append(IsolationEvent(seg.id, ev.at, until))
        self.window_counts.clear()
        return events

    # -- pipeline --

    def _isolated(self, seg: Optional[Segment], now: SimTime) -> bool:
        return seg is not None and seg.isolated_until is not None and now < seg.isolated_until

    def evaluate(
        self,
        pkt: Packet,
        route: RouteDecision,
        dst_seg: Optional[Segment],
        now: SimTime,
    ) -> EvalOutcome:
        """Run one gateway-traversing flowlet through every stage before
        the shaper. The caller hands survivors to the attributed
        segment's shaper (if any) and schedules connection releases."""
        n = pkt.count
        drops: list[tuple[DropReason, int]] = []
        origin_seg = (
            self.topology.segments[pkt.origin_segment] if pkt.origin_segment is not None else None
        )

        # 1. isolation: traffic from or to an isolated segment
        if self._isolated(origin_seg, now) or self._isolated(dst_seg, now):
            self.drop_counts[DropReason.IsolatedSegment] += n
            return EvalOutcome(0, ((DropReason.IsolatedSegment, n),))

        # 2. scope filters (inter-segment traffic skips both)
        if route is RouteDecision.ViaGatewayIngress and self.ingress_on:
            reason = None
            if pkt.src >> 121 == 0x7E:  # ULA source claimed from the Global side
                reason = DropReason.SpoofedSource
            else:
                # ingress always targets a ULA destination; unreachable from outside
                reason = DropReason.UlaUnreachable
            self.drop_counts[reason] += n
            return EvalOutcome(0, ((reason, n),))
        if route is RouteDecision.ViaGatewayEgress and self.egress_on:
            assert origin_seg is not None
            if not _in_net(pkt.src, (origin_seg.prefix.network, 64)):
                self.drop_counts[DropReason.SpoofedSource] += n
                return EvalOutcome(0, ((DropReason.SpoofedSource, n),))
            if pkt.klass not in self.allowed_egress:
                self.drop_counts[DropReason.UlaUnreachable] += n
                return EvalOutcome(0, ((DropReason.UlaUnreachable, n),))

        # 3. ACL
        if self.acl and acl_eval(self.acl, pkt) is AclAction.Deny:
            self.drop_counts[DropReason.AclDeny] += n
            return EvalOutcome(0, ((DropReason.AclDeny, n),))

        attributed = self.attributed_segment(pkt, dst_seg)
        survivors = n
        conn_opened = 0
        conn_release = 0

        # 4. thresholds: conn -> pps -> bw, each possibly partial
        th = self.thresholds.get(attributed) if attributed is not None else None
        if th is not None and not th.unlimited():
            idx = now // US_PER_S
            if idx != th.window_idx:
                th.window_idx = idx
                th.window_pps = 0
                th.window_bits = 0
            if th.max_conns and pkt.klass in CONN_OPENING_CLASSES:
                room = th.max_conns - th.live_conns
                keep = min(survivors, max(0, room))
                if keep < survivors:
                    dropped = survivors - keep
                    drops.append((DropReason.ThresholdConn, dropped))
                    self.drop_counts[DropReason.ThresholdConn] += dropped
                survivors = keep
            if survivors and th.max_pps:
                room = th.max_pps - th.window_pps
                keep = min(survivors, max(0, room))
                if keep < survivors:
                    dropped = survivors - keep
                    drops.append((DropReason.ThresholdPps, dropped))
                    self.drop_counts[DropReason.ThresholdPps] += dropped
                survivors = keep
            if survivors and th.max_bw_bps:
                unit_bits = pkt.size_bytes * 8
                room_bits = th.max_bw_bps - th.window_bits
                keep = min(survivors, max(0, room_bits) // unit_bits)
                if keep < survivors:
                    dropped = survivors - keep
                    drops.append((DropReason.ThresholdBw, dropped))
                    self.drop_counts[DropReason.ThresholdBw] += dropped
                survivors = keep
            if survivors:
                th.window_pps += survivors
                th.window_bits += survivors * pkt.size_bytes * 8
                if th.max_conns and pkt.klass in CONN_OPENING_CLASSES:
                    th.live_conns += survivors
                    conn_opened = survivors
                    conn_release = (
                        self.syn_hold_us
                        if pkt.klass is PacketClass.ATTACK_SYN
                        else REQUEST_CONN_HOLD_US
                    )

        # 5. token bucket
        bucket = self.buckets.get(attributed) if attributed is not None else None
        if survivors and bucket is not None:
            admitted = bucket.admit(now, survivors)
            if admitted < survivors:
                dropped = survivors - admitted
                drops.append((DropReason.RateLimit, dropped))
                self.drop_counts[DropReason.RateLimit] += dropped
            survivors = admitted

        return EvalOutcome(survivors, tuple(drops), conn_opened, conn_release)

    def release_conns(self, segment_id: int, count: int) -> None:
        th = self.thresholds.get(segment_id)
        if th is not None:
            th.live_conns -= count
            if th.live_conns < 0:
                raise AssertionError("gateway connection count underflow")

    def shaper_for(self, segment_id: Optional[int]) -> Optional[Shaper]:
        if segment_id is None:
            return None
        return self.shapers.get(segment_id)
