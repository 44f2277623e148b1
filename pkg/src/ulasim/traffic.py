"""Packet model and the victim service.

A Packet may stand for several identical wire packets via its `count`
field (an emission slot's worth of attack traffic, or one scan step's
missed probes). All downstream accounting is count-aware, so a batched
packet is indistinguishable from `count` singletons in every counter.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .kernel import US_PER_S, SimTime

MIN_PACKET_BYTES = 40


class PacketClass(Enum):
    LEGIT_REQUEST = "legit_request"
    LEGIT_RESPONSE = "legit_response"
    SCAN_PROBE = "scan_probe"
    C2_CONTROL = "c2_control"
    ATTACK_VOLUMETRIC = "attack_volumetric"
    ATTACK_SYN = "attack_syn"
    ATTACK_HTTP = "attack_http"


PACKET_CLASS_NAMES = tuple(pc.value for pc in PacketClass)

# wire sizes, bytes
VOLUMETRIC_BYTES = 1400
SYN_BYTES = 60
HTTP_BYTES = 300
SCAN_PROBE_BYTES = 60
C2_CONTROL_BYTES = 100
LEGIT_REQUEST_BYTES = 200
LEGIT_RESPONSE_BYTES = 500

SCAN_PORTS = (23, 2323)


@dataclass(slots=True)
class Packet:
    src: int
    dst: int
    dst_port: int
    size_bytes: int
    klass: PacketClass
    spoofed_src: bool
    flow_id: int
    count: int = 1
    origin_segment: Optional[int] = None  # None: emitted by an external host

    def __post_init__(self) -> None:
        if self.size_bytes < MIN_PACKET_BYTES:
            raise ValueError(f"packet below minimum size: {self.size_bytes}")
        if self.count < 1:
            raise ValueError("packet count must be >= 1")


def slot_count(total: int, slots: int, k: int) -> int:
    """Units emitted in slot k of an emission window split evenly into
    `slots` slots; the per-slot counts always sum to `total`."""
    return total * (k + 1) // slots - total * k // slots


@dataclass(frozen=True, slots=True)
class VictimArrival:
    """Outcome of one packet (flowlet) arriving at the victim.

    accepted: units the victim took (delivered, network-wise)
    enqueued: of those, units placed on the service queue
    syn_slots: of those, units occupying half-open connection slots
    link_dropped / queue_dropped / slot_dropped: rejected units by cause
    """

    accepted: int
    enqueued: int
    syn_slots: int
    link_dropped: int
    queue_dropped: int
    slot_dropped: int


@dataclass(slots=True)
class _QueueEntry:
    klass: PacketClass
    units: int
    src: int
    dst_port: int
    flow_id: int


class VictimService:
    """The attacked service: an inbound link budget, a half-open
    connection table, and a FIFO request queue served at a fixed rate.

    Arrival handling per unit, in order:
      1. link budget: a tumbling 1 s byte window; all classes consume it
         (0 = unmetered), excess dropped in arrival order;
      2. AttackSyn: occupy a connection slot for syn_hold or drop;
         LegitRequest: requires a free slot (not consumed) plus queue
         space; AttackHttp: requires queue space;
      3. anything else (probes etc.) is accepted outright.

    The caller owns time: it schedules serve ticks at `next_serve_at`
    gaps and slot releases at +syn_hold_us.
    """

    def __init__(
        self,
        capacity_rps: int,
        queue_cap: int,
        conn_table: int,
        inbound_bps: int,
        syn_hold_us: int,
    ):
        self.capacity_rps = capacity_rps
        self.queue_cap = queue_cap
        self.conn_table = conn_table
        self.inbound_bps = inbound_bps
        self.syn_hold_us = syn_hold_us

        self.serve_gap_us = (US_PER_S + capacity_rps - 1) // capacity_rps if capacity_rps else 0
        self.queue: deque[_QueueEntry] = deque()
        self.queued_units = 0
        self.conn_used = 0
        self.last_serve: SimTime = -self.serve_gap_us
        self.serving = False  # a serve tick is scheduled

        self._window_idx = -1
        self._window_bits = 0

    # -- link budget --

    def _link_admit(self, now: SimTime, size_bytes: int, count: int) -> int:
        if self.inbound_bps <= 0:
            return count
        idx = now // US_PER_S
        if idx != self._window_idx:
            self._window_idx = idx
            self._window_bits = 0
        unit_bits = size_bytes * 8
        room = self.inbound_bps - self._window_bits
        admit = min(count, room // unit_bits if unit_bits else count)
        if admit < 0:
            admit = 0
        self._window_bits += admit * unit_bits
        return admit

    # -- arrival --

    def arrival(self, now: SimTime, pkt: Packet, count: Optional[int] = None) -> VictimArrival:
        n = pkt.count if count is None else count
        admitted = self._link_admit(now, pkt.size_bytes, n)
        link_dropped = n - admitted
        enqueued = 0
        syn_slots = 0
        queue_dropped = 0
        slot_dropped = 0

        if admitted:
            k = pkt.klass
            if k is PacketClass.ATTACK_SYN:
                free = self.conn_table - self.conn_used
                syn_slots = min(admitted, max(0, free))
                self.conn_used += syn_slots
                slot_dropped = admitted - syn_slots
                admitted = syn_slots
            elif k is PacketClass.LEGIT_REQUEST or k is PacketClass.ATTACK_HTTP:
                want = admitted
                if k is PacketClass.LEGIT_REQUEST and self.conn_used >= self.conn_table:
                    slot_dropped = want
                    want = 0
                room = self.queue_cap - self.queued_units
                enqueued = min(want, max(0, room))
                queue_dropped = want - enqueued
                admitted = enqueued
                if enqueued:
                    self.queue.append(
                        _QueueEntry(k, enqueued, pkt.src, pkt.dst_port, pkt.flow_id)
                    )
                    self.queued_units += enqueued
            # other classes: accepted, nothing held

        return VictimArrival(
            accepted=admitted,
            enqueued=enqueued,
            syn_slots=syn_slots,
            link_dropped=link_dropped,
            queue_dropped=queue_dropped,
            slot_dropped=slot_dropped,
        )

    def release_syn(self, count: int) -> None:
        self.conn_used -= count
        if self.conn_used < 0:
            raise AssertionError("connection table underflow")

    # -- service --

    def next_serve_at(self, now: SimTime) -> SimTime:
        return max(now, self.last_serve + self.serve_gap_us)

    def serve_one(self, now: SimTime) -> Optional[_QueueEntry]:
        """Serve one queued unit FIFO; returns its queue entry (units
        field set to 1) or None if the queue is empty."""
        if not self.queue:
            return None
        head = self.queue[0]
        head.units -= 1
        self.queued_units -= 1
        served = _QueueEntry(head.klass, 1, head.src, head.dst_port, head.flow_id)
        if head.units == 0:
            self.queue.popleft()
        self.last_serve = now
        return served
