"""Discrete-event core: virtual clock, event queue, dispatch loop.

Time is a plain int of microseconds since run start. The engine is
single-threaded and processes events strictly in (fire_at, seq) order,
where seq is the scheduling sequence number; ties on fire_at therefore
resolve in scheduling order, which is what makes replays exact.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Any, Callable, Optional

SimTime = int  # whole microseconds

US_PER_S = 1_000_000

# Horizon arithmetic must stay inside u64-comparable range.
MAX_SIM_TIME = 2**63 - 1


class SchedulingInPast(Exception):
    """Raised when an event is scheduled before the current clock."""


class EventKind(Enum):
    # Source kinds create new traffic or advance generators. They are
    # discarded during the post-horizon drain so the run can settle.
    SCAN_STEP = auto()
    LEGIT_GEN = auto()
    ATTACK_EMIT = auto()
    C2_DISPATCH = auto()
    DETECTOR_TICK = auto()

    # Drain kinds move already-created packets toward a final outcome and
    # keep running until the queue is empty.
    PACKET_AT_GATEWAY = auto()
    PACKET_AT_DEVICE = auto()
    PACKET_AT_HOST = auto()
    SHAPER_DEPART = auto()
    VICTIM_SERVE = auto()
    SYN_RELEASE = auto()
    GW_CONN_RELEASE = auto()


SOURCE_KINDS = frozenset(
    {
        EventKind.SCAN_STEP,
        EventKind.LEGIT_GEN,
        EventKind.ATTACK_EMIT,
        EventKind.C2_DISPATCH,
        EventKind.DETECTOR_TICK,
    }
)


@dataclass(slots=True)
class Event:
    """One scheduled occurrence.

    Attributes:
        fire_at: virtual time the event fires, us.
        seq: scheduling sequence number, assigned by the engine.
        kind: dispatch key.
        payload: handler-specific data; the engine never looks inside.
    """

    fire_at: SimTime
    seq: int
    kind: EventKind
    payload: Any = None


@dataclass(slots=True)
class RunOutcome:
    processed: int
    clock: SimTime


Handler = Callable[[Event], None]


class Engine:
    """Event queue plus dispatch table.

    Every other part of the simulator schedules work through this object;
    nothing else keeps its own notion of time.
    """

    def __init__(self) -> None:
        self.clock: SimTime = 0
        self._heap: list[tuple[SimTime, int, Event]] = []
        self._next_seq = 0
        self._handlers: dict[EventKind, Handler] = {}

    def on(self, kind: EventKind, handler: Handler) -> None:
        self._handlers[kind] = handler

    def schedule(self, fire_at: SimTime, kind: EventKind, payload: Any = None) -> Event:
        if fire_at < self.clock:
            raise SchedulingInPast(
                f"cannot schedule {kind.name} at {fire_at} (clock={self.clock})"
            )
        if fire_at > MAX_SIM_TIME:
            raise ValueError(f"fire_at {fire_at} beyond supported horizon")
        ev = Event(fire_at, self._next_seq, kind, payload)
        self._next_seq += 1
        heapq.heappush(self._heap, (fire_at, ev.seq, ev))
        return ev

    def run(self, until: SimTime) -> RunOutcome:
        """Process events with fire_at <= until, in (fire_at, seq) order.

        The clock is left at `until` on return even if the queue emptied
        earlier, so back-to-back run calls see consistent time.
        """
        processed = 0
        heap = self._heap
        handlers = self._handlers
        while heap and heap[0][0] <= until:
            fire_at, _seq, ev = heapq.heappop(heap)
            self.clock = fire_at
            handlers[ev.kind](ev)
            processed += 1
        self.clock = until
        return RunOutcome(processed, self.clock)

    def drain_in_flight(self) -> int:
        """Run the queue dry, executing only drain-kind events.

        Called after the horizon: generators are done (their events are
        discarded unrun), but packets already launched still settle so
        every packet ends the run with a definite outcome.
        """
        processed = 0
        heap = self._heap
        handlers = self._handlers
        while heap:
            fire_at, _seq, ev = heapq.heappop(heap)
            if fire_at > self.clock:
                self.clock = fire_at
            if ev.kind in SOURCE_KINDS:
                continue
            handlers[ev.kind](ev)
            processed += 1
        return processed

    def pending(self) -> int:
        return len(self._heap)
