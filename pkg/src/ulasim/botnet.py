"""Botnet lifecycle: infection states, commands, C2 bookkeeping, and the
scan-targeting draw discipline.

The state machine is strictly forward: Clean -> Infected -> Registered
-> (Attacking <-> Registered). Nothing disinfects.

Scan targeting is the only stochastic part of the lifecycle. Each probe
consumes a fixed draw sequence from the bot's own RNG stream:

    1. miss? one float compared against miss_ratio
    2. miss: one u64 (low bits of an address in unallocated space)
       hit:  one bounded draw, an index into the bot's target pool
    3. port: one bounded draw over the scan port list

A bot's target pool is every internal device address followed by every
external host address (both ascending by id), minus the bot itself.
Keeping the order and the draw sequence fixed lets a straight-line
replay outside the engine predict every probe of a run.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto

from .kernel import SimTime
from .rng import Xoshiro256StarStar
from .traffic import HTTP_BYTES, SYN_BYTES, VOLUMETRIC_BYTES, PacketClass

# Missed probes target this unallocated Global space; spoofed attack
# sources are forged from a different one. Both are disjoint from every
# address the topology can allocate.
MISS_TARGET_BASE = 0x2400_D00D << 96
SPOOF_SOURCE_BASE = 0x2600 << 112


class BotState(Enum):
    Clean = auto()
    Infected = auto()
    Registered = auto()
    Attacking = auto()


class InfectionOutcome(Enum):
    Infected = auto()
    Resisted = auto()


class AttackClass(Enum):
    Volumetric = "volumetric"
    ProtocolSyn = "syn"
    AppLayerHttp = "http"


# attack class -> (wire class, default size, forged source?)
ATTACK_PROFILES = {
    AttackClass.Volumetric: (PacketClass.ATTACK_VOLUMETRIC, VOLUMETRIC_BYTES, True),
    AttackClass.ProtocolSyn: (PacketClass.ATTACK_SYN, SYN_BYTES, True),
    AttackClass.AppLayerHttp: (PacketClass.ATTACK_HTTP, HTTP_BYTES, False),
}


@dataclass(frozen=True, slots=True)
class AttackCommand:
    attack_class: AttackClass
    target: int  # 128-bit destination address
    rate_pps: int  # per bot
    packet_size_bytes: int
    start: SimTime
    duration: SimTime
    burst_interval_us: int
    include_seed_bots: bool = True

    def __post_init__(self) -> None:
        if self.rate_pps < 1:
            raise ValueError("rate_pps must be >= 1")
        if self.duration < 1:
            raise ValueError("duration must be >= 1 us")


@dataclass(slots=True)
class C2State:
    """Command-and-control ledger. Bots are tracked by entity id (the
    runner's unified id space for devices and external hosts); an
    insertion-ordered dict stands in for an ordered set."""

    registered_bots: dict[int, None]
    pending_commands: list[AttackCommand]

    def register(self, entity: int) -> bool:
        """Add a bot; returns False if it was already registered."""
        if entity in self.registered_bots:
            return False
        self.registered_bots[entity] = None
        return True


@dataclass(frozen=True, slots=True)
class ProbeDraw:
    miss: bool
    target: int  # the probed address (pool entry for hits, unallocated for misses)
    port: int


def draw_probe(
    rng: Xoshiro256StarStar,
    pool: list[int],
    miss_ratio: float,
    scan_ports: tuple[int, ...],
) -> ProbeDraw:
    """One probe's worth of draws; see the module docstring for the
    fixed draw order."""
    miss = rng.next_float() < miss_ratio
    if miss:
        target = MISS_TARGET_BASE | rng.next_u64()
    else:
        target = pool[rng.next_below(len(pool))]
    port = scan_ports[rng.next_below(len(scan_ports))]
    return ProbeDraw(miss=miss, target=target, port=port)


def spoofed_source(rng: Xoshiro256StarStar) -> int:
    """A forged Global-scope source address, one draw."""
    return SPOOF_SOURCE_BASE | rng.next_u64()


def attempt_infection(device) -> InfectionOutcome:
    """Probe handling at a delivered target. Deterministic: a vulnerable
    Clean device is always compromised; everything else resists."""
    if device.bot_state is not BotState.Clean:
        return InfectionOutcome.Resisted
    if not device.profile.vulnerable:
        return InfectionOutcome.Resisted
    device.bot_state = BotState.Infected
    return InfectionOutcome.Infected
