"""IPv6 addresses, unique-local prefixes, and scope classification.

Addresses are carried internally as plain 128-bit ints; the text form
(canonical lowercase, longest-zero-run compressed) only appears at the
scenario and report edges. Stdlib `ipaddress` supplies parsing and the
canonical formatter; the segment-prefix model below is ours.

Segment prefixes follow the unique-local layout: one byte 0xfd, a 40-bit
site id, a 16-bit subnet id, then a zero 64-bit interface field. The site
id is taken from the low 40 bits of the scenario seed rather than from a
hashed clock so that the whole address plan is a pure function of the
scenario.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from enum import Enum, auto

MASK40 = (1 << 40) - 1
MASK64 = (1 << 64) - 1


class MalformedAddress(Exception):
    """Input text is not a valid IPv6 address."""


class AddressScope(Enum):
    UniqueLocal = auto()  # fc00::/7
    Global = auto()  # everything else, for this model's purposes


def classify(addr: int) -> AddressScope:
    """Scope of a 128-bit address: UniqueLocal iff the top 7 bits are
    1111110 (fc00::/7); all other addresses count as Global here."""
    if (addr >> 121) == 0x7E:
        return AddressScope.UniqueLocal
    return AddressScope.Global


@dataclass(frozen=True, slots=True)
class UlaPrefix:
    """A /64 unique-local segment prefix.

    Attributes:
        global_id: 40-bit site identifier.
        subnet_id: 16-bit segment identifier.
    """

    global_id: int
    subnet_id: int

    def __post_init__(self) -> None:
        if not 0 <= self.global_id <= MASK40:
            raise ValueError(f"global_id out of range: {self.global_id:#x}")
        if not 0 <= self.subnet_id <= 0xFFFF:
            raise ValueError(f"subnet_id out of range: {self.subnet_id}")

    @property
    def top64(self) -> int:
        return (0xFD << 56) | (self.global_id << 16) | self.subnet_id

    @property
    def network(self) -> int:
        return self.top64 << 64

    def __str__(self) -> str:
        return f"{format_address(self.network)}/64"


def generate_ula_prefix(seed: int, subnet_id: int) -> UlaPrefix:
    """Segment prefix for a scenario seed: the site id is the low 40 bits
    of the seed, so every segment of one scenario shares a site and
    distinct subnet ids never collide."""
    return UlaPrefix(global_id=seed & MASK40, subnet_id=subnet_id)


def device_address(prefix: UlaPrefix, interface_id: int) -> int:
    """Address of interface `interface_id` (64-bit) inside a segment
    prefix. Zero is permitted (the subnet-router anycast form); device
    allocation starts at 1."""
    if not 0 <= interface_id <= MASK64:
        raise ValueError(f"interface_id out of range: {interface_id}")
    return prefix.network | interface_id


def in_prefix(addr: int, prefix: UlaPrefix) -> bool:
    """Membership test: top 64 bits equal the prefix."""
    return (addr >> 64) == prefix.top64


def parse_address(text: str) -> int:
    try:
        return int(ipaddress.IPv6Address(text))
    except (ipaddress.AddressValueError, ValueError) as exc:
        raise MalformedAddress(f"not an IPv6 address: {text!r}") from exc


def format_address(addr: int) -> str:
    """Canonical text form: lowercase hex, longest zero run compressed."""
    return str(ipaddress.IPv6Address(addr))
