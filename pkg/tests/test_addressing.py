"""Address layout, scope, and text-form round trips."""

from __future__ import annotations

import pytest

from ulasim.addressing import (
    AddressScope,
    MalformedAddress,
    UlaPrefix,
    classify,
    device_address,
    format_address,
    generate_ula_prefix,
    in_prefix,
    parse_address,
)
from ulasim.rng import Xoshiro256StarStar


def test_prefix_from_seed_low_40_bits():
    p = generate_ula_prefix(0x0123456789AB, 0x0001)
    assert p.global_id == 0x23456789AB
    assert str(p) == "fd23:4567:89ab:1::/64"


def test_prefix_zero_case():
    p = generate_ula_prefix(0, 0)
    assert format_address(p.network) == "fd00::"


def test_prefixes_differ_only_in_subnet_field():
    a = generate_ula_prefix(0xABCDEF, 1)
    b = generate_ula_prefix(0xABCDEF, 2)
    assert a.global_id == b.global_id
    assert a.top64 ^ b.top64 == 1 ^ 2
    assert a.network != b.network


def test_classify_examples():
    assert classify(parse_address("fd23:4567:89ab:1::5")) == AddressScope.UniqueLocal
    assert classify(parse_address("2001:db8::1")) == AddressScope.Global
    # link-local is out of model: anything outside fc00::/7 counts Global
    assert classify(parse_address("fe80::1")) == AddressScope.Global
    # both halves of fc00::/7
    assert classify(parse_address("fc00::1")) == AddressScope.UniqueLocal
    assert classify(parse_address("fbff::1")) == AddressScope.Global
    assert classify(parse_address("fe00::1")) == AddressScope.Global


def test_device_address_layout():
    p = UlaPrefix(global_id=0, subnet_id=2)
    assert format_address(device_address(p, 0x5)) == "fd00:0:0:2::5"
    # iid 0 is the subnet-router anycast form, allowed in-model
    assert format_address(device_address(p, 0)) == "fd00:0:0:2::"


def test_device_address_stays_in_prefix_and_ula():
    gen = Xoshiro256StarStar(31337)
    for _ in range(200):
        p = generate_ula_prefix(gen.next_u64(), gen.next_below(1 << 16))
        addr = device_address(p, gen.next_below((1 << 64) - 1) + 1)
        assert classify(addr) == AddressScope.UniqueLocal
        assert in_prefix(addr, p)
        # and membership really is a top-64-bit compare
        assert (addr >> 64) == p.top64


def test_parse_format_examples():
    assert parse_address("fd00::1") == (0xFD00 << 112) | 1
    assert parse_address("::") == 0
    with pytest.raises(MalformedAddress):
        parse_address("fd00:::1")
    with pytest.raises(MalformedAddress):
        parse_address("not-an-address")


def test_parse_format_round_trip_10k_random():
    gen = Xoshiro256StarStar(0xADD2)
    for _ in range(10_000):
        addr = (gen.next_u64() << 64) | gen.next_u64()
        assert parse_address(format_address(addr)) == addr


def test_canonical_form_is_lowercase_compressed():
    assert format_address(parse_address("FD00:0000:0000:0000:0000:0000:0000:0001")) == "fd00::1"
