"""Deterministic random number generation.

All stochastic behavior in the simulator flows through one fixed algorithm:
a splitmix64 sequence seeds xoshiro256**, and every draw is derived from
xoshiro output words. Two runs with the same scenario and seed therefore
consume identical random streams, and an independent reimplementation of
these two well-known generators will reproduce them bit for bit.

Streams are split per (purpose, entity) with `derive_stream` so that the
order in which simulation events interleave can never change what any
single actor draws. A bot's scan targets depend only on the root seed and
the bot's identity, not on who else was scheduled in the same microsecond.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1

# splitmix64 / golden-ratio increment, also reused as the salt mixer.
_GOLDEN = 0x9E3779B97F4A7C15

# Stream purposes. Kept small and stable; combined with an entity key to
# form the salt for derive_stream.
PURPOSE_SCAN = 1  # a bot's target-selection draws
PURPOSE_LEGIT = 2  # legitimate client arrival process
PURPOSE_MISC = 3  # scenario-level odds and ends


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output)."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """xoshiro256** seeded from splitmix64, per the reference construction.

    The four state words are the first four splitmix64 outputs for the
    given 64-bit seed. All arithmetic wraps at 64 bits.
    """

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int) -> None:
        state = seed & MASK64
        state, self._s0 = splitmix64(state)
        state, self._s1 = splitmix64(state)
        state, self._s2 = splitmix64(state)
        state, self._s3 = splitmix64(state)
        if self._s0 == self._s1 == self._s2 == self._s3 == 0:
            # xoshiro's one forbidden state; unreachable in practice but
            # cheap to guard against.
            self._s0 = 1

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n). Plain modulo; the tiny bias is
        irrelevant here and keeping the mapping trivial makes the stream
        easy to replay by hand."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def exp_gap_us(self, rate_per_s: float) -> int:
        """Exponential inter-arrival gap in whole microseconds for a
        Poisson process of `rate_per_s` events per second."""
        u = self.next_float()
        return int(-math.log(1.0 - u) * 1_000_000.0 / rate_per_s)


def derive_stream(root_seed: int, purpose: int, entity: int = 0) -> Xoshiro256StarStar:
    """Child generator for one (purpose, entity) pair.

    The child seed is one splitmix64 step over the root seed xored with a
    golden-ratio-mixed salt, so nearby entity ids still land in unrelated
    streams.
    """
    salt = ((purpose << 48) ^ entity) & MASK64
    mixed = (root_seed ^ ((salt * _GOLDEN) & MASK64)) & MASK64
    _, child_seed = splitmix64(mixed)
    return Xoshiro256StarStar(child_seed)
