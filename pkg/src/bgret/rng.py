"""Reproducible randomness for experiment trials.

Trial streams must be portable across implementations, so the harness does not
rely on a library generator. Three documented pieces:

splitmix64 scramble
    scramble(z): z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
                 z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
                 return z ^ (z >> 31)           (all mod 2^64)

seed mixing
    mix_seed(p_0, ..., p_r): h = 0; for each part:
        h = scramble(((h + 0x9E3779B97F4A7C15) mod 2^64) XOR part)
    Per-trial seeds are mix_seed(master_seed, cell_index, trial_index) and
    substreams hang off the trial seed as mix_seed(trial_seed, stream_index).

xoshiro256** + Box-Muller
    State seeded with four successive splitmix64 outputs of the seed.
    next(): r = rotl64(s1 * 5, 7) * 9; t = s1 << 17; s2 ^= s0; s3 ^= s1;
            s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl64(s3, 45); return r.
    uniform: u = (next() >> 11) * 2^-53 in [0, 1).
    normals come in Box-Muller pairs from consecutive outputs x1, x2:
        u1 = ((x1 >> 11) + 1) * 2^-53 in (0, 1], u2 = (x2 >> 11) * 2^-53,
        z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2);
    emitted in order z0, z1; an odd request drops the trailing z1.

Test vectors live in tests/test_rng.py and the README.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_TWO53_INV = 2.0 ** -53


def scramble64(z: int) -> int:
    """splitmix64 output scrambler."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_stream(seed: int, count: int) -> list[int]:
    """First `count` outputs of splitmix64 seeded at `seed`."""
    state = int(seed) & MASK64
    out = []
    for _ in range(count):
        state = (state + GOLDEN) & MASK64
        out.append(scramble64(state))
    return out


def mix_seed(*parts: int) -> int:
    """Collapse any number of 64-bit parts into one seed (see module docs)."""
    if not parts:
        raise ValueError("mix_seed needs at least one part")
    h = 0
    for p in parts:
        h = scramble64(((h + GOLDEN) & MASK64) ^ (int(p) & MASK64))
    return h


def _rotl(x: int, r: int) -> int:
    return ((x << r) | (x >> (64 - r))) & MASK64


class Xoshiro256StarStar:
    """Sequential xoshiro256** generator with Box-Muller normal variates."""

    def __init__(self, seed: int):
        self._s = splitmix64_stream(seed, 4)
        if all(v == 0 for v in self._s):  # cannot happen with splitmix64 seeding
            self._s = [GOLDEN, 1, 2, 3]

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self, count: int) -> np.ndarray:
        """count doubles in [0, 1) with 53-bit resolution."""
        return np.array([(self.next_u64() >> 11) * _TWO53_INV for _ in range(count)])

    def normal(self, count: int, mu: float = 0.0, sigma: float = 1.0) -> np.ndarray:
        out = np.empty(count)
        i = 0
        while i < count:
            u1 = ((self.next_u64() >> 11) + 1) * _TWO53_INV
            u2 = (self.next_u64() >> 11) * _TWO53_INV
            r = math.sqrt(-2.0 * math.log(u1))
            theta = 2.0 * math.pi * u2
            out[i] = r * math.cos(theta)
            if i + 1 < count:
                out[i + 1] = r * math.sin(theta)
            i += 2
        return mu + sigma * out
