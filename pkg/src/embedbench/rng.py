"""Deterministic counter-based random streams.

Every random draw in the harness (splits, fixed projections, weight init,
dropout masks, epoch shuffles) comes from a SplitMix64 stream.  Streams are
keyed by a root seed plus a tuple of tags, so two consumers never share state
and a given ``(seed, tags)`` pair always yields the same bytes.

Constants are the reference SplitMix64 ones (Steele, Lea & Flood 2014):

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z ^= z >> 31
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x`` (the state is advanced first)."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def _fnv1a64(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


def mix(seed: int, *tags: int | str) -> int:
    """Derive a 64-bit sub-seed from a root seed and a sequence of tags.

    Integer tags are mixed by value, string tags through FNV-1a, so
    ``mix(7, 0)`` and ``mix(7, "0")`` are different streams.
    """
    h = splitmix64(seed & MASK64)
    for tag in tags:
        if isinstance(tag, str):
            t = _fnv1a64(tag)
        else:
            t = splitmix64(int(tag) & MASK64)
        h = splitmix64(h ^ t)
    return h


class SplitMix64:
    """SplitMix64 stream with vectorized bulk draws.

    The generator is counter based: draw ``i`` depends only on the initial
    state and ``i``, so bulk and one-at-a-time consumption agree.
    """

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    @classmethod
    def from_tags(cls, seed: int, *tags: int | str) -> "SplitMix64":
        return cls(mix(seed, *tags))

    def next_u64(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GOLDEN_GAMMA) & MASK64
        return z

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1) built from the top 53 bits of each draw."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def normal(self, n: int, std: float = 1.0) -> np.ndarray:
        """Box-Muller Gaussian draws; both outputs of each pair are used."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
        u2 = u[1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n] * std

    def permutation(self, items) -> list:
        """Fisher-Yates shuffle of a copy of ``items``."""
        out = list(items)
        n = len(out)
        if n < 2:
            return out
        u = self.uniform(n - 1)
        for k, i in enumerate(range(n - 1, 0, -1)):
            j = min(int(u[k] * (i + 1)), i)
            out[i], out[j] = out[j], out[i]
        return out
