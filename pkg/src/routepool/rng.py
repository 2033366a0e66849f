"""Seed mixing and substream derivation.

All randomness in the toolkit flows through 64-bit child seeds derived with
``mix``: ``child = mix(parent_seed, tag, *indices)``.  The mixer is a
splitmix64 chain, so substreams for distinct (tag, index) tuples are
independent of each other and of argument reordering elsewhere in the
pipeline.  Child seeds feed ``numpy.random.PCG64``, which produces the same
stream on every platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Purpose tags keep substreams for different pipeline stages disjoint even
# when they share a parent seed.
TAG_COORDS = 1
TAG_DEMANDS = 2
TAG_DEPOT = 3
TAG_INSTANCE = 4
TAG_EPOCH = 5
TAG_SOLVER = 6


def splitmix64(x: int) -> int:
    """One splitmix64 step; maps any 64-bit value to a well-mixed one."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix(seed: int, *parts: int) -> int:
    """Derive a 64-bit child seed from a parent seed and integer parts.

    The chain is order-dependent: mix(s, a, b) != mix(s, b, a) in general.
    """
    h = splitmix64(seed & _MASK64)
    for p in parts:
        h = splitmix64(h ^ (p & _MASK64))
    return h


def make_rng(seed: int, *parts: int) -> np.random.Generator:
    """PCG64 generator seeded with mix(seed, *parts)."""
    return np.random.Generator(np.random.PCG64(mix(seed, *parts)))
