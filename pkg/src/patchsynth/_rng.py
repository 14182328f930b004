"""Seeded, stream-splittable random number generation.

All randomness in the package flows through Philox (a counter-based
bit generator), keyed by a user seed plus integer stream tags.  Distinct
tag tuples give statistically independent streams, and any (seed, tags)
pair reproduces the same values on every platform and thread count.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_MIX = 0x9E3779B97F4A7C15  # splitmix64 increment


def _mix64(x: int) -> int:
    # splitmix64 finalizer
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def stream_key(seed: int, *tags: int) -> np.ndarray:
    """Derive a 128-bit Philox key from a seed and a tuple of stream tags."""
    lo = _mix64(int(seed))
    hi = _mix64(lo ^ _MIX)
    for t in tags:
        hi = _mix64(hi + _MIX * 2 + (int(t) & _MASK64))
    return np.array([lo, hi], dtype=np.uint64)


def generator(seed: int, *tags: int) -> np.random.Generator:
    """A fresh Philox-backed Generator for the stream (seed, *tags)."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *tags)))


def child_seed(seed: int, *tags: int) -> int:
    """Derive an independent integer seed from a parent seed and stream tags."""
    x = _mix64(int(seed))
    for t in tags:
        x = _mix64(x + _MIX + (int(t) & _MASK64))
    return x
