"""Reproducible random streams.

A stream is identified by ``(seed, stream_index)``.  The pair is folded into
a single 64-bit key with the splitmix64 finalizer, and the key seeds a PCG64
generator.  Replica ``i`` of an experiment run with master seed ``s`` uses
``RngStream(s, i)``; nested streams are obtained with :meth:`RngStream.child`.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One round of the splitmix64 output function (a 64-bit avalanche mix)."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def stream_key(seed: int, stream_index: int) -> int:
    if seed < 0 or stream_index < 0:
        raise ValueError("seed and stream_index must be non-negative")
    return splitmix64(splitmix64(seed & _MASK64) ^ splitmix64((stream_index * _GOLDEN) & _MASK64))


class RngStream:
    """A numpy ``Generator`` bound to a ``(seed, stream_index)`` identity.

    Draws are consumed sequentially, so two streams built from the same pair
    produce the same sequence.
    """

    __slots__ = ("seed", "stream_index", "gen")

    def __init__(self, seed: int = 0, stream_index: int = 0):
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        self.gen = np.random.Generator(np.random.PCG64(stream_key(self.seed, self.stream_index)))

    def child(self, index: int) -> "RngStream":
        return RngStream(stream_key(self.seed, self.stream_index), index)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_index={self.stream_index})"


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a Generator, an int seed or None."""
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng)).gen
    raise TypeError(f"cannot use {type(rng).__name__} as a random stream")
