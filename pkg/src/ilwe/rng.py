"""Counter-based, splittable 64-bit random streams.

Each stream is identified by a 64-bit key. Word ``j`` of the stream is
``mix64(key + (j + 1) * GOLDEN)``, which is SplitMix64 evaluated at an
arbitrary position, so any word can be produced without touching the
ones before it. Keys for sub-streams are derived by hashing a parent key
with an integer label, which makes every sample stream a pure function of
``(master seed, label path)``.

The compiled kernels re-implement ``mix64`` and the derivation rule; both
must stay bit-identical to this module.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64).copy()
    z ^= z >> np.uint64(30)
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return z


def derive_key(parent: int, label: int) -> int:
    """Key of the child stream ``label`` under ``parent``."""
    return mix64(parent ^ mix64(((label & MASK64) + 1) * GOLDEN))


def stream_key(seed: int, *path: int) -> int:
    """Key reached from a master seed by following ``path`` labels."""
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    key = mix64(seed + GOLDEN)
    for label in path:
        key = derive_key(key, label)
    return key


class CounterStream:
    """Sequential reader over one keyed stream.

    Not thread-safe; give each thread its own stream.
    """

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key & MASK64
        self.counter = counter

    @classmethod
    def from_seed(cls, seed: int, *path: int) -> "CounterStream":
        return cls(stream_key(seed, *path))

    def child(self, label: int) -> "CounterStream":
        return CounterStream(derive_key(self.key, label))

    def next_u64(self) -> int:
        self.counter += 1
        return mix64(self.key + self.counter * GOLDEN)

    def below(self, bound: int) -> int:
        """Integer in ``[0, bound)`` by modular reduction of one word.

        The reduction bias is at most ``bound / 2**64``, far below anything
        measurable for the bounds used here.
        """
        if bound < 1:
            raise ValueError(f"bound must be positive, got {bound}")
        return self.next_u64() % bound

    def bit(self) -> int:
        return self.next_u64() & 1

    def words(self, count: int) -> np.ndarray:
        """The next ``count`` words as a uint64 array."""
        idx = np.arange(self.counter + 1, self.counter + 1 + count, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            z = np.uint64(self.key) + idx * np.uint64(GOLDEN)
        return mix64_array(z)

    def integers(self, low: int, high: int, size: int) -> np.ndarray:
        """``size`` integers uniform on the closed range ``[low, high]``."""
        span = high - low + 1
        if span < 1:
            raise ValueError(f"empty range [{low}, {high}]")
        w = self.words(size)
        return (w % np.uint64(span)).astype(np.int64) + low
