"""Splittable deterministic seeding.

Every random stream in an experiment is derived from the master seed as
``sub_seed = hash64(master_seed, stream_name, index)`` so that runs are
reproducible independently of execution order.
"""

from __future__ import annotations

import hashlib
import random

MASK64 = (1 << 64) - 1


def hash64(master_seed: int, stream: str, index: int = 0) -> int:
    """64-bit sub-seed from (master seed, stream name, index) via BLAKE2b."""
    h = hashlib.blake2b(digest_size=8)
    h.update((master_seed & MASK64).to_bytes(8, "little"))
    h.update(stream.encode("utf-8"))
    h.update(b"\x00")
    h.update(int(index).to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def rng_for(master_seed: int, stream: str, index: int = 0) -> random.Random:
    return random.Random(hash64(master_seed, stream, index))


class BitSource:
    """Stream of i.i.d. fair bits drawn 64 at a time from a ``random.Random``."""

    def __init__(self, rng: random.Random):
        self._rng = rng
        self._word = 0
        self._left = 0

    def __iter__(self):
        return self

    def __next__(self) -> int:
        if self._left == 0:
            self._word = self._rng.getrandbits(64)
            self._left = 64
        self._left -= 1
        bit = self._word & 1
        self._word >>= 1
        return bit
