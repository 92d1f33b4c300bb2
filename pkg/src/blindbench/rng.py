"""Randomness sources.

Sessions must be replayable from their persisted log, so every participant
draws randomness from a seeded deterministic generator.  The stream is a
SHAKE-256 output over (seed, counter); with a seed from ``os.urandom`` this
is a conventional DRBG, with a fixed seed it makes whole protocol runs
reproducible for simulation and crash-recovery tests.
"""

from __future__ import annotations

import hashlib
import os

_BLOCK = 64


class SecretStream:
    """Deterministic byte stream with integer sampling helpers."""

    def __init__(self, seed: bytes):
        if not isinstance(seed, bytes) or len(seed) == 0:
            raise ValueError("seed must be non-empty bytes")
        self._seed = seed
        self._counter = 0
        self._buf = b""

    @classmethod
    def from_entropy(cls) -> "SecretStream":
        return cls(os.urandom(32))

    def fork(self, label: str) -> "SecretStream":
        """Independent sub-stream bound to a label (per-player, per-role)."""
        return SecretStream(
            hashlib.sha3_256(self._seed + b"/" + label.encode()).digest()
        )

    def bytes(self, k: int) -> bytes:
        while len(self._buf) < k:
            block = hashlib.shake_256(
                self._seed + self._counter.to_bytes(8, "big")
            ).digest(_BLOCK)
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:k], self._buf[k:]
        return out

    def getrandbits(self, bits: int) -> int:
        if bits <= 0:
            return 0
        nbytes = (bits + 7) // 8
        value = int.from_bytes(self.bytes(nbytes), "big")
        return value >> (8 * nbytes - bits)

    def randbelow(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        bits = bound.bit_length()
        while True:
            value = self.getrandbits(bits)
            if value < bound:
                return value

    def randrange(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi)."""
        if hi <= lo:
            raise ValueError("empty range")
        return lo + self.randbelow(hi - lo)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
