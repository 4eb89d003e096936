"""Sortable identifiers and deterministic id/token streams.

Identifiers are 26-character Crockford base32 strings: a 48-bit millisecond
timestamp followed by 80 bits of entropy. Lexicographic order therefore tracks
creation time, which the folder tie-break and archive indexes depend on.
"""

from __future__ import annotations

import hashlib
import os
import time

ID_LENGTH = 26

_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def _b32(value: int, length: int) -> str:
    out = []
    for _ in range(length):
        out.append(_ALPHABET[value & 0x1F])
        value >>= 5
    return "".join(reversed(out))


def new_id(now_ms: int | None = None, entropy: bytes | None = None) -> str:
    if now_ms is None:
        now_ms = time.time_ns() // 1_000_000
    if entropy is None:
        entropy = os.urandom(10)
    if len(entropy) != 10:
        raise ValueError("entropy must be exactly 10 bytes")
    return _b32(int(now_ms) & ((1 << 48) - 1), 10) + _b32(
        int.from_bytes(entropy, "big"), 16
    )


class IdStream:
    """Deterministic id/token source: a hash chain over a secret seed.

    Reproducible from (seed, counter), which is all a snapshot has to persist;
    without the seed the next token is not guessable from prior output.
    """

    def __init__(self, seed: bytes, counter: int = 0) -> None:
        self.seed = seed
        self.counter = counter

    def _draw(self, nbytes: int) -> bytes:
        block = hashlib.sha256(self.seed + self.counter.to_bytes(8, "big")).digest()
        self.counter += 1
        return block[:nbytes]

    def next_id(self, now_s: int = 0) -> str:
        return new_id(now_ms=int(now_s) * 1000, entropy=self._draw(10))

    def next_token(self) -> str:
        return self._draw(16).hex()
