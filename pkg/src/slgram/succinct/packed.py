"""Bit-packed terminal strings.

Characters from [0..sigma) are stored LSB-first in a single Python integer at
``ceil(log2 sigma)`` bits each, so slice/concat/char_at are word-parallel int
operations (O(1 + len*log(sigma)/w) amortized under CPython's bignum ops).
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

from ..errors import OutOfBounds


def char_bits(sigma: int) -> int:
    return max(1, (max(sigma, 2) - 1).bit_length())


class PackedString:
    __slots__ = ("bits", "length", "cb")

    def __init__(self, bits: int, length: int, cb: int):
        self.bits = bits
        self.length = length
        self.cb = cb

    @classmethod
    def empty(cls, sigma: int) -> "PackedString":
        return cls(0, 0, char_bits(sigma))

    @classmethod
    def pack(cls, chars: Iterable[int], sigma: int) -> "PackedString":
        cb = char_bits(sigma)
        bits = 0
        n = 0
        for c in chars:
            bits |= c << (n * cb)
            n += 1
        return cls(bits, n, cb)

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PackedString)
            and self.cb == other.cb
            and self.length == other.length
            and self.bits == other.bits
        )

    def __hash__(self) -> int:
        return hash((self.bits, self.length, self.cb))

    def __repr__(self) -> str:
        return f"PackedString({self.to_list()!r})"

    def char_at(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise OutOfBounds(f"char_at({i}) on length {self.length}")
        return (self.bits >> (i * self.cb)) & ((1 << self.cb) - 1)

    def slice(self, i: int, j: int) -> "PackedString":
        if not 0 <= i <= j <= self.length:
            raise OutOfBounds(f"slice({i},{j}) on length {self.length}")
        n = j - i
        chunk = (self.bits >> (i * self.cb)) & ((1 << (n * self.cb)) - 1)
        return PackedString(chunk, n, self.cb)

    def concat(self, other: "PackedString") -> "PackedString":
        assert self.cb == other.cb, "concat of differently packed strings"
        return PackedString(
            self.bits | (other.bits << (self.length * self.cb)),
            self.length + other.length,
            self.cb,
        )

    def repeat(self, k: int) -> "PackedString":
        if k <= 0:
            return PackedString(0, 0, self.cb)
        # binary exponentiation on the bit blob
        out = PackedString(0, 0, self.cb)
        base = self
        while k:
            if k & 1:
                out = out.concat(base)
            k >>= 1
            if k:
                base = base.concat(base)
        return out

    def reverse(self) -> "PackedString":
        return PackedString.pack(reversed(self.to_list()), 1 << self.cb)

    def to_list(self) -> list[int]:
        mask = (1 << self.cb) - 1
        bits = self.bits
        out = []
        for _ in range(self.length):
            out.append(bits & mask)
            bits >>= self.cb
        return out

    def __iter__(self) -> Iterator[int]:
        return iter(self.to_list())

    def to_array(self) -> np.ndarray:
        return np.array(self.to_list(), dtype=np.int64)

    def bit_size(self) -> int:
        return self.length * self.cb


def pack_pool(blocks: list[PackedString]) -> tuple[np.ndarray, np.ndarray, int]:
    """Concatenate packed blocks into a uint64 pool for the compiled kernels.

    Returns (words, bit_offsets, cb); block i occupies bits
    [bit_offsets[i], bit_offsets[i] + len_i*cb) of the word array, LSB-first.
    """
    cb = blocks[0].cb if blocks else 1
    offsets = np.zeros(len(blocks) + 1, dtype=np.int64)
    total = 0
    for i, b in enumerate(blocks):
        assert b.cb == cb
        offsets[i] = total
        total += b.length * cb
    offsets[len(blocks)] = total
    blob = 0
    for b, off in zip(blocks, offsets[:-1].tolist()):
        blob |= b.bits << off
    nwords = (total + 63) // 64 or 1
    raw = blob.to_bytes(nwords * 8, "little")
    words = np.frombuffer(raw, dtype="<u8").astype(np.uint64)
    return words, offsets, cb
