"""Elias-Fano encoding of monotone integer sequences with O(1) select.

Values are split into low bits (packed array) and high bits (unary-coded gaps
in a bitvector); select(r) combines high-select with a low-bits read.
Non-decreasing sequences are accepted (duplicates encode as zero gaps).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import RankOutOfRange, UnsortedInput
from .bitvector import BitVectorRS


class EliasFano:
    __slots__ = ("n", "u", "low_bits", "_low", "_high")

    def __init__(self, xs: Sequence[int], u: int):
        arr = np.asarray(xs, dtype=np.int64)
        if np.any(arr[1:] < arr[:-1]):
            raise UnsortedInput("Elias-Fano input must be non-decreasing")
        n = len(arr)
        self.n = n
        self.u = max(u, 1)
        if n and (arr[0] < 0 or arr[-1] >= self.u):
            raise RankOutOfRange("values outside [0..u)")
        if n == 0:
            self.low_bits = 0
            self._low = 0
            self._high = BitVectorRS([], 0)
            return
        self.low_bits = max(0, (self.u // n).bit_length() - 1)
        lb = self.low_bits
        low_blob = 0
        if lb:
            for i, v in enumerate(arr.tolist()):
                low_blob |= (v & ((1 << lb) - 1)) << (i * lb)
        self._low = low_blob
        highs = (arr >> lb).astype(np.int64)
        # unary: for each element a 1, preceded by a 0 per unit gap
        total = n + int(highs[-1]) + 1
        words = np.zeros((total + 63) // 64 or 1, dtype=np.uint64)
        positions = highs + np.arange(n, dtype=np.int64)  # bit index of i-th 1
        for p in positions.tolist():
            words[p >> 6] |= np.uint64(1) << np.uint64(p & 63)
        self._high = BitVectorRS(words, total)

    def select(self, r: int) -> int:
        """The r-th smallest element (0-based)."""
        if not 0 <= r < self.n:
            raise RankOutOfRange(f"select({r}) with {self.n} elements")
        high = self._high.select1(r) - r
        if self.low_bits:
            lb = self.low_bits
            low = (self._low >> (r * lb)) & ((1 << lb) - 1)
            return (high << lb) | low
        return high

    def __len__(self) -> int:
        return self.n

    def bit_size(self) -> int:
        """Core bits: packed low array plus the high unary bitvector."""
        return self.n * self.low_bits + len(self._high)

    def bit_size_with_directories(self) -> int:
        return self.n * self.low_bits + self._high.bit_size()
