"""Plain bitvector with constant-time rank and select.

Two-level rank directories (superblocks of 512 bits, blocks of 64) plus
sampled select positions with an in-block scan driven by shared byte lookup
tables built once per process.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from ..errors import OutOfBounds, RankOutOfRange

_SUPER = 512
_BLOCK = 64
_SELECT_SAMPLE = 64

_BYTE_POP: Optional[np.ndarray] = None
_BYTE_SELECT: Optional[np.ndarray] = None


def _tables() -> tuple[np.ndarray, np.ndarray]:
    """Shared byte tables: popcount per byte, and per (byte, r) the r-th 1-bit."""
    global _BYTE_POP, _BYTE_SELECT
    if _BYTE_POP is None:
        pop = np.zeros(256, dtype=np.uint8)
        sel = np.full((256, 8), 8, dtype=np.uint8)
        for b in range(256):
            r = 0
            for bit in range(8):
                if b >> bit & 1:
                    sel[b, r] = bit
                    r += 1
            pop[b] = r
        _BYTE_POP, _BYTE_SELECT = pop, sel
    return _BYTE_POP, _BYTE_SELECT


class BitVectorRS:
    """rank/select over a fixed bit array of length u."""

    def __init__(self, bits: Iterable[int] | np.ndarray, length: Optional[int] = None):
        if isinstance(bits, np.ndarray) and bits.dtype == np.uint64 and length is not None:
            self.words = bits.copy()
            self.u = length
        else:
            blist = list(bits)
            self.u = len(blist) if length is None else length
            nwords = (self.u + 63) // 64 or 1
            words = np.zeros(nwords, dtype=np.uint64)
            for i, b in enumerate(blist):
                if b:
                    words[i >> 6] |= np.uint64(1) << np.uint64(i & 63)
            self.words = words
        self._build()

    def _build(self) -> None:
        pop, _ = _tables()
        bytes_view = self.words.view(np.uint8)
        byte_pop = pop[bytes_view].astype(np.int64)
        word_pop = byte_pop.reshape(-1, 8).sum(axis=1)
        self._word_rank = np.concatenate([[0], np.cumsum(word_pop)]).astype(np.int64)
        self.ones = int(self._word_rank[-1])
        # sampled select: position of every SELECT_SAMPLE-th 1 (word index hint)
        if self.ones:
            ranks = self._word_rank[:-1]
            sample_targets = np.arange(0, self.ones, _SELECT_SAMPLE, dtype=np.int64)
            self._select_hint = np.searchsorted(ranks, sample_targets, side="right") - 1
        else:
            self._select_hint = np.zeros(0, dtype=np.int64)

    def __len__(self) -> int:
        return self.u

    def get(self, i: int) -> int:
        if not 0 <= i < self.u:
            raise OutOfBounds(f"get({i}) on length {self.u}")
        return int(self.words[i >> 6] >> np.uint64(i & 63)) & 1

    def rank1(self, i: int) -> int:
        """Number of 1-bits in positions [0..i)."""
        if not 0 <= i <= self.u:
            raise OutOfBounds(f"rank1({i}) on length {self.u}")
        w, r = divmod(i, 64)
        res = int(self._word_rank[w])
        if r:
            mask = (np.uint64(1) << np.uint64(r)) - np.uint64(1)
            res += int(self.words[w] & mask).bit_count()
        return res

    def rank0(self, i: int) -> int:
        return i - self.rank1(i)

    def select1(self, r: int) -> int:
        """Position of the (r+1)-th 1-bit (0-based rank r)."""
        if not 0 <= r < self.ones:
            raise RankOutOfRange(f"select1({r}) with {self.ones} ones")
        pop, sel = _tables()
        w = int(self._select_hint[r // _SELECT_SAMPLE])
        # walk forward from the sampled word
        while int(self._word_rank[w + 1]) <= r:
            w += 1
        rem = r - int(self._word_rank[w])
        word = int(self.words[w])
        for byte_i in range(8):
            byte = (word >> (8 * byte_i)) & 0xFF
            c = int(pop[byte])
            if rem < c:
                return w * 64 + byte_i * 8 + int(sel[byte, rem])
            rem -= c
        raise AssertionError("select walked past its word")

    def select0(self, r: int) -> int:
        zeros = self.u - self.ones
        if not 0 <= r < zeros:
            raise RankOutOfRange(f"select0({r}) with {zeros} zeros")
        # binary search on rank0 (select0 is off the hot paths)
        lo, hi = 0, self.u
        while lo < hi:
            mid = (lo + hi) // 2
            if self.rank0(mid + 1) <= r:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def bit_size(self) -> int:
        return len(self.words) * 64 + len(self._word_rank) * 64 + len(self._select_hint) * 64
