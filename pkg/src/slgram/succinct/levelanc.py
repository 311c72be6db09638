"""Level-ancestor queries on static forests via jump-pointer tables.

O(n log n) space and build, O(1)-bounded query work (at most log n pointer
hops, each a table read).  Ladder decomposition would shave the log from the
space; jump pointers keep the code short and are nowhere near the space
bottleneck here.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import CyclicGrammar, LevelOutOfRange


class LevelAncestor:
    __slots__ = ("n", "level", "_up")

    def __init__(self, parents: Sequence[Optional[int]]):
        n = len(parents)
        self.n = n
        par = np.full(n, -1, dtype=np.int64)
        for v, p in enumerate(parents):
            if p is not None:
                par[v] = p
        level = np.full(n, -1, dtype=np.int64)
        for v in range(n):
            if level[v] >= 0:
                continue
            chain = []
            x = v
            while x != -1 and level[x] < 0:
                chain.append(x)
                x = int(par[x])
                if len(chain) > n:
                    raise CyclicGrammar("parent array contains a cycle")
            base = 0 if x == -1 else int(level[x]) + 1
            for i, node in enumerate(reversed(chain)):
                level[node] = base + i
        self.level = level
        depth = int(level.max()) + 1 if n else 1
        k = max(1, depth.bit_length())
        up = np.full((k, n), -1, dtype=np.int64)
        up[0] = par
        for j in range(1, k):
            prev = up[j - 1]
            mask = prev >= 0
            up[j][mask] = prev[prev[mask]]
        self._up = up

    def query(self, v: int, ell: int) -> int:
        """The ancestor of v at level ell (0 = root of v's tree)."""
        lv = int(self.level[v])
        if not 0 <= ell <= lv:
            raise LevelOutOfRange(f"level {ell} not in [0..{lv}]")
        d = lv - ell
        j = 0
        while d:
            if d & 1:
                v = int(self._up[j, v])
            d >>= 1
            j += 1
        return v

    def root(self, v: int) -> int:
        return self.query(v, 0)

    def bit_size(self) -> int:
        return self._up.size * 64 + self.n * 64
