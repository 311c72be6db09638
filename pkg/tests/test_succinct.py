import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slgram import errors
from slgram.succinct import BitVectorRS, BucketedRank, EliasFano, LevelAncestor, PackedString
from slgram.succinct.packed import pack_pool


class TestBucketedRank:
    def test_empty(self):
        br = BucketedRank([], u=10, s=3)
        for y in range(11):
            assert br.rank(y) == 0

    def test_spec_example(self):
        br = BucketedRank([3, 5, 9], u=12, s=4)
        assert br.rank(5) == 1

    def test_unsorted(self):
        with pytest.raises(errors.UnsortedInput):
            BucketedRank([5, 3], u=10, s=2)

    @pytest.mark.parametrize("strategy", ["scan", "bisect"])
    def test_random_vs_naive(self, strategy):
        rng = random.Random(7)
        trials = 0
        while trials < 120_000:
            u = rng.randint(1, 3000)
            xs = sorted(rng.sample(range(u), min(u, rng.randint(0, 40))))
            s = rng.randint(1, u)
            br = BucketedRank(xs, u, s, strategy=strategy)
            for _ in range(200):
                y = rng.randint(0, u)
                assert br.rank(y) == sum(1 for x in xs if x < y)
                trials += 1


class TestBitVector:
    def test_small(self):
        bv = BitVectorRS([1, 0, 1, 1, 0])
        assert [bv.rank1(i) for i in range(6)] == [0, 1, 1, 2, 3, 3]
        assert bv.select1(0) == 0
        assert bv.select1(2) == 3
        with pytest.raises(errors.RankOutOfRange):
            bv.select1(3)

    def test_random_vs_naive(self):
        rng = random.Random(13)
        trials = 0
        while trials < 120_000:
            u = rng.randint(1, 5000)
            bits = [rng.random() < rng.random() for _ in range(u)]
            bv = BitVectorRS(bits)
            ones = [i for i, b in enumerate(bits) if b]
            pref = np.cumsum([0] + [int(b) for b in bits])
            for _ in range(150):
                i = rng.randint(0, u)
                assert bv.rank1(i) == pref[i]
                trials += 1
            for r in range(min(len(ones), 80)):
                assert bv.select1(r) == ones[r]
                trials += 1
            zeros = [i for i, b in enumerate(bits) if not b]
            for r in range(min(len(zeros), 20)):
                assert bv.select0(r) == zeros[r]
                trials += 1


class TestEliasFano:
    def test_direct_readback(self):
        ef = EliasFano([1, 4, 9], u=10)
        assert ef.select(1) == 4

    def test_rank_out_of_range(self):
        ef = EliasFano([1, 4, 9], u=10)
        with pytest.raises(errors.RankOutOfRange):
            ef.select(3)

    def test_roundtrip_random(self):
        rng = random.Random(23)
        trials = 0
        while trials < 110_000:
            u = rng.randint(1, 1 << rng.randint(2, 24))
            n = rng.randint(0, min(u, 500))
            xs = sorted(rng.randrange(u) for _ in range(n))
            ef = EliasFano(xs, u)
            for r, x in enumerate(xs):
                assert ef.select(r) == x
                trials += 1
            trials += 1

    def test_space_bound(self):
        # measured bits <= 2*|X|*(2 + log(2u/|X|)) on random sets
        rng = random.Random(29)
        for _ in range(60):
            u = 1 << rng.randint(4, 22)
            n = rng.randint(1, min(u, 2000))
            xs = sorted(rng.randrange(u) for _ in range(n))
            ef = EliasFano(xs, u)
            bound = 2 * n * (2 + math.log2(2 * u / n))
            assert ef.bit_size() <= bound

    def test_nondecreasing_allowed(self):
        ef = EliasFano([2, 2, 2, 7], u=8)
        assert [ef.select(r) for r in range(4)] == [2, 2, 2, 7]


class TestLevelAncestor:
    def test_self_and_root(self):
        # path 0 <- 1 <- 2 <- 3
        la = LevelAncestor([None, 0, 1, 2])
        assert la.query(3, 3) == 3
        assert la.query(3, 0) == 0
        assert la.query(2, 1) == 1
        with pytest.raises(errors.LevelOutOfRange):
            la.query(1, 2)

    def test_random_forests_vs_chasing(self):
        rng = random.Random(31)
        trials = 0
        while trials < 110_000:
            n = rng.randint(1, 400)
            parents: list[int | None] = []
            for v in range(n):
                parents.append(None if v == 0 or rng.random() < 0.1 else rng.randrange(v))
            la = LevelAncestor(parents)
            for _ in range(250):
                v = rng.randrange(n)
                chain = [v]
                while parents[chain[-1]] is not None:
                    chain.append(parents[chain[-1]])
                chain.reverse()  # chain[l] = ancestor at level l
                ell = rng.randint(0, len(chain) - 1)
                assert la.query(v, ell) == chain[ell]
                trials += 1


class TestPackedString:
    def test_concat_empty(self):
        a = PackedString.pack([0, 1], 2)
        e = PackedString.empty(2)
        assert a.concat(e) == a
        assert e.concat(a).to_list() == [0, 1]

    @given(
        st.integers(2, 40),
        st.lists(st.integers(0, 39), max_size=60),
        st.lists(st.integers(0, 39), max_size=60),
    )
    @settings(max_examples=100, deadline=None)
    def test_ops_match_lists(self, sigma, xs, ys):
        xs = [x % sigma for x in xs]
        ys = [y % sigma for y in ys]
        a = PackedString.pack(xs, sigma)
        b = PackedString.pack(ys, sigma)
        assert a.concat(b).to_list() == xs + ys
        for i in range(len(xs)):
            assert a.char_at(i) == xs[i]
        if xs:
            i = len(xs) // 3
            j = 2 * len(xs) // 3
            assert a.slice(i, j).to_list() == xs[i:j]
        assert a.repeat(3).to_list() == xs * 3

    def test_out_of_bounds(self):
        a = PackedString.pack([1], 3)
        with pytest.raises(errors.OutOfBounds):
            a.char_at(1)
        with pytest.raises(errors.OutOfBounds):
            a.slice(0, 2)

    def test_pool(self):
        blocks = [PackedString.pack([1, 2, 3], 5), PackedString.pack([4, 0], 5)]
        words, offs, cb = pack_pool(blocks)
        assert cb == 3

        def read(off, k):
            word = int(off) // 64
            bit = int(off) % 64
            val = int(words[word]) >> bit
            if bit + cb > 64:
                val |= int(words[word + 1]) << (64 - bit)
            return val & ((1 << cb) - 1)

        assert [read(offs[0] + i * cb, cb) for i in range(3)] == [1, 2, 3]
        assert [read(offs[1] + i * cb, cb) for i in range(2)] == [4, 0]
