import random
from fractions import Fraction

import pytest

from slgram.contracting import contract
from slgram.errors import OutOfBounds, WeightedUnsupported
from slgram.grammar import RLSLG, SLG, GrammarBuilder, derive_stats, trivial_builder
from slgram.shaping import (
    ceil_log2,
    check_leafy_nice_heights,
    check_nice,
    check_nice_heights,
    leafy_violations,
    make_leafy,
    make_leafy_nice,
    make_nice,
    make_nice_rhs,
    nice_violations,
)

from conftest import naive_expand, random_grammar


def test_ceil_log2():
    assert ceil_log2(Fraction(2)) == 1
    assert ceil_log2(Fraction(3)) == 2
    assert ceil_log2(Fraction(4)) == 2
    assert ceil_log2(Fraction(5, 4)) == 1
    assert ceil_log2(Fraction(16)) == 4
    assert ceil_log2(Fraction(17)) == 5


class TestMakeNice:
    def test_tau_le_2_unchanged(self):
        # contracting input: no child can be tau-heavy for tau <= 2
        rng = random.Random(1)
        for _ in range(10):
            g = random_grammar(rng)
            cg = contract(g)
            for vid in range(cg.grammar.num_variables):
                var = cg.grammar.terminal_count + vid
                rule = make_nice_rhs(cg.grammar, cg.stats, var, Fraction(2))
                assert rule == cg.grammar.rule(var)

    def test_spec_inline_example(self):
        # A -> B C, weights 4+4=8, tau=4: both children inlined once
        b = GrammarBuilder(4)  # terminals d e f g, unit weight
        D = b.new_variable([(0, 1), (1, 1)])  # weight 2
        E = b.new_variable([(2, 1), (3, 1)])  # weight 2
        B = b.new_variable([(D, 1), (E, 1)])  # weight 4
        C = b.new_variable([(E, 1), (D, 1)])  # weight 4
        A = b.new_variable([(B, 1), (C, 1)])  # weight 8
        g = b.freeze(A)
        st = derive_stats(g)
        rule = make_nice_rhs(g, st, A, Fraction(4))
        assert [s for s, _ in rule] == [D, E, E, D]
        assert naive_expand(g, A) == [c for s, _ in rule for c in naive_expand(g, s)]

    def test_conditions_hold_across_taus(self, small_corpus):
        for g in small_corpus[:25]:
            cg = contract(g)
            for tau in (2, 4, 16, 256):
                ng, m = make_nice(cg, tau, tau)
                assert check_nice(ng) == []
                for v, img in m.items():
                    assert naive_expand(ng.grammar, img) == naive_expand(cg.grammar, v)

    def test_tau_r_and_height_bound(self, small_corpus):
        for g in small_corpus[:20]:
            cg = contract(g)
            size = cg.stats.size
            for tau_v in (2, 4):
                ng, _ = make_nice(cg, Fraction(size * tau_v), Fraction(tau_v))
                assert check_nice(ng) == []
                assert check_nice_heights(ng) == []

    def test_fractional_tau(self, small_corpus):
        for g in small_corpus[:10]:
            cg = contract(g)
            ng, _ = make_nice(cg, Fraction(7, 2), Fraction(7, 2))
            assert check_nice(ng) == []


class TestMakeLeafy:
    def fib_text(self, k):
        a, b = "a", "ab"
        for _ in range(k):
            a, b = b, b + a
        return b

    def test_case1_single_leaf(self):
        g = trivial_builder("abcdef")
        lg = make_leafy(g, 4)  # n=6 in [b..2b)
        rule = lg.grammar.rule(lg.grammar.start)
        flat = [s for s, e in rule for _ in range(e)]
        assert len(flat) == 1 and flat[0] in lg.leaf_vars
        assert leafy_violations(lg) == []

    def test_power_case_42(self):
        # S -> A^9, A -> ab, b=3: middle leaf repeats
        b = GrammarBuilder(2, flavor=RLSLG, alphabet="ab")
        A = b.new_variable([(0, 1), (1, 1)])
        S = b.new_variable([(A, 9)])
        g = b.freeze(S)
        lg = make_leafy(g, 3)
        assert leafy_violations(lg) == []
        assert naive_expand(lg.grammar, lg.mapping[S]) == naive_expand(g, S)

    def test_b_equals_1(self):
        g = trivial_builder("abracadabra")
        lg = make_leafy(g, 1)
        assert leafy_violations(lg) == []
        assert naive_expand(lg.grammar) == naive_expand(g)

    def test_rejects_weighted(self):
        b = GrammarBuilder(2, [2, 1])
        A = b.new_variable([(0, 1), (1, 1)])
        g = b.freeze(A)
        with pytest.raises(WeightedUnsupported):
            make_leafy(g, 1)

    def test_b_out_of_range(self):
        g = trivial_builder("ab")
        with pytest.raises(OutOfBounds):
            make_leafy(g, 3)

    def test_roundtrip_random(self, small_corpus):
        rng = random.Random(17)
        for g in small_corpus:
            if not g.is_unweighted():
                continue
            st = derive_stats(g)
            n = st.length[g.start]
            for b in {1, 2, 3, 5, 8}:
                if b > n:
                    continue
                lg = make_leafy(g, b)
                assert leafy_violations(lg) == [], (b, leafy_violations(lg))
                for v, img in lg.mapping.items():
                    assert naive_expand(lg.grammar, img) == naive_expand(g, v)

    def test_fibonacci_texts(self):
        for k in range(3, 10):
            text = self.fib_text(k)
            g = trivial_builder(text)
            for b in (2, 4, 7):
                if b > len(text):
                    continue
                lg = make_leafy(g, b)
                assert leafy_violations(lg) == []
                got = "".join(g.alphabet[c] for c in naive_expand(lg.grammar))
                assert got == text


class TestMakeLeafyNice:
    def test_shapes_and_heights(self, small_corpus):
        for g in small_corpus[:25]:
            if not g.is_unweighted():
                continue
            st = derive_stats(g)
            n = st.length[g.start]
            for b, tr, tv in ((4, 8, 2), (8, 64, 4)):
                if b > n:
                    continue
                ln = make_leafy_nice(g, b, tr, tv)
                assert naive_expand(ln.grammar) == naive_expand(g)
                for v, img in ln.mapping.items():
                    assert naive_expand(ln.grammar, img) == naive_expand(g, v)
                assert check_leafy_nice_heights(ln) == []
                # top part is (tau_r, tau_v)-nice
                top, _ = ln.top_grammar()
                from slgram.shaping import NiceGrammar

                ng = NiceGrammar(top, ln.tau_root, ln.tau_var, ln.d, derive_stats(top))
                assert check_nice(ng) == []

    def test_b1_degenerates(self):
        g = trivial_builder("mississippi")
        ln = make_leafy_nice(g, 1, 4, 2)
        assert naive_expand(ln.grammar) == naive_expand(g)
        for v in ln.leaf_vars:
            assert len(ln.blocks[v]) == 1
