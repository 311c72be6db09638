import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slgram import errors
from slgram.grammar import (
    RLSLG,
    SLG,
    Grammar,
    GrammarBuilder,
    Run,
    derive_stats,
    expand,
    is_normal_form,
    normalize,
    parse_tree_nodes,
    trivial_builder,
    validate,
)

from conftest import naive_expand, random_grammar


def g_abab() -> Grammar:
    # S -> A A, A -> a b
    b = GrammarBuilder(2, alphabet="ab")
    A = b.new_variable([(0, 1), (1, 1)])
    S = b.new_variable([(A, 1), (A, 1)])
    return b.freeze(S)


def g_power() -> Grammar:
    # S -> A^3, A -> a b  (RLSLG)
    b = GrammarBuilder(2, flavor=RLSLG, alphabet="ab")
    A = b.new_variable([(0, 1), (1, 1)])
    S = b.new_variable([(A, 3)])
    return b.freeze(S)


class TestValidate:
    def test_smallest_wellformed(self):
        validate(g_abab())  # S->AA, A->ab, all exponents 1

    def test_two_cycle(self):
        g = Grammar(1, (1,), ((Run(2, 1),), (Run(1, 1),)), 1)
        with pytest.raises(errors.CyclicGrammar):
            validate(g)

    def test_noncanonical_run(self):
        g = Grammar(1, (1,), ((Run(0, 2), Run(0, 1)),), 1, flavor=RLSLG)
        with pytest.raises(errors.NonCanonicalRun):
            validate(g)

    def test_exponent_in_slg(self):
        g = Grammar(1, (1,), ((Run(0, 2),),), 1, flavor=SLG)
        with pytest.raises(errors.ExponentInSLG):
            validate(g)

    def test_empty_rules_rejected(self):
        g = Grammar(1, (1,), ((),), 1)
        with pytest.raises(errors.EmptyStartExpansion):
            validate(g)
        g2 = Grammar(1, (1,), ((), (Run(0, 1), Run(0, 1))), 2)
        with pytest.raises(errors.EmptyRule):
            validate(g2)


class TestStats:
    def test_abab(self):
        st_ = derive_stats(g_abab())
        g = g_abab()
        S, A = g.start, g.terminal_count + 0
        assert st_.weight[S] == 4
        assert st_.height[S] == 2
        assert st_.size == 4
        assert st_.length[S] == 4
        assert st_.weight[A] == 2

    def test_rlslg_power(self):
        st_ = derive_stats(g_power())
        g = g_power()
        assert st_.weight[g.start] == 6
        assert st_.size == 3

    def test_terminal_start(self):
        b = GrammarBuilder(1, [7])
        v = b.new_variable([(0, 1)])
        g = b.freeze(0)
        st_ = derive_stats(g)
        assert st_.height[0] == 0
        assert st_.weight[0] == 7

    def test_overflow(self):
        b = GrammarBuilder(1, flavor=RLSLG)
        cur = 0
        for _ in range(8):
            cur = b.new_variable([(cur, 256)])
        g = b.freeze(cur)
        with pytest.raises(errors.Overflow):
            derive_stats(g)


class TestExpand:
    def test_abab(self):
        assert expand(g_abab()).tolist() == [0, 1, 0, 1]

    def test_terminal(self):
        assert expand(g_abab(), 1).tolist() == [1]

    def test_power(self):
        assert expand(g_power()).tolist() == [0, 1, 0, 1, 0, 1]

    def test_too_large(self):
        with pytest.raises(errors.TooLarge):
            expand(g_power(), cap=3)

    def test_matches_naive_on_random(self, small_corpus):
        for g in small_corpus:
            assert expand(g).tolist() == naive_expand(g)


class TestNormalize:
    def test_chain_example(self):
        # A -> B C D  =>  A -> B X, X -> C D
        b = GrammarBuilder(3)
        B = b.new_variable([(0, 1), (1, 1), (2, 1)])
        C = b.new_variable([(0, 1), (0, 1), (1, 1)])
        D = b.new_variable([(1, 1), (2, 1), (2, 1)])
        A = b.new_variable([(B, 1), (C, 1), (D, 1)])
        g = b.freeze(A)
        gn, m = normalize(g)
        img = m[A]
        rule = gn.rule(img)
        assert len(rule) == 2 and rule[0].exponent == 1
        head, tail = rule[0].symbol, rule[1].symbol
        assert head == m[B]
        assert gn.rule(tail) == (Run(m[C], 1), Run(m[D], 1))

    def test_power_unchanged(self):
        b = GrammarBuilder(2, flavor=RLSLG)
        B = b.new_variable([(0, 1), (1, 1)])
        A = b.new_variable([(B, 5)])
        g = b.freeze(A)
        gn, m = normalize(g)
        assert gn.rule(m[A]) == (Run(m[B], 5),)

    def test_run_of_two_flattened(self):
        # A -> B^2 C  =>  A -> X C, X -> B B
        b = GrammarBuilder(2, flavor=RLSLG)
        B = b.new_variable([(0, 1), (1, 1)])
        C = b.new_variable([(1, 1), (0, 1)])
        A = b.new_variable([(B, 2), (C, 1)])
        g = b.freeze(A)
        gn, m = normalize(g)
        rule = gn.rule(m[A])
        assert len(rule) == 2
        X = rule[0].symbol
        assert rule[1] == Run(m[C], 1)
        assert gn.rule(X) == (Run(m[B], 2),)  # canonical storage of B B

    def test_preserves_expansions(self, small_corpus):
        for g in small_corpus:
            gn, m = normalize(g)
            assert is_normal_form(gn)
            assert gn.flavor == g.flavor
            for var, img in m.items():
                assert naive_expand(gn, img) == naive_expand(g, var)


class TestTrivialBuilder:
    def test_two_chars(self):
        g = trivial_builder("ab")
        assert expand(g).tolist() == [0, 1]
        assert g.rule(g.start) == (Run(0, 1), Run(1, 1))

    def test_balanced_four(self):
        g = trivial_builder("abcd")
        rule = g.rule(g.start)
        assert len(rule) == 2
        X, Y = rule[0].symbol, rule[1].symbol
        assert [r.symbol for r in g.rule(X)] == [0, 1]
        assert [r.symbol for r in g.rule(Y)] == [2, 3]

    def test_empty(self):
        with pytest.raises(errors.EmptyInput):
            trivial_builder("")

    @given(st.text(alphabet="abcxyz", min_size=1, max_size=300))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip(self, text):
        g = trivial_builder(text)
        assert "".join(g.alphabet[t] for t in expand(g).tolist()) == text
        st_ = derive_stats(g)
        assert st_.size <= 4 * len(text)


class TestInvariants:
    def test_weight_decomposition(self, small_corpus):
        # weight(A) = sum of expansion character weights; |exp(A)| <= weight(A)
        for g in small_corpus:
            st_ = derive_stats(g)
            for sym in range(g.num_symbols):
                chars = naive_expand(g, sym)
                assert st_.weight[sym] == sum(g.terminal_weights[c] for c in chars)
                assert len(chars) <= st_.weight[sym]
                assert st_.length[sym] == len(chars)

    def test_parse_tree_leaves_spell_expansion(self, small_corpus):
        for g in small_corpus[:30]:
            st_ = derive_stats(g)
            if st_.weight[g.start] > 10_000:
                continue
            leaves = [
                (sym, a)
                for sym, a, _ in parse_tree_nodes(g, st_)
                if g.is_terminal(sym)
            ]
            leaves.sort(key=lambda t: t[1])
            assert [s for s, _ in leaves] == naive_expand(g)
            # offsets are the weighted prefix sums
            off = 0
            for sym, a in leaves:
                assert a == off
                off += g.terminal_weights[sym]
