"""Shared fixtures: reference oracles and the randomized grammar corpus."""

from __future__ import annotations

import random

import numpy as np
import pytest

from slgram.grammar import (
    RLSLG,
    SLG,
    Grammar,
    GrammarBuilder,
    Run,
    derive_stats,
    expand,
    trivial_builder,
    validate,
)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def naive_expand(g: Grammar, sym: int | None = None) -> list[int]:
    """Definition-chasing expansion, independent of slgram.grammar.expand."""
    if sym is None:
        sym = g.start
    sigma = g.terminal_count
    out: list[int] = []
    stack: list[tuple[int, int]] = [(sym, 1)]
    while stack:
        s, k = stack.pop()
        if s < sigma:
            out.extend([s] * k)
            continue
        items = [(c, e) for c, e in g.rule(s)] * k
        stack.extend(reversed(items))
    return out


def unroll_weights(g: Grammar, chars: list[int]) -> list[int]:
    """Each character repeated by its weight (the hat-string of Theorem 6.6)."""
    out: list[int] = []
    for c in chars:
        out.extend([c] * g.terminal_weights[c])
    return out


def weighted_access_oracle(g: Grammar, chars: list[int]):
    """Per weighted position i: (terminal, position j, offset <T[0..j)>)."""
    triples = []
    off = 0
    for j, c in enumerate(chars):
        w = g.terminal_weights[c]
        triples.extend([(c, j, off)] * w)
        off += w
    return triples


# ---------------------------------------------------------------------------
# random grammar generator
# ---------------------------------------------------------------------------

def random_grammar(
    rng: random.Random,
    flavor: str = SLG,
    max_vars: int = 12,
    sigma: int = 4,
    weighted: bool = False,
    max_exp: int = 4,
    target_weight_cap: int = 10**6,
) -> Grammar:
    """A small random valid grammar; every variable reachable from start."""
    sigma = max(1, sigma)
    weights = [rng.randint(1, 9) if weighted else 1 for _ in range(sigma)]
    nvars = rng.randint(1, max_vars)
    b = GrammarBuilder(sigma, weights, flavor)
    syms: list[int] = list(range(sigma))
    wt: dict[int, int] = {t: weights[t] for t in range(sigma)}
    for _ in range(nvars):
        k = rng.randint(1 if rng.random() < 0.15 else 2, 5)
        runs = []
        total = 0
        prev = -1
        for _ in range(k):
            sym = rng.choice(syms)
            if flavor == RLSLG and sym == prev:
                continue
            exp = rng.randint(1, max_exp) if flavor == RLSLG and rng.random() < 0.4 else 1
            if total + exp * wt[sym] > target_weight_cap:
                continue
            runs.append((sym, exp))
            total += exp * wt[sym]
            prev = sym
        if not runs:
            runs = [(rng.randrange(sigma), 1)]
            total = wt[runs[0][0]]
        v = b.new_variable(runs)
        syms.append(v)
        wt[v] = max(total, 1)
    # force reachability: a start rule touching the later variables
    top = [s for s in syms[sigma:]][-3:] or [rng.randrange(sigma)]
    runs = []
    prev = -1
    for s in top:
        if flavor == RLSLG and s == prev:
            continue
        runs.append((s, 1))
        prev = s
    start = b.new_variable(runs)
    g = b.freeze(start)
    validate(g)
    return g


def grammar_corpus(seed: int, count: int, **kw) -> list[Grammar]:
    rng = random.Random(seed)
    out = []
    for i in range(count):
        flavor = RLSLG if i % 2 else SLG
        weighted = kw.get("weighted", i % 3 == 0)
        out.append(
            random_grammar(
                rng,
                flavor=flavor,
                weighted=weighted,
                max_vars=kw.get("max_vars", 12),
                sigma=kw.get("sigma", rng.randint(2, 6)),
            )
        )
    return out


@pytest.fixture(scope="session")
def rng():
    return random.Random(0xC0FFEE)


@pytest.fixture(scope="session")
def small_corpus():
    return grammar_corpus(seed=1234, count=60)
