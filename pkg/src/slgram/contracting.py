"""Contracting grammar transformations.

A variable is *contracting* when every variable on its right-hand side weighs
at most half of it (terminals may be heavy).  Any weighted SLG embeds
homomorphically into a contracting one with bounded rules; run-length
grammars follow by lifting run rules to weighted terminals, contracting the
residue, and reattaching the runs.

The prefix/suffix grammars over heavy-path labels are produced by a
self-contained fallback strategy (the literature result this replaces is used
as a black box by the theory): each node's accumulated label context is
binarized at the weighted median, splitting at the minimal prefix holding at
least half the weight; when the prefix side is a heavy fragment variable its
pair rule is spliced one level, which provably restores the contracting
invariant at rule size <= 3.  Identical contexts share one fragment variable.
The price is a size bound of O(sum of heavy-path contexts) instead of the
theoretical O(|G|); rule sizes stay constant either way.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .grammar import (
    RLSLG,
    SLG,
    Grammar,
    GrammarBuilder,
    GrammarStats,
    Run,
    derive_stats,
    normalize,
    validate,
)


@dataclass(frozen=True)
class HeavyForest:
    """Arcs from each non-contracting variable to its unique heavy child.

    ``parent[vid]`` is the heavy child (the tree parent when arcs are read
    toward the forest roots, which are exactly the contracting variables).
    ``left_label[vid]`` holds the rule prefix before the heavy child stored
    reversed; ``right_label[vid]`` the suffix in order.  Labels are
    exponent-expanded symbol sequences (heavy children always sit in
    exponent-1 runs, since weight > half excludes repetition).
    """

    parent: tuple[Optional[int], ...]
    left_label: tuple[tuple[int, ...], ...]
    right_label: tuple[tuple[int, ...], ...]

    def roots(self) -> list[int]:
        return [v for v, p in enumerate(self.parent) if p is None]


def build_heavy_forest(g: Grammar, stats: Optional[GrammarStats] = None) -> HeavyForest:
    if stats is None:
        stats = derive_stats(g)
    sigma = g.terminal_count
    weight = stats.weight
    parent: list[Optional[int]] = [None] * g.num_variables
    left: list[tuple[int, ...]] = [()] * g.num_variables
    right: list[tuple[int, ...]] = [()] * g.num_variables
    for vid, rule in enumerate(g.rules):
        wa = weight[sigma + vid]
        flat: list[int] = []
        heavy_at = -1
        for sym, exp in rule:
            for _ in range(exp):
                if sym >= sigma and 2 * weight[sym] > wa:
                    heavy_at = len(flat)
                flat.append(sym)
        if heavy_at >= 0:
            parent[vid] = flat[heavy_at] - sigma
            left[vid] = tuple(reversed(flat[:heavy_at]))
            right[vid] = tuple(flat[heavy_at + 1:])
    return HeavyForest(tuple(parent), tuple(left), tuple(right))


class _MedianComposer:
    """Weighted-median binarization of symbol sequences into fragment rules."""

    def __init__(self, builder: GrammarBuilder, weight_of: dict[int, int]):
        self.builder = builder
        self.weight = weight_of
        self._memo: dict[tuple[int, ...], int] = {}
        self.fragment_vars: list[int] = []

    def _split(self, seq: tuple[int, ...], total: int) -> int:
        # minimal proper prefix with at least half the weight
        acc = 0
        for i, s in enumerate(seq):
            acc += self.weight[s]
            if 2 * acc >= total and i + 1 < len(seq):
                return i + 1
            if i + 2 == len(seq):
                return i + 1
        raise AssertionError("split on sequence shorter than 2")

    def top_rule(self, seq: Sequence[int]) -> list[int]:
        """Symbols (<=3) whose concatenated expansion equals the sequence's.

        Every returned fragment variable weighs at most half the sequence.
        """
        seq = tuple(seq)
        if len(seq) <= 1:
            return list(seq)
        total = sum(self.weight[s] for s in seq)
        cut = self._split(seq, total)
        l, r = seq[:cut], seq[cut:]
        wl = sum(self.weight[s] for s in l)
        rsym = self.symbol(r)
        if len(l) > 1 and 2 * wl > total:
            lcut = self._split(l, wl)
            return [self.symbol(l[:lcut]), self.symbol(l[lcut:]), rsym]
        return [self.symbol(l), rsym]

    def symbol(self, seq: tuple[int, ...]) -> int:
        if len(seq) == 1:
            return seq[0]
        got = self._memo.get(seq)
        if got is not None:
            return got
        rule = self.top_rule(seq)
        var = self.builder.new_variable([(s, 1) for s in rule])
        self.weight[var] = sum(self.weight[s] for s in seq)
        self._memo[seq] = var
        self.fragment_vars.append(var)
        return var


@dataclass(frozen=True)
class PrefixGrammarResult:
    grammar: Grammar
    node_symbol: tuple[Optional[int], ...]  # per node; None when the path is empty


def prefix_grammar(
    parent: Sequence[Optional[int]],
    labels: Sequence[Sequence[int]],
    label_weights: Sequence[int],
) -> PrefixGrammarResult:
    """Per-node variables expanding to root-to-node label concatenations.

    ``parent[v]`` points toward the root (None at roots); ``labels[v]`` is the
    symbol sequence on the arc into ``v`` (roots may carry one too).  Label
    symbols act as weighted terminals of the produced fragment; the fragment
    is contracting over that alphabet with rules of <= 3 symbols.
    """
    sigma = max(len(label_weights), 1)
    builder = GrammarBuilder(sigma, list(label_weights) or [1], SLG)
    weight_of: dict[int, int] = {t: label_weights[t] for t in range(len(label_weights))}
    comp = _MedianComposer(builder, weight_of)

    n = len(parent)
    order: list[int] = []
    state = [0] * n
    for v in range(n):
        chain = []
        x: Optional[int] = v
        while x is not None and state[x] == 0:
            chain.append(x)
            state[x] = 1
            x = parent[x]
        order.extend(reversed(chain))
    seqs: list[tuple[int, ...]] = [()] * n
    for v in order:
        p = parent[v]
        base = seqs[p] if p is not None else ()
        seqs[v] = base + tuple(labels[v])

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10000 + 4 * max((len(s) for s in seqs), default=0)))
    try:
        node_symbol = tuple(comp.symbol(s) if s else None for s in seqs)
    finally:
        sys.setrecursionlimit(limit)
    # a throwaway start so the fragment is a well-formed Grammar for checking
    nonempty = [s for s in node_symbol if s is not None]
    g = builder.freeze(nonempty[0] if nonempty else 0, check=False)
    return PrefixGrammarResult(g, node_symbol)


@dataclass(frozen=True)
class ContractingGrammar:
    """A contracting grammar, its measured rule bound d, and the source map."""

    grammar: Grammar
    d: int
    mapping: dict[int, int]  # original variable -> symbol with equal expansion
    stats: GrammarStats

    @property
    def flavor(self) -> str:
        return self.grammar.flavor


def contracting_violations(g: Grammar, stats: Optional[GrammarStats] = None) -> list[tuple[int, int]]:
    """(variable, child) pairs violating 2*weight(child) <= weight(variable)."""
    if stats is None:
        stats = derive_stats(g)
    sigma = g.terminal_count
    out = []
    for vid, rule in enumerate(g.rules):
        wa = stats.weight[sigma + vid]
        for sym, _ in rule:
            if sym >= sigma and 2 * stats.weight[sym] > wa:
                out.append((sigma + vid, sym))
    return out


def contract_slg(g: Grammar) -> ContractingGrammar:
    """Homomorphic embedding of a weighted SLG into a contracting SLG."""
    if g.flavor != SLG:
        raise ValueError("contract_slg expects an SLG; use contract_rlslg")
    gn, m1 = normalize(g)
    stats = derive_stats(gn)
    sigma = gn.terminal_count
    forest = build_heavy_forest(gn, stats)

    out = GrammarBuilder(sigma, gn.terminal_weights, SLG, gn.alphabet)
    weight_of: dict[int, int] = {t: gn.terminal_weights[t] for t in range(sigma)}
    img: dict[int, int] = {}
    for vid in range(gn.num_variables):
        v = out.new_variable()
        img[sigma + vid] = v
        weight_of[v] = stats.weight[sigma + vid]

    def phi(sym: int) -> int:
        return sym if sym < sigma else img[sym]

    comp = _MedianComposer(out, weight_of)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 100000))
    try:
        for vid in range(gn.num_variables):
            seq_l: list[int] = []
            r_parts: list[tuple[int, ...]] = []  # right contexts, outermost-first
            cur = vid
            while forest.parent[cur] is not None:
                seq_l.extend(phi(s) for s in reversed(forest.left_label[cur]))
                r_parts.append(forest.right_label[cur])
                cur = forest.parent[cur]
            seq_r = [phi(s) for part in reversed(r_parts) for s in part]
            root_rule = [(phi(s), e) for s, e in gn.rules[cur]]
            rule = [(s, 1) for s in comp.top_rule(seq_l)] + root_rule + [
                (s, 1) for s in comp.top_rule(seq_r)
            ]
            out.set_rule(img[sigma + vid], rule)
    finally:
        sys.setrecursionlimit(limit)

    _fix_heavy_children(out, comp.fragment_vars, weight_of, set(img.values()))
    start = phi(m1[g.start]) if g.start >= g.terminal_count else g.start
    result = out.freeze(start, check=False)
    mapping = {v: phi(m1[v]) for v in m1}
    return _finish(result, mapping)


def _fix_heavy_children(
    out: GrammarBuilder,
    fragment_vars: list[int],
    weight_of: dict[int, int],
    image_vars: set[int],
) -> None:
    """One-step fix: splice the rule of any heavy image-variable child."""
    for f in fragment_vars:
        rule = out.get_rule(f)
        wf = weight_of[f]
        fixed: list[tuple[int, int]] = []
        changed = False
        for sym, exp in rule:
            if sym in image_vars and 2 * weight_of[sym] > wf:
                assert exp == 1, "heavy child repeated"
                fixed.extend(out.get_rule(sym))
                changed = True
            else:
                fixed.append((sym, exp))
        if changed:
            out.set_rule(f, fixed)


def _finish(g: Grammar, mapping: dict[int, int]) -> ContractingGrammar:
    validate(g)
    stats = derive_stats(g)
    assert not contracting_violations(g, stats), "internal: output not contracting"
    d = max((len(r) for r in g.rules), default=1)
    return ContractingGrammar(g, d, mapping, stats)


def contract_rlslg(g: Grammar) -> ContractingGrammar:
    """Contracting transformation for run-length grammars.

    Normalizes, lifts run rules to weighted terminals, contracts the residual
    SLG, reattaches run rules, and fixes heavy run-variable children by a
    single inlining (run variables are contracting by themselves: exponent
    k >= 2 means the base weighs at most half).
    """
    gn, m1 = normalize(g)
    stats = derive_stats(gn)
    sigma = gn.terminal_count

    run_vars = [
        sigma + vid
        for vid, rule in enumerate(gn.rules)
        if len(rule) == 1 and rule[0].exponent >= 2
    ]
    run_pos = {v: i for i, v in enumerate(run_vars)}
    other_vars = [sigma + vid for vid in range(gn.num_variables) if sigma + vid not in run_pos]
    other_pos = {v: i for i, v in enumerate(other_vars)}

    # residual SLG over terminals Sigma + R
    sigma2 = sigma + len(run_vars)
    weights2 = list(gn.terminal_weights) + [stats.weight[v] for v in run_vars]

    def enc(sym: int) -> int:
        if sym < sigma:
            return sym
        if sym in run_pos:
            return sigma + run_pos[sym]
        return sigma2 + other_pos[sym]

    b2 = GrammarBuilder(sigma2, weights2, SLG)
    for v in other_vars:
        b2.new_variable()
    for v in other_vars:
        b2.set_rule(enc(v), [(enc(s), e) for s, e in gn.rule(v)])
    start2 = enc(m1[g.start]) if g.start >= g.terminal_count else g.start
    g2 = b2.freeze(start2, check=False)
    validate(g2)
    ch = contract_slg(g2)

    # reassemble as an RLSLG: original terminals, run vars back as variables
    chg = ch.grammar
    out = GrammarBuilder(sigma, gn.terminal_weights, RLSLG, gn.alphabet)
    run_out: dict[int, int] = {}
    for v in run_vars:
        run_out[v] = out.new_variable()
    ch_out: dict[int, int] = {}
    for cvid in range(chg.num_variables):
        ch_out[chg.terminal_count + cvid] = out.new_variable()

    def dec(ch_sym: int) -> int:
        # chg terminal space mirrors g2's: Sigma + R-aliases
        if ch_sym < sigma:
            return ch_sym
        if ch_sym < sigma2:
            return run_out[run_vars[ch_sym - sigma]]
        return ch_out[ch_sym]

    def out_img(sym: int) -> int:
        # image of a gn symbol in the output
        if sym < sigma:
            return sym
        if sym in run_pos:
            return run_out[sym]
        return dec(ch.mapping[enc(sym)])

    weight_of: dict[int, int] = {t: gn.terminal_weights[t] for t in range(sigma)}
    for v in run_vars:
        base, exp = gn.rule(v)[0]
        out.set_rule(run_out[v], [(out_img(base), exp)])
        weight_of[run_out[v]] = stats.weight[v]
    for cvid in range(chg.num_variables):
        csym = chg.terminal_count + cvid
        out.set_rule(ch_out[csym], [(dec(s), e) for s, e in chg.rule(csym)])
        weight_of[ch_out[csym]] = ch.stats.weight[csym]

    # fix heavy run-variable children of contracted variables by one inlining
    run_out_set = set(run_out.values())
    for cvid in range(chg.num_variables):
        v = ch_out[chg.terminal_count + cvid]
        rule = out.get_rule(v)
        wv = weight_of[v]
        fixed: list[tuple[int, int]] = []
        changed = False
        for sym, exp in rule:
            if sym in run_out_set and 2 * weight_of[sym] > wv:
                assert exp == 1
                fixed.extend(out.get_rule(sym))
                changed = True
            else:
                fixed.append((sym, exp))
        if changed:
            out.set_rule(v, fixed)

    start = out_img(m1[g.start]) if g.start >= g.terminal_count else g.start
    result = out.freeze(start, check=False)
    mapping = {v: out_img(m1[v]) for v in m1}
    return _finish(result, mapping)


def contract(g: Grammar) -> ContractingGrammar:
    """Flavor dispatch."""
    return contract_slg(g) if g.flavor == SLG else contract_rlslg(g)
