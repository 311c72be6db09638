"""Weighted (run-length) straight-line grammars.

Symbols are dense integers: ids ``[0..sigma)`` are terminals, ids
``[sigma..sigma+V)`` are variables (variable ``v`` has rule ``rules[v - sigma]``).
A rule is a tuple of runs ``(symbol, exponent)``.

Two flavors exist.  ``SLG`` rules carry exponent 1 on every run and may repeat
a symbol in adjacent runs (``S -> A A`` is two runs); the size of a rule is its
symbol count.  ``RLSLG`` rules are run-length canonical (adjacent runs hold
distinct symbols) and the size of a rule is its run count.

Terminals carry positive integer weights; the weight of a string is the sum of
its character weights, and queries address *weighted* positions.  Unweighted
grammars are the special case of all weights 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    CyclicGrammar,
    EmptyInput,
    EmptyRule,
    EmptyStartExpansion,
    ExponentInSLG,
    GrammarError,
    NonCanonicalRun,
    Overflow,
    TooLarge,
)

SLG = "slg"
RLSLG = "rlslg"

#: weights/lengths are capped at this many bits by default (native word)
DEFAULT_WEIGHT_BITS = 63

#: default cap on characters an expansion may emit
DEFAULT_EXPAND_CAP = 1 << 27


class Run(NamedTuple):
    symbol: int
    exponent: int


Rule = tuple  # tuple[Run, ...]


def canonical_runs(items: Iterable[tuple[int, int]], flavor: str = RLSLG) -> tuple[Run, ...]:
    """Normalize a (symbol, exponent) sequence into the stored rule form.

    RLSLG: merge adjacent runs over the same symbol, drop exponent-0 runs.
    SLG: keep exponent-1 runs; larger exponents are split out (they come from
    splicing run-encoded material into an SLG rule, which cannot happen in
    well-formed pipelines but is cheap to support for builders).
    """
    out: list[Run] = []
    for sym, exp in items:
        if exp == 0:
            continue
        if exp < 0:
            raise GrammarError(f"negative exponent {exp}")
        if flavor == SLG:
            out.extend(Run(sym, 1) for _ in range(exp))
        elif out and out[-1].symbol == sym:
            out[-1] = Run(sym, out[-1].exponent + exp)
        else:
            out.append(Run(sym, exp))
    return tuple(out)


@dataclass(frozen=True)
class Grammar:
    """Immutable grammar; safe to share across threads after validate()."""

    terminal_count: int
    terminal_weights: tuple[int, ...]
    rules: tuple[tuple[Run, ...], ...]
    start: int
    flavor: str = SLG
    alphabet: Optional[str] = None  # display characters, len == terminal_count

    @property
    def num_variables(self) -> int:
        return len(self.rules)

    @property
    def num_symbols(self) -> int:
        return self.terminal_count + len(self.rules)

    def is_terminal(self, sym: int) -> bool:
        return sym < self.terminal_count

    def is_variable(self, sym: int) -> bool:
        return sym >= self.terminal_count

    def rule(self, sym: int) -> tuple[Run, ...]:
        return self.rules[sym - self.terminal_count]

    def is_unweighted(self) -> bool:
        return all(w == 1 for w in self.terminal_weights)

    def display_terminal(self, t: int) -> str:
        if self.alphabet is not None and t < len(self.alphabet):
            return repr(self.alphabet[t])
        return f"#{t}"


@dataclass(frozen=True)
class GrammarStats:
    """Per-symbol derived quantities plus the grammar size |G|."""

    weight: tuple[int, ...]  # indexed by symbol
    length: tuple[int, ...]  # expansion length, indexed by symbol
    height: tuple[int, ...]  # indexed by symbol
    size: int  # sum of rle-rule lengths (symbol counts for SLG)
    topo: tuple[int, ...]  # variables, children-before-parents


def validate(g: Grammar) -> None:
    """Check every Grammar invariant; raise on the first violation."""
    sigma = g.terminal_count
    if sigma < 1:
        raise GrammarError("grammar needs at least one terminal")
    if len(g.terminal_weights) != sigma:
        raise GrammarError("terminal_weights length != terminal_count")
    for t, w in enumerate(g.terminal_weights):
        if w < 1:
            raise GrammarError(f"terminal {t} has non-positive weight {w}")
    nsym = g.num_symbols
    if not (0 <= g.start < nsym):
        raise GrammarError(f"start symbol {g.start} out of range")
    if g.flavor not in (SLG, RLSLG):
        raise GrammarError(f"unknown flavor {g.flavor!r}")

    for vid, rule in enumerate(g.rules):
        var = sigma + vid
        if not rule:
            if var == g.start:
                raise EmptyStartExpansion(f"start variable {var} has an empty rule")
            raise EmptyRule(f"variable {var} has an empty rule")
        prev = -1
        for sym, exp in rule:
            if not (0 <= sym < nsym):
                raise GrammarError(f"variable {var}: symbol {sym} out of range")
            if exp < 1:
                raise GrammarError(f"variable {var}: exponent {exp} < 1")
            if g.flavor == SLG and exp != 1:
                raise ExponentInSLG(f"variable {var}: run exponent {exp} in an SLG")
            if g.flavor == RLSLG and sym == prev:
                raise NonCanonicalRun(f"variable {var}: adjacent runs share symbol {sym}")
            prev = sym

    _topological_order(g)  # raises CyclicGrammar


def _topological_order(g: Grammar) -> list[int]:
    """Variables in children-before-parents order; raises CyclicGrammar."""
    sigma = g.terminal_count
    state = [0] * g.num_variables  # 0 new, 1 on stack, 2 done
    order: list[int] = []
    for root in range(g.num_variables):
        if state[root] != 0:
            continue
        stack: list[tuple[int, int]] = [(root, 0)]
        state[root] = 1
        while stack:
            vid, pos = stack.pop()
            rule = g.rules[vid]
            advanced = False
            while pos < len(rule):
                sym = rule[pos].symbol
                pos += 1
                if sym >= sigma:
                    cid = sym - sigma
                    if state[cid] == 1:
                        raise CyclicGrammar(f"variable {sigma + cid} reaches itself")
                    if state[cid] == 0:
                        stack.append((vid, pos))
                        stack.append((cid, 0))
                        state[cid] = 1
                        advanced = True
                        break
            if not advanced and pos >= len(rule):
                state[vid] = 2
                order.append(sigma + vid)
    return order


def derive_stats(g: Grammar, max_bits: int = DEFAULT_WEIGHT_BITS) -> GrammarStats:
    """Weights, expansion lengths and heights by the recursive definitions."""
    sigma = g.terminal_count
    cap = 1 << max_bits
    weight = [0] * g.num_symbols
    length = [0] * g.num_symbols
    height = [0] * g.num_symbols
    for t in range(sigma):
        weight[t] = g.terminal_weights[t]
        length[t] = 1
    topo = _topological_order(g)
    size = 0
    for var in topo:
        rule = g.rule(var)
        size += len(rule)
        w = 0
        n = 0
        h = 0
        for sym, exp in rule:
            w += exp * weight[sym]
            n += exp * length[sym]
            if height[sym] >= h:
                h = height[sym]
        if w >= cap:
            raise Overflow(f"weight of variable {var} exceeds 2^{max_bits}")
        weight[var] = w
        length[var] = n
        height[var] = h + 1
    return GrammarStats(tuple(weight), tuple(length), tuple(height), size, tuple(topo))


def expand(
    g: Grammar,
    sym: Optional[int] = None,
    cap: int = DEFAULT_EXPAND_CAP,
    stats: Optional[GrammarStats] = None,
) -> np.ndarray:
    """The unique terminal string exp(sym) as an int64 array.

    This is the oracle every test compares against.  Memoizes subtree
    expansions; raises TooLarge when the output (or the total memoized
    material) would exceed ``cap`` characters.
    """
    if sym is None:
        sym = g.start
    if stats is None:
        stats = derive_stats(g)
    if stats.length[sym] > cap:
        raise TooLarge(f"expansion of {sym} has {stats.length[sym]} > {cap} characters")
    sigma = g.terminal_count
    memo: dict[int, np.ndarray] = {}
    budget = max(4 * cap, stats.length[sym])

    if sym < sigma:
        return np.array([sym], dtype=np.int64)

    # fill memo bottom-up over symbols reachable from sym
    needed = _reachable_variables(g, sym)
    for var in stats.topo:
        if var not in needed:
            continue
        parts: list[np.ndarray] = []
        for child, exp in g.rule(var):
            piece = memo[child] if child >= sigma else np.array([child], dtype=np.int64)
            parts.append(np.tile(piece, exp) if exp > 1 else piece)
        arr = np.concatenate(parts) if len(parts) > 1 else parts[0]
        budget -= len(arr)
        if budget < 0:
            raise TooLarge(f"expansion working set exceeded {4 * cap} characters")
        memo[var] = arr
    return memo[sym]


def _reachable_variables(g: Grammar, sym: int) -> set[int]:
    sigma = g.terminal_count
    seen: set[int] = set()
    stack = [sym] if sym >= sigma else []
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        for child, _ in g.rule(v):
            if child >= sigma and child not in seen:
                stack.append(child)
    return seen


def expand_to_text(g: Grammar, sym: Optional[int] = None, cap: int = DEFAULT_EXPAND_CAP) -> str:
    """Expansion rendered through the display alphabet (tests/CLI convenience)."""
    arr = expand(g, sym, cap)
    if g.alphabet is not None:
        return "".join(g.alphabet[t] for t in arr.tolist())
    return " ".join(f"#{t}" for t in arr.tolist())


class GrammarBuilder:
    """Accumulates rules with stable dense ids, then freezes to a Grammar."""

    def __init__(
        self,
        terminal_count: int,
        terminal_weights: Optional[Sequence[int]] = None,
        flavor: str = SLG,
        alphabet: Optional[str] = None,
    ):
        self.sigma = terminal_count
        self.weights = list(terminal_weights) if terminal_weights is not None else [1] * terminal_count
        self.flavor = flavor
        self.alphabet = alphabet
        self.rules: list[Optional[tuple[Run, ...]]] = []

    def new_variable(self, runs: Optional[Iterable[tuple[int, int]]] = None) -> int:
        self.rules.append(None)
        var = self.sigma + len(self.rules) - 1
        if runs is not None:
            self.set_rule(var, runs)
        return var

    def set_rule(self, var: int, runs: Iterable[tuple[int, int]]) -> None:
        self.rules[var - self.sigma] = canonical_runs(runs, self.flavor)

    def get_rule(self, var: int) -> tuple[Run, ...]:
        rule = self.rules[var - self.sigma]
        assert rule is not None, f"variable {var} has no rule yet"
        return rule

    def freeze(self, start: int, check: bool = True) -> Grammar:
        assert all(r is not None for r in self.rules), "builder has unset rules"
        g = Grammar(
            terminal_count=self.sigma,
            terminal_weights=tuple(self.weights),
            rules=tuple(self.rules),  # type: ignore[arg-type]
            start=start,
            flavor=self.flavor,
            alphabet=self.alphabet,
        )
        if check:
            validate(g)
        return g


def prune_unreachable(g: Grammar, keep: Iterable[int] = ()) -> tuple[Grammar, dict[int, int]]:
    """Drop variables unreachable from start (and `keep`); returns (g', old->new)."""
    sigma = g.terminal_count
    roots = [g.start] + [s for s in keep if s >= sigma]
    live: set[int] = set()
    stack = [s for s in roots if s >= sigma]
    while stack:
        v = stack.pop()
        if v in live:
            continue
        live.add(v)
        for child, _ in g.rule(v):
            if child >= sigma and child not in live:
                stack.append(child)
    order = sorted(live)
    remap = {t: t for t in range(sigma)}
    for new_off, old in enumerate(order):
        remap[old] = sigma + new_off
    rules = tuple(
        tuple(Run(remap[sym], exp) for sym, exp in g.rule(old)) for old in order
    )
    out = Grammar(sigma, g.terminal_weights, rules, remap[g.start], g.flavor, g.alphabet)
    return out, remap


# ---------------------------------------------------------------------------
# normal form (pairs and single powers)
# ---------------------------------------------------------------------------

def normalize(g: Grammar) -> tuple[Grammar, dict[int, int]]:
    """Rewrite into normal form: every rule is a pair or a single power B^k (k>2).

    Variables of expansion length <= 2 are encoded directly as their terminal
    expansion.  Unary rules are dissolved.  Returns the new grammar plus a
    mapping old-variable -> new-symbol preserving expansions.
    """
    validate(g)
    stats = derive_stats(g)
    sigma = g.terminal_count
    out = GrammarBuilder(sigma, g.terminal_weights, g.flavor, g.alphabet)
    mapping: dict[int, int] = {t: t for t in range(sigma)}

    for var in stats.topo:
        rule = g.rule(var)
        if stats.length[var] <= 2:
            chars = _tiny_expansion_iter(g, var)
            mapping[var] = out.new_variable([(c, 1) for c in chars])
            continue
        if len(rule) == 1:
            sym, exp = rule[0]
            img = mapping[sym]
            if exp == 1:
                mapping[var] = img  # dissolve unary rule
            else:
                mapping[var] = out.new_variable([(img, exp)])
            continue
        # chain the per-run symbols head/tail: A -> a0 X, X -> a1 Y, ...
        atoms: list[int] = []
        for sym, exp in rule:
            img = mapping[sym]
            if exp == 1:
                atoms.append(img)
            else:
                atoms.append(out.new_variable([(img, exp)]))
        tail = out.new_variable([(atoms[-2], 1), (atoms[-1], 1)])
        for a in reversed(atoms[1:-2]):
            tail = out.new_variable([(a, 1), (tail, 1)])
        if len(atoms) > 2:
            tail = out.new_variable([(atoms[0], 1), (tail, 1)])
        mapping[var] = tail

    start = mapping[g.start] if g.start >= sigma else g.start
    return out.freeze(start), {v: mapping[v] for v in range(sigma, g.num_symbols)}


def _tiny_expansion_iter(g: Grammar, sym: int) -> list[int]:
    sigma = g.terminal_count
    res: list[int] = []
    stack: list[tuple[int, int]] = [(sym, 1)]
    while stack:
        s, k = stack.pop()
        if s < sigma:
            res.extend([s] * k)
        else:
            items = [(c, e) for c, e in g.rule(s)]
            if k > 1:
                items = items * k
            stack.extend(reversed(items))
        if len(res) > 2:
            raise GrammarError("tiny_expansion called on a long symbol")
    return res


def is_normal_form(g: Grammar) -> bool:
    """True iff every rule is a pair, a single power, or <= 2 direct terminals."""
    sigma = g.terminal_count
    for rule in g.rules:
        total = sum(e for _, e in rule)
        if all(sym < sigma for sym, _ in rule) and total <= 2:
            continue  # direct encoding of a short expansion
        if total == 2 and len(rule) <= 2:
            continue  # pair (possibly stored as one exponent-2 run)
        if len(rule) == 1 and rule[0].exponent > 2:
            continue  # single power
        return False
    return True


# ---------------------------------------------------------------------------
# trivial builder (plain text -> balanced SLG)
# ---------------------------------------------------------------------------

def trivial_builder(
    text: Sequence[int] | str | bytes,
    weights: Optional[Sequence[int]] = None,
) -> Grammar:
    """A balanced binary SLG producing exactly `text` (size O(n))."""
    if len(text) == 0:
        raise EmptyInput("cannot build a grammar for the empty string")
    alphabet: Optional[str] = None
    if isinstance(text, str):
        chars = sorted(set(text))
        alphabet = "".join(chars)
        ids = {c: i for i, c in enumerate(chars)}
        seq = [ids[c] for c in text]
        sigma = len(chars)
    elif isinstance(text, (bytes, bytearray)):
        chars = sorted(set(text))
        ids = {c: i for i, c in enumerate(chars)}
        alphabet = "".join(chr(c) for c in chars)
        seq = [ids[c] for c in text]
        sigma = len(chars)
    else:
        seq = list(text)
        sigma = max(seq) + 1 if seq else 1
    out = GrammarBuilder(sigma, weights, SLG, alphabet)

    def build(lo: int, hi: int) -> int:
        n = hi - lo
        if n == 1:
            return seq[lo]
        mid = lo + (n + 1) // 2
        return out.new_variable([(build(lo, mid), 1), (build(mid, hi), 1)])

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * len(seq).bit_length() + 100))
    try:
        if len(seq) == 1:
            start = out.new_variable([(seq[0], 1)])
        else:
            start = build(0, len(seq))
    finally:
        sys.setrecursionlimit(old)
    return out.freeze(start)


# ---------------------------------------------------------------------------
# parse tree (reference implementation used by oracles and invariant checks)
# ---------------------------------------------------------------------------

def parse_tree_nodes(g: Grammar, stats: Optional[GrammarStats] = None, max_nodes: int = 10_000_000):
    """Yield (symbol, weighted_offset, depth) for every node of P_G, preorder.

    Definition-faithful enumeration; intended for small instances.
    """
    if stats is None:
        stats = derive_stats(g)
    weight = stats.weight
    sigma = g.terminal_count
    count = 0
    stack: list[tuple[int, int, int]] = [(g.start, 0, 0)]
    while stack:
        sym, a, depth = stack.pop()
        count += 1
        if count > max_nodes:
            raise TooLarge(f"parse tree exceeds {max_nodes} nodes")
        yield sym, a, depth
        if sym < sigma:
            continue
        children: list[tuple[int, int, int]] = []
        off = a
        for child, exp in g.rule(sym):
            for _ in range(exp):
                children.append((child, off, depth + 1))
                off += weight[child]
        stack.extend(reversed(children))
