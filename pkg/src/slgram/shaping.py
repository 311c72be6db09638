"""Grammar reshaping: tau-nice and b-leafy forms.

*Nice* rules bound fan-out and local run density so child queries can be
answered in constant time: every variable child is tau-light, the rule has at
most 2*d*tau runs, and any substring of the rule weighing at most a 1/tau
fraction spans at most 2*d*ceil(log tau) runs.  The construction exhaustively
replaces tau-heavy children of a contracting grammar by their rules.

*Leafy* grammars split variables into leaf variables (explicit packed blocks
of [b..2b) terminals) and top variables (variable-only rules), so traversal
can emit a whole block per step.

All tau comparisons are exact: tau is held as a Fraction and tests like
"weight(B) > weight(A)/tau" are evaluated by cross-multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .contracting import ContractingGrammar, contract
from .errors import BlockTooWide, OutOfBounds, WeightedUnsupported
from .grammar import (
    RLSLG,
    SLG,
    Grammar,
    GrammarBuilder,
    GrammarStats,
    Run,
    derive_stats,
    normalize,
    parse_tree_nodes,
    validate,
)
from .succinct.packed import PackedString, char_bits

#: leaf blocks are refused beyond this many bits (configurable per call)
DEFAULT_BLOCK_BUDGET_BITS = 1 << 16


def as_tau(tau) -> Fraction:
    t = Fraction(tau)
    if t <= 1:
        raise ValueError(f"tau must exceed 1, got {tau}")
    return t


def ceil_log2(tau: Fraction) -> int:
    """Smallest integer L with 2^L >= tau (tau > 1 gives L >= 1)."""
    num, den = tau.numerator, tau.denominator
    L = 0
    while (1 << L) * den < num:
        L += 1
    return L


@dataclass(frozen=True)
class NiceGrammar:
    grammar: Grammar
    tau_root: Fraction
    tau_var: Fraction
    d: int
    stats: GrammarStats


def make_nice_rhs(
    g: Grammar,
    stats: GrammarStats,
    var: int,
    tau: Fraction,
) -> tuple[Run, ...]:
    """The rule after exhaustively inlining tau-heavy variable children."""
    sigma = g.terminal_count
    weight = stats.weight
    wa = weight[var]
    num, den = tau.numerator, tau.denominator
    out: list[Run] = []
    stack: list[Run] = list(reversed(g.rule(var)))
    merge = g.flavor == RLSLG
    while stack:
        sym, exp = stack.pop()
        if sym >= sigma and weight[sym] * num > wa * den:
            inner = list(g.rule(sym))
            if exp > 1:
                inner = inner * exp
            stack.extend(reversed(inner))
            continue
        if merge and out and out[-1].symbol == sym:
            out[-1] = Run(sym, out[-1].exponent + exp)
        else:
            out.append(Run(sym, exp))
    return tuple(out)


def make_nice(
    cg: ContractingGrammar,
    tau_root,
    tau_var,
) -> tuple[NiceGrammar, dict[int, int]]:
    """(tau_r, tau_v)-nice grammar over the same symbols; identity mapping."""
    tau_r = as_tau(tau_root)
    tau_v = as_tau(tau_var)
    if tau_r < tau_v:
        raise ValueError("tau_root must be >= tau_var")
    g = cg.grammar
    sigma = g.terminal_count
    rules = tuple(
        make_nice_rhs(g, cg.stats, sigma + vid, tau_r if sigma + vid == g.start else tau_v)
        for vid in range(g.num_variables)
    )
    out = Grammar(sigma, g.terminal_weights, rules, g.start, g.flavor, g.alphabet)
    validate(out)
    ng = NiceGrammar(out, tau_r, tau_v, cg.d, derive_stats(out))
    mapping = {sigma + vid: sigma + vid for vid in range(g.num_variables)}
    return ng, mapping


def nice_violations(
    g: Grammar,
    stats: GrammarStats,
    var: int,
    tau: Fraction,
    d: int,
) -> list[str]:
    """Literal checks of the three niceness conditions for one variable."""
    sigma = g.terminal_count
    weight = stats.weight
    wa = weight[var]
    num, den = tau.numerator, tau.denominator
    rule = g.rule(var)
    out: list[str] = []
    for sym, _ in rule:
        if sym >= sigma and weight[sym] * num > wa * den:
            out.append(f"condition 1: child {sym} of {var} is tau-heavy")
    m = len(rule)
    if m * den > 2 * d * num:
        out.append(f"condition 2: rule of {var} has {m} runs > 2d*tau")
    # condition 3: densest substring spanning runs i..j weighs
    # w_i + full(i+1..j-1) + w_j (one symbol of each border run)
    bound = 2 * d * ceil_log2(tau)
    full = [0] * (m + 1)
    for t, (sym, exp) in enumerate(rule):
        full[t + 1] = full[t] + exp * weight[sym]
    j = 0
    for i in range(m):
        if j < i:
            j = i
        while j + 1 < m:
            # densest substring touching runs i..j+1: one symbol of each
            # border run plus all full runs strictly between
            wmin = (
                weight[rule[i].symbol]
                + (full[j + 1] - full[i + 1])
                + weight[rule[j + 1].symbol]
            )
            if wmin * num <= wa * den:
                j += 1
            else:
                break
        if j - i + 1 > bound:
            out.append(
                f"condition 3: runs {i}..{j} of {var} fit in a 1/tau window "
                f"but span {j - i + 1} > {bound}"
            )
    return out


def check_nice(ng: NiceGrammar) -> list[str]:
    g = ng.grammar
    sigma = g.terminal_count
    out: list[str] = []
    for vid in range(g.num_variables):
        var = sigma + vid
        tau = ng.tau_root if var == g.start else ng.tau_var
        out.extend(nice_violations(g, ng.stats, var, tau, ng.d))
    return out


def check_nice_heights(ng: NiceGrammar, max_weight: int = 10_000) -> list[str]:
    """Exact per-node depth bound of a (tau_r, tau_v)-nice grammar.

    depth(A, a) <= 2 + max(0, log_{tau_v}(W / (tau_r * weight(A)))), checked as
    tau_r * tau_v^(depth-2) * weight(A) <= W in exact integer arithmetic.
    """
    g = ng.grammar
    stats = ng.stats
    W = stats.weight[g.start]
    if W > max_weight:
        return []
    rn, rd = ng.tau_root.numerator, ng.tau_root.denominator
    vn, vd = ng.tau_var.numerator, ng.tau_var.denominator
    out = []
    for sym, a, depth in parse_tree_nodes(g, stats):
        if depth <= 2:
            continue
        e = depth - 2
        if rn * (vn**e) * stats.weight[sym] > W * rd * (vd**e):
            out.append(f"node ({sym},{a}) at depth {depth} violates the height bound")
    return out


# ---------------------------------------------------------------------------
# leafy grammars
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeafyGrammar:
    grammar: Grammar
    b: int
    leaf_vars: frozenset[int]
    blocks: dict[int, PackedString]  # leaf variable -> packed expansion
    mapping: dict[int, int]  # original symbol (|exp| >= b) -> image variable
    image_form: dict[int, str]  # image variable -> 'leaf'|'pair'|'triple'
    stats: GrammarStats

    def top_vars(self) -> list[int]:
        sigma = self.grammar.terminal_count
        return [
            sigma + vid
            for vid in range(self.grammar.num_variables)
            if sigma + vid not in self.leaf_vars
        ]


def make_leafy(
    g: Grammar,
    b: int,
    block_budget_bits: int = DEFAULT_BLOCK_BUDGET_BITS,
) -> LeafyGrammar:
    """b-leafy reshaping of an unweighted grammar (Cases 1..4.2)."""
    validate(g)
    if not g.is_unweighted():
        raise WeightedUnsupported("make_leafy requires unit terminal weights")
    stats0 = derive_stats(g)
    n = stats0.length[g.start]
    if not 1 <= b <= n:
        raise OutOfBounds(f"block size {b} outside [1..{n}]")
    sigma = g.terminal_count
    cb = char_bits(sigma)
    if 2 * b * cb > block_budget_bits:
        raise BlockTooWide(f"blocks of 2b*ceil(log sigma) = {2 * b * cb} bits exceed budget")

    gn, m1 = normalize(g)
    stats = derive_stats(gn)
    out = GrammarBuilder(sigma, gn.terminal_weights, gn.flavor, gn.alphabet)

    small: dict[int, PackedString] = {}  # symbols with |exp| < b
    info: dict[int, tuple] = {}  # symbols with |exp| >= b -> decomposition
    img: dict[int, int] = {}
    form: dict[int, str] = {}
    blocks: dict[int, PackedString] = {}
    leaf_vars: list[int] = []

    def new_leaf(ps: PackedString) -> int:
        assert b <= len(ps) < 2 * b, (len(ps), b)
        v = out.new_variable([(c, 1) for c in ps.to_list()])
        blocks[v] = ps
        leaf_vars.append(v)
        return v

    def get_string(sym: int) -> PackedString:
        # valid whenever |exp(sym)| < 3b (no middle top variable yet)
        if sym < sigma:
            return PackedString.pack([sym], sigma)
        if sym in small:
            return small[sym]
        entry = info[sym]
        if entry[0] == "leaf":
            return blocks[entry[1]]
        if entry[0] == "pair":
            return blocks[entry[1]].concat(blocks[entry[2]])
        raise AssertionError(f"get_string on wide symbol {sym}")

    def image_of(sym: int) -> tuple:
        # decomposition of a symbol with |exp| >= b; terminals only when b == 1
        if sym in info:
            return info[sym]
        assert sym < sigma and b == 1
        leaf = new_leaf(PackedString.pack([sym], sigma))
        info[sym] = ("leaf", leaf)
        return info[sym]

    def set_image(sym: int, entry: tuple) -> None:
        info[sym] = entry
        v = out.new_variable([(s, 1) for s in entry[1:]])
        img[sym] = v
        form[v] = entry[0]

    for var in stats.topo:
        L = stats.length[var]
        rule = gn.rule(var)
        if L < b:
            ps = PackedString.empty(sigma)
            for sym, exp in rule:
                ps = ps.concat(get_string(sym).repeat(exp) if exp > 1 else get_string(sym))
            small[var] = ps
            continue
        if L < 2 * b:  # Case 1
            ps = PackedString.empty(sigma)
            for sym, exp in rule:
                ps = ps.concat(get_string(sym).repeat(exp) if exp > 1 else get_string(sym))
            set_image(var, ("leaf", new_leaf(ps)))
            continue
        if L < 3 * b:  # Case 2
            ps = PackedString.empty(sigma)
            for sym, exp in rule:
                ps = ps.concat(get_string(sym).repeat(exp) if exp > 1 else get_string(sym))
            set_image(var, ("pair", new_leaf(ps.slice(0, b)), new_leaf(ps.slice(b, L))))
            continue

        flat = [(s, e) for s, e in rule]
        total_exp = sum(e for _, e in flat)
        if len(flat) == 1 and flat[0][1] >= 3:  # Case 4
            base, k = flat[0]
            lenB = stats.length[base]
            if lenB >= 2 * b:  # Case 4.1
                entry = image_of(base)
                if entry[0] == "pair":
                    BL, BR = entry[1], entry[2]
                    beta: list[int] = []
                else:
                    assert entry[0] == "triple"
                    BL, T, BR = entry[1], entry[2], entry[3]
                    beta = [T]
                mid = out.new_variable(
                    [(s, 1) for s in beta]
                    + [(BR, 1), (img[base], k - 2), (BL, 1)]
                    + [(s, 1) for s in beta]
                )
                form[mid] = "helper-top"
                v = out.new_variable([(BL, 1), (mid, 1), (BR, 1)])
                img[var] = v
                form[v] = "triple"
                info[var] = ("triple", BL, mid, BR)
            else:  # Case 4.2
                strB = get_string(base)
                m_rep = -(-b // lenB)
                unit = m_rep * lenB
                q = (L - 2 * b) // unit
                residue = L - q * unit
                assert 2 * b <= residue <= 4 * b - 2
                aL = min(residue - b, 2 * b - 1)
                aR = residue - aL

                def pslice(i: int, j: int) -> PackedString:
                    return PackedString.pack(
                        [strB.char_at((i + t) % lenB) for t in range(j - i)], sigma
                    )

                AL = new_leaf(pslice(0, aL))
                AR = new_leaf(pslice(L - aR, L))
                if q >= 1:
                    LeafB = new_leaf(pslice(aL, aL + unit))
                    mid = out.new_variable([(LeafB, q)])
                    form[mid] = "helper-top"
                    v = out.new_variable([(AL, 1), (mid, 1), (AR, 1)])
                    info[var] = ("triple", AL, mid, AR)
                    form[v] = "triple"
                else:
                    v = out.new_variable([(AL, 1), (AR, 1)])
                    info[var] = ("pair", AL, AR)
                    form[v] = "pair"
                img[var] = v
            continue

        assert total_exp == 2, f"rule of {var} not in normal form"
        # Case 3: rhs = B C (possibly B == C from an exponent-2 run)
        if len(flat) == 1:
            B = C = flat[0][0]
        else:
            B, C = flat[0][0], flat[1][0]
        lenB, lenC = stats.length[B], stats.length[C]
        if lenB >= b and lenC >= b:  # Case 3.1
            eb = image_of(B)
            BL = eb[1]
            beta = list(eb[2:])  # [] | [leaf] | [top, leaf]
            ec = image_of(C)
            CR = ec[-1]
            gamma = list(ec[1:-1])  # [] | [leaf] | [leaf, top]
            if not beta and not gamma:
                v = out.new_variable([(BL, 1), (CR, 1)])
                info[var] = ("pair", BL, CR)
                form[v] = "pair"
            else:
                mid = out.new_variable([(s, 1) for s in beta + gamma])
                form[mid] = "helper-top"
                v = out.new_variable([(BL, 1), (mid, 1), (CR, 1)])
                info[var] = ("triple", BL, mid, CR)
                form[v] = "triple"
            img[var] = v
        elif lenB >= b > lenC:  # Case 3.2
            eb = image_of(B)
            assert eb[0] in ("pair", "triple"), "B shorter than 2b in case 3.2"
            BL = eb[1]
            beta = [eb[2]] if eb[0] == "triple" else []
            BR = eb[-1]
            strC = get_string(C)
            joined = blocks[BR].concat(strC)
            if len(joined) < 2 * b:  # Case 3.2.1
                LeafA = new_leaf(joined)
                if beta:
                    v = out.new_variable([(BL, 1), (beta[0], 1), (LeafA, 1)])
                    info[var] = ("triple", BL, beta[0], LeafA)
                    form[v] = "triple"
                else:
                    v = out.new_variable([(BL, 1), (LeafA, 1)])
                    info[var] = ("pair", BL, LeafA)
                    form[v] = "pair"
            else:  # Case 3.2.2
                A_L = new_leaf(joined.slice(0, b))
                A_R = new_leaf(joined.slice(b, len(joined)))
                mid = out.new_variable([(s, 1) for s in beta] + [(A_L, 1)])
                form[mid] = "helper-top"
                v = out.new_variable([(BL, 1), (mid, 1), (A_R, 1)])
                info[var] = ("triple", BL, mid, A_R)
                form[v] = "triple"
            img[var] = v
        else:  # Case 3.3 (mirror)
            assert lenC >= b > lenB
            ec = image_of(C)
            assert ec[0] in ("pair", "triple"), "C shorter than 2b in case 3.3"
            CL = ec[1]
            gamma = [ec[2]] if ec[0] == "triple" else []
            CR = ec[-1]
            strB = get_string(B)
            joined = strB.concat(blocks[CL])
            if len(joined) < 2 * b:  # Case 3.3.1
                LeafA = new_leaf(joined)
                if gamma:
                    v = out.new_variable([(LeafA, 1), (gamma[0], 1), (CR, 1)])
                    info[var] = ("triple", LeafA, gamma[0], CR)
                    form[v] = "triple"
                else:
                    v = out.new_variable([(LeafA, 1), (CR, 1)])
                    info[var] = ("pair", LeafA, CR)
                    form[v] = "pair"
            else:  # Case 3.3.2
                A_L = new_leaf(joined.slice(0, b))
                A_mid = new_leaf(joined.slice(b, len(joined)))
                mid = out.new_variable([(A_mid, 1)] + [(s, 1) for s in gamma])
                form[mid] = "helper-top"
                v = out.new_variable([(A_L, 1), (mid, 1), (CR, 1)])
                info[var] = ("triple", A_L, mid, CR)
                form[v] = "triple"
            img[var] = v

    start1 = m1[g.start] if g.start >= sigma else g.start
    if start1 < sigma:
        # whole string is one character: n == 1, so b == 1
        entry = image_of(start1)
        start_img = out.new_variable([(entry[1], 1)])
        form[start_img] = "leaf"
    else:
        start_img = img[start1]

    mapping: dict[int, int] = {}
    for v_orig, v_norm in m1.items():
        if stats0.length[v_orig] < b:
            continue
        if v_norm >= sigma:
            mapping[v_orig] = img[v_norm]
        else:
            mapping[v_orig] = image_of(v_norm)[1]  # dissolved to a char, b == 1
    result = out.freeze(start_img)
    return LeafyGrammar(
        result,
        b,
        frozenset(leaf_vars),
        blocks,
        mapping,
        form,
        derive_stats(result),
    )


def leafy_violations(lg: LeafyGrammar) -> list[str]:
    """Definition 5.9 shape checks plus the Lemma 5.10 image rule forms."""
    g = lg.grammar
    sigma = g.terminal_count
    out: list[str] = []
    for vid in range(g.num_variables):
        var = sigma + vid
        rule = g.rules[vid]
        if var in lg.leaf_vars:
            if any(sym >= sigma for sym, _ in rule):
                out.append(f"leaf {var} has a variable in its rule")
            n = sum(e for _, e in rule)
            if not lg.b <= n < 2 * lg.b:
                out.append(f"leaf {var} has length {n} outside [b..2b)")
            if lg.blocks[var].to_list() != [
                s for s, e in rule for _ in range(e)
            ]:
                out.append(f"leaf {var} block mismatches its rule")
        else:
            if any(sym < sigma for sym, _ in rule):
                out.append(f"top {var} has a terminal in its rule")
    for orig, image in lg.mapping.items():
        flat = [s for s, e in g.rule(image) for _ in range(e)]
        ok = (
            (len(flat) == 1 and flat[0] in lg.leaf_vars)
            or (len(flat) == 2 and all(s in lg.leaf_vars for s in flat))
            or (
                len(flat) == 3
                and flat[0] in lg.leaf_vars
                and flat[2] in lg.leaf_vars
                and flat[1] not in lg.leaf_vars
                and flat[1] >= sigma
            )
        )
        if not ok:
            out.append(f"image {image} of {orig} is not leaf | leaf.leaf | leaf.top.leaf")
    return out


# ---------------------------------------------------------------------------
# leafy + nice composition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeafyNiceGrammar:
    grammar: Grammar
    b: int
    leaf_vars: frozenset[int]
    blocks: dict[int, PackedString]
    mapping: dict[int, int]
    tau_root: Fraction
    tau_var: Fraction
    d: int
    stats: GrammarStats

    def top_grammar(self) -> tuple[Grammar, list[int]]:
        """The top part with leaves as weighted terminals; returns leaf order."""
        return _top_part(self.grammar, self.leaf_vars, self.blocks, self.stats)


def _top_part(
    g: Grammar,
    leaf_vars: frozenset[int],
    blocks: dict[int, PackedString],
    stats: GrammarStats,
) -> tuple[Grammar, list[int]]:
    sigma = g.terminal_count
    leaves = sorted(leaf_vars)
    leaf_pos = {v: i for i, v in enumerate(leaves)}
    tops = [sigma + vid for vid in range(g.num_variables) if sigma + vid not in leaf_vars]
    top_pos = {v: i for i, v in enumerate(tops)}
    sigma_t = len(leaves)

    def enc(sym: int) -> int:
        return leaf_pos[sym] if sym in leaf_pos else sigma_t + top_pos[sym]

    builder = GrammarBuilder(
        sigma_t, [len(blocks[v]) for v in leaves], g.flavor
    )
    for v in tops:
        builder.new_variable()
    for v in tops:
        builder.set_rule(enc(v), [(enc(s), e) for s, e in g.rule(v)])
    top = builder.freeze(enc(g.start), check=False)
    validate(top)
    return top, leaves


def make_leafy_nice(
    g: Grammar,
    b: int,
    tau_root,
    tau_var,
    block_budget_bits: int = DEFAULT_BLOCK_BUDGET_BITS,
) -> LeafyNiceGrammar:
    """Leafy first, then contract + nice on the weighted top part."""
    tau_r = as_tau(tau_root)
    tau_v = as_tau(tau_var)
    lg = make_leafy(g, b, block_budget_bits)
    top, leaves = _top_part(lg.grammar, lg.leaf_vars, lg.blocks, lg.stats)
    ct = contract(top)
    ng, _ = make_nice(ct, tau_r, tau_v)

    sigma = g.terminal_count
    out = GrammarBuilder(sigma, lg.grammar.terminal_weights, ng.grammar.flavor, g.alphabet)
    leaf_out: dict[int, int] = {}
    blocks_out: dict[int, PackedString] = {}
    for v in leaves:
        nv = out.new_variable([(c, 1) for c in lg.blocks[v].to_list()])
        leaf_out[v] = nv
        blocks_out[nv] = lg.blocks[v]
    topg = ng.grammar
    sigma_t = topg.terminal_count
    top_out: dict[int, int] = {}
    for tvid in range(topg.num_variables):
        top_out[sigma_t + tvid] = out.new_variable()

    def dec(sym: int) -> int:
        return leaf_out[leaves[sym]] if sym < sigma_t else top_out[sym]

    for tvid in range(topg.num_variables):
        tsym = sigma_t + tvid
        out.set_rule(top_out[tsym], [(dec(s), e) for s, e in topg.rule(tsym)])

    # start: the leafy start maps through the top encoding and contraction
    top_enc_start = topg.start  # ng/ct preserve the start symbol id chain
    start_out = dec(top_enc_start)
    result = out.freeze(start_out)

    # original mapping composes: orig -> leafy image -> contracted top image
    leaves_set = frozenset(leaf_out.values())
    leaf_enc = {v: i for i, v in enumerate(leaves)}
    tops = [
        sigma + vid
        for vid in range(lg.grammar.num_variables)
        if sigma + vid not in lg.leaf_vars
    ]
    top_pos = {v: i for i, v in enumerate(tops)}
    mapping: dict[int, int] = {}
    for orig, image in lg.mapping.items():
        if image in leaf_enc:
            mapping[orig] = leaf_out[image]
        else:
            mapping[orig] = dec(ct.mapping[len(leaves) + top_pos[image]])
    return LeafyNiceGrammar(
        result,
        b,
        leaves_set,
        blocks_out,
        mapping,
        tau_r,
        tau_v,
        ct.d,
        derive_stats(result),
    )


def check_leafy_nice_heights(lnice: LeafyNiceGrammar, max_weight: int = 10_000) -> list[str]:
    """Exact height bound: depth <= 3 + max(0, log_{tau_v}(W / (tau_r * b)))."""
    g = lnice.grammar
    stats = lnice.stats
    W = stats.weight[g.start]
    if W > max_weight:
        return []
    rn, rd = lnice.tau_root.numerator, lnice.tau_root.denominator
    vn, vd = lnice.tau_var.numerator, lnice.tau_var.denominator
    out = []
    for sym, a, depth in parse_tree_nodes(g, stats):
        if depth <= 3:
            continue
        e = depth - 3
        if rn * (vn**e) * lnice.b > W * rd * (vd**e):
            out.append(f"node ({sym},{a}) at depth {depth} violates the leafy height bound")
    return out
