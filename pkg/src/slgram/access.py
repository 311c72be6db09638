"""The access index: child-query structures, random access, and the planner.

An index holds one or two *routes*:

* the weighted route: contract -> (|G| tau, tau)-nice; queries descend the
  parse tree by child queries until a terminal, tracking position and offset;
* the leafy route (unweighted strings): b-leafy with a nice top part; the
  descent stops at a leaf variable and finishes with a packed-block read.

Weighted inputs that want the leafy route are first unrolled (each terminal c
becomes a run variable C -> c^weight(c)); both routes are then built and each
character query is answered by the route with the smaller predicted depth,
while the full (character, position, offset) triple always comes from the
weighted route, which tracks positions exactly.

Per variable, the child query is a rank over run-boundary prefix weights:
either a direct answer table (when the variable's tau reaches its weight) or
a bucketed rank whose in-bucket sets stay tiny by niceness condition (3).
All structures are flattened into integer pools shared by the compiled and
pure-Python kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernel
from .contracting import contract
from .errors import (
    BudgetOutOfRange,
    IndexOutOfNode,
    IndexOutOfRange,
    PlannerViolation,
)
from .grammar import (
    RLSLG,
    SLG,
    Grammar,
    GrammarBuilder,
    GrammarStats,
    Run,
    derive_stats,
    prune_unreachable,
    validate,
)
from .shaping import (
    LeafyNiceGrammar,
    as_tau,
    ceil_log2,
    make_leafy_nice,
    make_nice,
)
from .succinct.bucketed import BucketedRank
from .succinct.packed import PackedString, char_bits, pack_pool


def default_block_size(n: int, sigma: int) -> int:
    """b = ceil(log n / log sigma), clamped into [1..n]."""
    lgs = math.log2(max(sigma, 2))
    b = math.ceil(math.log2(max(n, 2)) / lgs)
    return max(1, min(b, n))


def traversal_block_size(n: int, sigma: int, tau: float, w: int = 64) -> int:
    """b = ceil(min(w, tau log n) / log sigma) for extraction-heavy workloads."""
    lgs = math.log2(max(sigma, 2))
    b = math.ceil(min(w, float(tau) * math.log2(max(n, 2))) / lgs)
    return max(1, min(b, n))


@dataclass(frozen=True)
class PlannerChoice:
    tau: Fraction
    b: int
    predicted_depth: int
    mode: str  # "grammar" | "packed"


def plan(n: int, g: int, sigma: int, M: int, w: int = 64) -> PlannerChoice:
    """Map a memory budget of M w-bit words to the fan-out parameter tau.

    Valid inputs satisfy g log n < M w < n log sigma; budgets at or above
    n log sigma get the degenerate packed choice, budgets at or below
    g log n are rejected.
    """
    if min(n, g, sigma, M, w) < 1:
        raise BudgetOutOfRange("all planner inputs must be positive")
    lgn = math.log2(max(n, 2))
    lgs = math.log2(max(sigma, 2))
    budget_bits = M * w
    if budget_bits >= n * lgs:
        return PlannerChoice(Fraction(2), default_block_size(n, sigma), 1, "packed")
    if budget_bits <= g * lgn:
        raise BudgetOutOfRange(
            f"budget too small: M*w = {budget_bits} <= g*log n = {g * lgn:.1f}"
        )
    tau = max(2.0, budget_bits / (g * lgn))
    b = default_block_size(n, sigma)
    depth = math.ceil(max(1.0, math.log(n * lgs / budget_bits, tau)))
    return PlannerChoice(Fraction(tau), b, depth, "grammar")


# ---------------------------------------------------------------------------
# build helpers
# ---------------------------------------------------------------------------

def dissolve_unary(g: Grammar, keep: frozenset[int] = frozenset()) -> tuple[Grammar, dict[int, int]]:
    """Replace every variable with a single-symbol rule by that symbol.

    Cursor preprocessing: afterwards every (non-kept) rule derives at least
    two children, so leftmost/rightmost frames are unambiguous.  Expansions
    are unchanged; returns the rewrite map old-symbol -> replacement.
    """
    sigma = g.terminal_count
    stats = derive_stats(g)
    repl: dict[int, int] = {}

    def resolve(s: int) -> int:
        return repl.get(s, s)

    for var in stats.topo:
        rule = g.rule(var)
        if var not in keep and len(rule) == 1 and rule[0].exponent == 1:
            repl[var] = resolve(rule[0].symbol)
    if not repl:
        return g, {}
    rules = []
    for vid in range(g.num_variables):
        items = [(resolve(s), e) for s, e in g.rules[vid]]
        merged: list[tuple[int, int]] = []
        for s, e in items:
            if g.flavor == RLSLG and merged and merged[-1][0] == s:
                merged[-1] = (s, merged[-1][1] + e)
            else:
                merged.append((s, e))
        rules.append(tuple(Run(s, e) for s, e in merged))
    out = Grammar(
        sigma, g.terminal_weights, tuple(rules), resolve(g.start), g.flavor, g.alphabet
    )
    validate(out)
    return out, repl


def unroll_weighted(g: Grammar) -> Grammar:
    """The unweighted hat-grammar: every terminal c becomes C -> c^weight(c)."""
    sigma = g.terminal_count
    out = GrammarBuilder(sigma, [1] * sigma, RLSLG, g.alphabet)
    wrap: dict[int, int] = {}
    for t in range(sigma):
        w = g.terminal_weights[t]
        wrap[t] = t if w == 1 else out.new_variable([(t, w)])
    offset = len(out.rules)  # wrapper count precedes the copied variables
    var_map = {sigma + vid: sigma + offset + vid for vid in range(g.num_variables)}

    def img(s: int) -> int:
        return wrap[s] if s < sigma else var_map[s]

    for vid in range(g.num_variables):
        out.new_variable()
    for vid in range(g.num_variables):
        out.set_rule(var_map[sigma + vid], [(img(s), e) for s, e in g.rules[vid]])
    return out.freeze(img(g.start))


# ---------------------------------------------------------------------------
# routes
# ---------------------------------------------------------------------------

@dataclass
class Route:
    kind: str  # "weighted" | "leafy"
    grammar: Grammar
    stats: GrammarStats
    tau_root: Fraction
    tau_var: Fraction
    d: int
    b: int  # 0 on the weighted route
    g0_size: int  # size of the input grammar (the tau_r = |G| tau baseline)
    leaf_vars: frozenset[int] = field(default_factory=frozenset)
    blocks: dict[int, PackedString] = field(default_factory=dict)
    pools: dict[str, np.ndarray] = field(default_factory=dict)
    max_bucket: int = 0
    rank_strategy: str = "scan"
    _lists: Optional[dict] = None  # python mirrors for cursor-side queries

    @property
    def total_weight(self) -> int:
        return self.stats.weight[self.grammar.start]

    @property
    def height(self) -> int:
        s = self.grammar.start
        return self.stats.height[s] if self.grammar.is_variable(s) else 0

    def bit_size(self) -> int:
        bits = sum(arr.size * arr.dtype.itemsize * 8 for arr in self.pools.values())
        return bits

    def predicted_depth(self) -> float:
        W = self.total_weight
        if self.kind == "leafy":
            base = W / (float(self.tau_root) * self.b)
        else:
            wmin = min(self.grammar.terminal_weights)
            base = W / (float(self.tau_root) * wmin)
        extra = math.log(base, float(self.tau_var)) if base > 1 else 0.0
        return (3.0 if self.kind == "leafy" else 2.0) + max(0.0, extra)

    # -- python-side child query (cursors and generic aggregates) ----------

    def lists(self) -> dict:
        if self._lists is None:
            self._lists = {k: v.tolist() for k, v in self.pools.items()}
        return self._lists

    def child_rank(self, vid: int, y: int) -> int:
        L = self.lists()
        mode = L["crk_mode"][vid]
        assert mode != 2, "child_rank on a leaf variable"
        if mode == 0:
            return L["crk_pool"][L["crk_ptr"][vid] + y]
        base = L["rule_ptr"][vid]
        idx = L["crk_ptr"][vid] + y // L["crk_s"][vid]
        j = L["crk_pool"][idx]
        hi = L["crk_pool"][idx + 1]
        run_pw = L["run_pw"]
        while j < hi and run_pw[base + 1 + j] <= y:
            j += 1
        return j

    def child(self, sym: int, a: int, i: int) -> tuple[int, int]:
        """The parse-tree child (B, b) of (sym, a) whose span contains i."""
        g = self.grammar
        w = self.stats.weight
        if not a <= i < a + w[sym]:
            raise IndexOutOfNode(f"index {i} outside node ({sym},{a})")
        vid = sym - g.terminal_count
        L = self.lists()
        if L["crk_mode"][vid] == 2:
            # leaf variable: children are its block characters (unit weight)
            t = i - a
            return self.leaf_char(vid, t), a + t
        y = i - a
        j = self.child_rank(vid, y)
        rs = L["rule_ptr"][vid] + j
        bsym = L["run_sym"][rs]
        k = (y - L["run_pw"][rs]) // w[bsym]
        return bsym, a + L["run_pw"][rs] + k * w[bsym]

    def leaf_char(self, vid: int, t: int) -> int:
        L = self.lists()
        cb = int(self.pools["cb"][0])
        bit = L["leaf_bitoff"][vid] + t * cb
        wi, r = bit >> 6, bit & 63
        val = L["leaf_words"][wi] >> r
        if r + cb > 64:
            val |= L["leaf_words"][wi + 1] << (64 - r)
        return val & ((1 << cb) - 1)


def _build_pools(route: Route) -> None:
    g = route.grammar
    stats = route.stats
    sigma = g.terminal_count
    nv = g.num_variables
    weight = np.array(stats.weight, dtype=np.int64)
    length = np.array(stats.length, dtype=np.int64)

    rule_ptr = np.zeros(nv + 1, dtype=np.int64)
    run_sym: list[int] = []
    run_pw: list[int] = []
    run_pl: list[int] = []
    run_exp: list[int] = []
    for vid in range(nv):
        pw = 0
        pl = 0
        for s, e in g.rules[vid]:
            run_sym.append(s)
            run_exp.append(e)
            run_pw.append(pw)
            run_pl.append(pl)
            pw += e * int(weight[s])
            pl += e * int(length[s])
        rule_ptr[vid + 1] = len(run_sym)

    run_sym_a = np.array(run_sym, dtype=np.int64)
    run_pw_a = np.array(run_pw, dtype=np.int64)
    run_pl_a = np.array(run_pl, dtype=np.int64)
    run_exp_a = np.array(run_exp, dtype=np.int64)

    crk_mode = np.zeros(nv, dtype=np.int64)
    crk_s = np.ones(nv, dtype=np.int64)
    crk_ptr = np.zeros(nv + 1, dtype=np.int64)
    crk_pool: list[np.ndarray] = []
    pool_len = 0
    max_bucket = 0
    for vid in range(nv):
        var = sigma + vid
        if var in route.leaf_vars:
            crk_mode[vid] = 2
            crk_ptr[vid + 1] = pool_len
            continue
        tau = route.tau_root if var == g.start else route.tau_var
        wa = int(weight[var])
        lo = int(rule_ptr[vid])
        hi = int(rule_ptr[vid + 1])
        boundaries = run_pw_a[lo + 1 : hi]  # P_A[1..m-1]; P_A[m]=w(A) never ranks
        if tau.numerator >= wa * tau.denominator:
            table = np.searchsorted(boundaries, np.arange(wa, dtype=np.int64), side="right")
            crk_mode[vid] = 0
            crk_pool.append(table.astype(np.int64))
            pool_len += wa
        else:
            s = (wa * tau.denominator) // tau.numerator
            br = BucketedRank(boundaries, wa, s, strategy=route.rank_strategy)
            crk_mode[vid] = 1
            crk_s[vid] = s
            crk_pool.append(br.pref)
            pool_len += len(br.pref)
            mb = br.max_bucket()
            max_bucket = max(max_bucket, mb)
            bound = 2 * route.d * ceil_log2(tau)
            assert mb <= bound, (
                f"bucket sparsity violated at {var}: {mb} > 2d ceil(log tau) = {bound}"
            )
        crk_ptr[vid + 1] = pool_len

    leaf_bitoff = np.zeros(nv, dtype=np.int64)
    if route.leaf_vars:
        order = sorted(route.leaf_vars)
        words, offs, cb = pack_pool([route.blocks[v] for v in order])
        for v, off in zip(order, offs[:-1].tolist()):
            leaf_bitoff[v - sigma] = off
    else:
        words = np.zeros(1, dtype=np.uint64)
        cb = char_bits(sigma)

    route.pools = {
        "weight": weight,
        "length": length,
        "rule_ptr": rule_ptr,
        "run_sym": run_sym_a,
        "run_exp": run_exp_a,
        "run_pw": run_pw_a,
        "run_pl": run_pl_a,
        "crk_mode": crk_mode,
        "crk_s": crk_s,
        "crk_ptr": crk_ptr,
        "crk_pool": (
            np.concatenate(crk_pool) if crk_pool else np.zeros(0, dtype=np.int64)
        ).astype(np.int64),
        "leaf_bitoff": leaf_bitoff,
        "leaf_words": words.astype(np.uint64),
        "cb": np.array([cb], dtype=np.int64),
    }
    route.max_bucket = max_bucket


def _build_weighted_route(g: Grammar, tau: Fraction, strategy: str) -> Route:
    stats0 = derive_stats(g)
    g0_size = stats0.size
    cg = contract(g)
    tau_r = Fraction(g0_size) * tau
    ng, _ = make_nice(cg, max(tau_r, tau), tau)
    gd, _ = dissolve_unary(ng.grammar)
    gp, _ = prune_unreachable(gd)
    route = Route(
        kind="weighted",
        grammar=gp,
        stats=derive_stats(gp),
        tau_root=max(tau_r, tau),
        tau_var=tau,
        d=cg.d,
        b=0,
        g0_size=g0_size,
        rank_strategy=strategy,
    )
    _build_pools(route)
    return route


def _build_leafy_route(g: Grammar, tau: Fraction, b: Optional[int], strategy: str) -> Route:
    stats0 = derive_stats(g)
    g0_size = stats0.size
    n = stats0.length[g.start]
    if b is None:
        b = default_block_size(n, g.terminal_count)
    b = max(1, min(b, n))
    tau_r = max(Fraction(g0_size) * tau, tau)
    ln = make_leafy_nice(g, b, tau_r, tau)
    gd, _ = dissolve_unary(ln.grammar, keep=ln.leaf_vars)
    gp, remap = prune_unreachable(gd)
    blocks = {remap[v]: ln.blocks[v] for v in sorted(ln.leaf_vars) if v in remap}
    route = Route(
        kind="leafy",
        grammar=gp,
        stats=derive_stats(gp),
        tau_root=tau_r,
        tau_var=tau,
        d=ln.d,
        b=b,
        g0_size=g0_size,
        leaf_vars=frozenset(blocks.keys()),
        blocks=blocks,
        rank_strategy=strategy,
    )
    _build_pools(route)
    return route


# ---------------------------------------------------------------------------
# the index
# ---------------------------------------------------------------------------

class AccessIndex:
    """Immutable query index over a grammar-compressed string."""

    def __init__(
        self,
        source: Grammar,
        tau: Fraction,
        routes: dict[str, Route],
        char_route: str,
        triple_route: str,
        meta: Optional[dict] = None,
    ):
        self.source = source
        self.tau = tau
        self.routes = routes
        self.char_route = char_route
        self.triple_route = triple_route
        self.meta = meta or {}
        self._states: dict[tuple[str, str], object] = {}
        src_stats = derive_stats(source)
        self.n = src_stats.length[source.start]
        self.total_weight = src_stats.weight[source.start]
        self.sigma = source.terminal_count

    # -- kernels ------------------------------------------------------------

    def kernel_state(self, kind: str, backend: Optional[str] = None):
        mod = _kernel.get_backend(backend)
        key = (kind, mod.NAME)
        st = self._states.get(key)
        if st is None:
            route = self.routes[kind]
            st = mod.make_state(
                route.pools,
                route.grammar.terminal_count,
                route.grammar.start,
                int(route.pools["cb"][0]),
            )
            self._states[key] = st
        return mod, st

    # -- queries ------------------------------------------------------------

    def access_traced(self, i: int, backend: Optional[str] = None):
        """((terminal, position, offset), child calls) at weighted position i."""
        if not 0 <= i < self.total_weight:
            raise IndexOutOfRange(f"position {i} outside [0..{self.total_weight})")
        mod, st = self.kernel_state(self.triple_route, backend)
        sym, pos, off, steps = mod.descend(st, i)
        return (sym, pos, off), steps

    def access(self, i: int, backend: Optional[str] = None):
        return self.access_traced(i, backend)[0]

    def char_at(self, i: int, backend: Optional[str] = None) -> int:
        """The character at weighted position i via the depth-preferred route."""
        if not 0 <= i < self.total_weight:
            raise IndexOutOfRange(f"position {i} outside [0..{self.total_weight})")
        mod, st = self.kernel_state(self.char_route, backend)
        return mod.descend(st, i)[0]

    # -- reporting ----------------------------------------------------------

    def report(self) -> dict:
        out = {
            "n": self.n,
            "weight": self.total_weight,
            "sigma": self.sigma,
            "tau": str(self.tau),
            "char_route": self.char_route,
            "triple_route": self.triple_route,
            "routes": {},
        }
        for kind, r in self.routes.items():
            out["routes"][kind] = {
                "bits": r.bit_size()
                + sum(ps.bit_size() for ps in r.blocks.values()),
                "rules_bits_per_logW": (
                    r.bit_size() / max(1.0, r.stats.size * max(1, r.total_weight.bit_length()))
                ),
                "size": r.stats.size,
                "variables": r.grammar.num_variables,
                "height": r.height,
                "d": r.d,
                "b": r.b,
                "tau_root": str(r.tau_root),
                "tau_var": str(r.tau_var),
                "max_bucket": r.max_bucket,
                "predicted_depth": r.predicted_depth(),
            }
        return out

    def bit_size(self) -> int:
        return sum(self.report()["routes"][k]["bits"] for k in self.routes)


def step_bound_ok(route: Route, steps: int, char_weight: int = 1) -> bool:
    """Exact per-query child-call bound (the parse-tree depth lemmas)."""
    rn, rd = route.tau_root.numerator, route.tau_root.denominator
    vn, vd = route.tau_var.numerator, route.tau_var.denominator
    W = route.total_weight
    if route.kind == "leafy":
        if steps <= 3:
            return True
        e = steps - 3
        return rn * (vn**e) * route.b <= W * rd * (vd**e)
    if steps <= 2:
        return True
    e = steps - 2
    return rn * (vn**e) * char_weight <= W * rd * (vd**e)


def build_index(
    g: Grammar,
    tau=None,
    *,
    leafy: Optional[bool] = None,
    b: Optional[int] = None,
    dual: bool = False,
    budget_words: Optional[int] = None,
    word_bits: int = 64,
    planner_slack: float = 512.0,
    rank_strategy: str = "scan",
) -> AccessIndex:
    """Build an AccessIndex with fan-out tau (or a planned memory budget)."""
    validate(g)
    stats0 = derive_stats(g)
    n = stats0.length[g.start]
    planned: Optional[PlannerChoice] = None
    if budget_words is not None:
        planned = plan(n, stats0.size, g.terminal_count, budget_words, word_bits)
        tau = planned.tau if tau is None else tau
        if b is None and planned.mode == "grammar":
            b = planned.b
    if tau is None:
        tau = 2
    tau_f = as_tau(tau)
    unweighted = g.is_unweighted()
    if leafy is None:
        leafy = unweighted

    routes: dict[str, Route] = {}
    if leafy:
        leafy_src = g if unweighted else unroll_weighted(g)
        routes["leafy"] = _build_leafy_route(leafy_src, tau_f, b, rank_strategy)
    if not leafy or not unweighted or dual:
        routes["weighted"] = _build_weighted_route(g, tau_f, rank_strategy)

    triple_route = "weighted" if "weighted" in routes and not unweighted else (
        "leafy" if "leafy" in routes else "weighted"
    )
    if len(routes) == 1:
        char_route = next(iter(routes))
    else:
        char_route = min(routes, key=lambda k: routes[k].predicted_depth())

    ix = AccessIndex(g, tau_f, routes, char_route, triple_route)
    if planned is not None and planned.mode == "grammar":
        bits = ix.bit_size()
        if bits > planner_slack * budget_words * word_bits:
            raise PlannerViolation(
                f"index needs {bits} bits, over {planner_slack}x the budget "
                f"of {budget_words * word_bits} bits"
            )
    return ix
