"""Pure-Python query kernels (the fallback lane).

Operates on the same flattened pools as the compiled lane; plain int lists
keep per-element access cheap under CPython.
"""

from __future__ import annotations

NAME = "py"


class State:
    __slots__ = (
        "sigma",
        "start",
        "weight",
        "length",
        "rule_ptr",
        "run_sym",
        "run_pw",
        "run_pl",
        "crk_mode",
        "crk_s",
        "crk_ptr",
        "crk_pool",
        "leaf_bitoff",
        "leaf_words",
        "cb",
    )

    def __init__(self, pools: dict, sigma: int, start: int, cb: int):
        self.sigma = sigma
        self.start = start
        self.cb = cb
        self.weight = pools["weight"].tolist()
        self.length = pools["length"].tolist()
        self.rule_ptr = pools["rule_ptr"].tolist()
        self.run_sym = pools["run_sym"].tolist()
        self.run_pw = pools["run_pw"].tolist()
        self.run_pl = pools["run_pl"].tolist()
        self.crk_mode = pools["crk_mode"].tolist()
        self.crk_s = pools["crk_s"].tolist()
        self.crk_ptr = pools["crk_ptr"].tolist()
        self.crk_pool = pools["crk_pool"].tolist()
        self.leaf_bitoff = pools["leaf_bitoff"].tolist()
        self.leaf_words = pools["leaf_words"].tolist()


def make_state(pools: dict, sigma: int, start: int, cb: int) -> State:
    return State(pools, sigma, start, cb)


def _leaf_char(st: State, vid: int, t: int) -> int:
    bit = st.leaf_bitoff[vid] + t * st.cb
    w = bit >> 6
    r = bit & 63
    val = st.leaf_words[w] >> r
    if r + st.cb > 64:
        val |= st.leaf_words[w + 1] << (64 - r)
    return val & ((1 << st.cb) - 1)


def descend(st: State, i: int):
    """Random access descent: (terminal, position j, offset, child calls)."""
    sigma = st.sigma
    weight = st.weight
    length = st.length
    rule_ptr = st.rule_ptr
    run_sym = st.run_sym
    run_pw = st.run_pw
    run_pl = st.run_pl
    crk_mode = st.crk_mode
    crk_s = st.crk_s
    crk_ptr = st.crk_ptr
    crk_pool = st.crk_pool

    sym = st.start
    a = 0
    pos = 0
    steps = 0
    while sym >= sigma:
        vid = sym - sigma
        mode = crk_mode[vid]
        y = i - a
        if mode == 2:  # leaf variable: block lookup finishes the query
            return _leaf_char(st, vid, y), pos + y, a + y, steps + 1
        base = rule_ptr[vid]
        if mode == 0:
            j = crk_pool[crk_ptr[vid] + y]
        else:
            idx = crk_ptr[vid] + y // crk_s[vid]
            j = crk_pool[idx]
            hi = crk_pool[idx + 1]
            while j < hi and run_pw[base + 1 + j] <= y:
                j += 1
        rs = base + j
        bsym = run_sym[rs]
        k = (y - run_pw[rs]) // weight[bsym]
        a += run_pw[rs] + k * weight[bsym]
        pos += run_pl[rs] + k * length[bsym]
        sym = bsym
        steps += 1
    return sym, pos, a, steps


def descend_sum(st: State, i: int, phi: list, run_pphi: list):
    """Prefix-sum descent for integer-valued maps.

    Returns (stop symbol, local index, partial sum, child calls); the local
    index is -1 at a terminal (sum complete) and i-a at a leaf variable
    (caller adds the in-block prefix).
    """
    sigma = st.sigma
    weight = st.weight
    rule_ptr = st.rule_ptr
    run_sym = st.run_sym
    run_pw = st.run_pw
    crk_mode = st.crk_mode
    crk_s = st.crk_s
    crk_ptr = st.crk_ptr
    crk_pool = st.crk_pool

    sym = st.start
    a = 0
    acc = 0
    steps = 0
    while sym >= sigma:
        vid = sym - sigma
        mode = crk_mode[vid]
        y = i - a
        if mode == 2:
            return sym, y, acc, steps
        base = rule_ptr[vid]
        if mode == 0:
            j = crk_pool[crk_ptr[vid] + y]
        else:
            idx = crk_ptr[vid] + y // crk_s[vid]
            j = crk_pool[idx]
            hi = crk_pool[idx + 1]
            while j < hi and run_pw[base + 1 + j] <= y:
                j += 1
        rs = base + j
        bsym = run_sym[rs]
        k = (y - run_pw[rs]) // weight[bsym]
        acc += run_pphi[rs] + k * phi[bsym]
        a += run_pw[rs] + k * weight[bsym]
        sym = bsym
        steps += 1
    return sym, -1, acc, steps
