"""Grammar file formats.

Text format, one rule per line::

    start: S
    weights: 'a'=2,'b'=1        # optional; omitted terminals default to 1
    S -> A B
    A -> 'a' 'b'
    B -> A^5

Terminals are written ``'x'`` (single character, mapped to dense ids in
codepoint order) or ``#<int>`` (verbatim id).  A file must not mix the two
styles.  Variable names are identifiers; ids are assigned in order of first
definition.  Blank lines and lines starting with ``//`` or ``# `` are ignored.

The binary format mirrors the text format bit-exactly.  Layout (all integers
little-endian unsigned LEB128 varints unless noted)::

    magic   4 bytes b"SLGB"
    version varint (currently 1)
    flags   varint (bit0: flavor RLSLG, bit1: alphabet table present)
    sigma   varint
    weights sigma varints
    nrules  varint
    start   varint (symbol id)
    rules   per rule: nruns varint, then nruns x (symbol varint, exponent varint)
    alpha   if bit1: sigma varints of unicode codepoints
"""

from __future__ import annotations

import re
from typing import Iterable

from .errors import FormatError
from .grammar import RLSLG, SLG, Grammar, Run, validate

_TOKEN = re.compile(r"'(.)'|#(\d+)|([A-Za-z_][A-Za-z_0-9]*)")


def _parse_token(tok: str) -> tuple[str, str]:
    m = _TOKEN.fullmatch(tok)
    if not m:
        raise FormatError(f"bad symbol token {tok!r}")
    if m.group(1) is not None:
        return ("char", m.group(1))
    if m.group(2) is not None:
        return ("id", m.group(2))
    return ("var", m.group(3))


def loads(text: str) -> Grammar:
    start_name: str | None = None
    weight_decl: list[tuple[tuple[str, str], int]] = []
    rule_lines: list[tuple[str, list[tuple[tuple[str, str], int]]]] = []
    char_terms: set[str] = set()
    id_terms: set[int] = set()

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        # '#' also prefixes integer terminals, so only full-line comments
        if not line or line.startswith("//") or line.startswith("# "):
            continue
        if line.startswith("start:"):
            start_name = line[len("start:"):].strip()
            continue
        if line.startswith("weights:"):
            for item in line[len("weights:"):].split(","):
                item = item.strip()
                if not item:
                    continue
                if "=" not in item:
                    raise FormatError(f"line {lineno}: bad weight item {item!r}")
                tok, w = item.rsplit("=", 1)
                kind, val = _parse_token(tok.strip())
                if kind == "var":
                    raise FormatError(f"line {lineno}: weights apply to terminals only")
                weight_decl.append(((kind, val), int(w)))
            continue
        if "->" not in line:
            raise FormatError(f"line {lineno}: expected a rule")
        lhs, rhs = line.split("->", 1)
        lhs = lhs.strip()
        if _parse_token(lhs)[0] != "var":
            raise FormatError(f"line {lineno}: rule left-hand side must be a variable")
        items: list[tuple[tuple[str, str], int]] = []
        for tok in rhs.split():
            if "^" in tok:
                base, exp_s = tok.split("^", 1)
                exp = int(exp_s)
            else:
                base, exp = tok, 1
            kind, val = _parse_token(base)
            if kind == "char":
                char_terms.add(val)
            elif kind == "id":
                id_terms.add(int(val))
            items.append(((kind, val), exp))
        rule_lines.append((lhs, items))

    if start_name is None:
        raise FormatError("missing 'start:' line")
    if char_terms and id_terms:
        raise FormatError("file mixes 'x' and #int terminal styles")
    for (kind, val), _ in weight_decl:
        if kind == "char":
            char_terms.add(val)
        else:
            id_terms.add(int(val))

    alphabet: str | None = None
    if id_terms:
        sigma = max(id_terms) + 1
        term_id = {("id", str(i)): i for i in range(sigma)}
        term_id.update({("id", str(i)): i for i in id_terms})
    else:
        chars = sorted(char_terms)
        alphabet = "".join(chars)
        sigma = max(1, len(chars))
        term_id = {("char", c): i for i, c in enumerate(chars)}

    weights = [1] * sigma
    for key, w in weight_decl:
        key = key if key[0] == "id" else key
        if key[0] == "id":
            weights[int(key[1])] = w
        else:
            weights[term_id[key]] = w

    var_id: dict[str, int] = {}
    for name, _ in rule_lines:
        if name in var_id:
            raise FormatError(f"variable {name} defined twice")
        var_id[name] = sigma + len(var_id)

    def resolve(kind: str, val: str) -> int:
        if kind == "var":
            if val not in var_id:
                raise FormatError(f"variable {val} used but never defined")
            return var_id[val]
        if kind == "id":
            return int(val)
        return term_id[("char", val)]

    rules = []
    flavor = SLG
    for _, items in rule_lines:
        runs = []
        for (kind, val), exp in items:
            if exp != 1:
                flavor = RLSLG
            runs.append(Run(resolve(kind, val), exp))
        rules.append(tuple(runs))

    if start_name in var_id:
        start = var_id[start_name]
    else:
        kind, val = _parse_token(start_name)
        if kind == "var":
            raise FormatError(f"start symbol {start_name} has no rule")
        start = resolve(kind, val)

    g = Grammar(sigma, tuple(weights), tuple(rules), start, flavor, alphabet)
    validate(g)
    return g


def dumps(g: Grammar) -> str:
    def term_tok(t: int) -> str:
        if g.alphabet is not None and t < len(g.alphabet):
            return f"'{g.alphabet[t]}'"
        return f"#{t}"

    def sym_tok(s: int) -> str:
        return term_tok(s) if s < g.terminal_count else f"V{s - g.terminal_count}"

    lines = [f"start: {sym_tok(g.start)}"]
    if any(w != 1 for w in g.terminal_weights):
        items = ",".join(
            f"{term_tok(t)}={w}" for t, w in enumerate(g.terminal_weights) if w != 1
        )
        lines.append(f"weights: {items}")
    for vid, rule in enumerate(g.rules):
        rhs = " ".join(
            sym_tok(sym) + (f"^{exp}" if exp != 1 else "") for sym, exp in rule
        )
        lines.append(f"V{vid} -> {rhs}")
    return "\n".join(lines) + "\n"


# -- binary ------------------------------------------------------------------

def _write_varint(out: bytearray, value: int) -> None:
    if value < 0:
        raise FormatError("varints are unsigned")
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def _read_varint(data: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise FormatError("truncated varint")
        b = data[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            return result, pos
        shift += 7


MAGIC = b"SLGB"
VERSION = 1


def dump_bytes(g: Grammar) -> bytes:
    out = bytearray(MAGIC)
    _write_varint(out, VERSION)
    flags = (1 if g.flavor == RLSLG else 0) | (2 if g.alphabet is not None else 0)
    _write_varint(out, flags)
    _write_varint(out, g.terminal_count)
    for w in g.terminal_weights:
        _write_varint(out, w)
    _write_varint(out, len(g.rules))
    _write_varint(out, g.start)
    for rule in g.rules:
        _write_varint(out, len(rule))
        for sym, exp in rule:
            _write_varint(out, sym)
            _write_varint(out, exp)
    if g.alphabet is not None:
        for ch in g.alphabet:
            _write_varint(out, ord(ch))
    return bytes(out)


def load_bytes(data: bytes) -> Grammar:
    if data[:4] != MAGIC:
        raise FormatError("bad magic")
    pos = 4
    version, pos = _read_varint(data, pos)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    flags, pos = _read_varint(data, pos)
    flavor = RLSLG if flags & 1 else SLG
    sigma, pos = _read_varint(data, pos)
    weights = []
    for _ in range(sigma):
        w, pos = _read_varint(data, pos)
        weights.append(w)
    nrules, pos = _read_varint(data, pos)
    start, pos = _read_varint(data, pos)
    rules = []
    for _ in range(nrules):
        nruns, pos = _read_varint(data, pos)
        runs = []
        for _ in range(nruns):
            sym, pos = _read_varint(data, pos)
            exp, pos = _read_varint(data, pos)
            runs.append(Run(sym, exp))
        rules.append(tuple(runs))
    alphabet = None
    if flags & 2:
        chars = []
        for _ in range(sigma):
            cp, pos = _read_varint(data, pos)
            chars.append(chr(cp))
        alphabet = "".join(chars)
    g = Grammar(sigma, tuple(weights), tuple(rules), start, flavor, alphabet)
    validate(g)
    return g


def load_path(path: str) -> Grammar:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == MAGIC:
        return load_bytes(data)
    return loads(data.decode("utf-8"))
