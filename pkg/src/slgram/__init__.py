"""slgram: queryable indexes over grammar-compressed strings.

Build an index over a string given as a (run-length) straight-line grammar and
answer random access, substring extraction, monoid prefix sums, rank and
select without decompressing, trading index size for query depth through a
fan-out parameter tau (or a memory budget routed through the planner).
"""

from .grammar import (
    Grammar,
    GrammarBuilder,
    GrammarStats,
    RLSLG,
    SLG,
    Run,
    derive_stats,
    expand,
    normalize,
    trivial_builder,
    validate,
)
from .access import AccessIndex, build_index, plan

__all__ = [
    "Grammar",
    "GrammarBuilder",
    "GrammarStats",
    "RLSLG",
    "SLG",
    "Run",
    "derive_stats",
    "expand",
    "normalize",
    "trivial_builder",
    "validate",
    "AccessIndex",
    "build_index",
    "plan",
]
