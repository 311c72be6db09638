"""Exception hierarchy for the library.

Every error raised on a contract violation derives from SlgramError, so CLI
code can catch one type and translate to exit codes.
"""


class SlgramError(Exception):
    pass


# -- grammar core ------------------------------------------------------------

class GrammarError(SlgramError):
    pass


class CyclicGrammar(GrammarError):
    pass


class NonCanonicalRun(GrammarError):
    pass


class ExponentInSLG(GrammarError):
    pass


class EmptyRule(GrammarError):
    pass


class EmptyStartExpansion(GrammarError):
    pass


class EmptyInput(GrammarError):
    pass


class Overflow(GrammarError):
    """A weight exceeds the configured bit width."""


class TooLarge(GrammarError):
    """An expansion exceeds the configured cap."""


class FormatError(GrammarError):
    """Malformed grammar file (text or binary)."""


# -- succinct kit ------------------------------------------------------------

class UnsortedInput(SlgramError):
    pass


class RankOutOfRange(SlgramError):
    pass


class LevelOutOfRange(SlgramError):
    pass


class OutOfBounds(SlgramError):
    pass


# -- index / queries ---------------------------------------------------------

class IndexOutOfNode(SlgramError):
    pass


class IndexOutOfRange(SlgramError):
    pass


class PlannerViolation(SlgramError):
    pass


class BudgetOutOfRange(SlgramError):
    pass


class BlockTooWide(SlgramError):
    pass


# -- cursors -----------------------------------------------------------------

class PopAtRoot(SlgramError):
    pass


class ChildOnLeaf(SlgramError):
    pass


class NotLeafyIndex(SlgramError):
    pass


class RangeOutOfBounds(SlgramError):
    pass


# -- aggregates --------------------------------------------------------------

class UnknownTerminal(SlgramError):
    pass


class NonBinaryAlphabet(SlgramError):
    pass


class WeightedUnsupported(SlgramError):
    """Operation defined for unweighted strings only."""


# -- hard instances ----------------------------------------------------------

class ParameterOverflow(SlgramError):
    pass


class RegimeViolation(SlgramError):
    pass
