"""Exception types raised across the toolkit."""


class RegexBiasError(Exception):
    """Base class for all toolkit errors."""


class SymbolError(RegexBiasError):
    """Unknown or malformed symbol / symbol-id."""


class SymbolTableMismatchError(RegexBiasError):
    """Two machines were combined over incompatible symbol tables."""

    def __init__(self, left_name, right_name, detail=""):
        self.left_name = left_name
        self.right_name = right_name
        msg = f"symbol tables do not match: {left_name!r} vs {right_name!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class BudgetExceededError(RegexBiasError):
    """A state or path budget was exhausted before the operation finished."""


class NondeterministicInputError(RegexBiasError):
    """An operation required a deterministic machine and got something else."""


class NegativeCycleError(RegexBiasError):
    """A negative-weight cycle makes shortest costs unbounded."""

    def __init__(self, states, msg=None):
        self.states = sorted(states)
        super().__init__(msg or f"negative-weight cycle involving states {self.states}")


class NoPathError(RegexBiasError):
    """The machine accepts nothing (no path from start to a final state)."""


class ReplaceRecursionError(RegexBiasError):
    """The replacement sub-machine itself carries the nonterminal label."""


class GrammarError(RegexBiasError):
    """Grammar text failed to parse or validate."""

    def __init__(self, msg, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            msg = f"line {line}, column {column}: {msg}"
        super().__init__(msg)


class LexiconError(RegexBiasError):
    """Lexicon entry refers to unknown characters or is malformed."""


class PosteriorFormatError(RegexBiasError):
    """A posterior matrix file or array failed validation."""


class DecodeDeadEndError(RegexBiasError):
    """Every search token was pruned or stuck; no hypothesis survives."""
