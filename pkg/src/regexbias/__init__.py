"""Regex-biased WFST decoding toolkit.

Compiles user regexes into weighted acceptors, splices them into a
class-based word language model through a `$REGEX` nonterminal, and decodes
CTC-style posterior matrices with a beam search whose bias strength is a
single per-character cost alpha.
"""

from .fst import (
    BLANK,
    DISAMBIG,
    EPSILON,
    EPSILON_ID,
    REGEX_NT,
    Arc,
    SymbolTable,
    Wfst,
    linear_acceptor,
)
from .semiring import ONE, ZERO

__all__ = [
    "Arc",
    "BLANK",
    "DISAMBIG",
    "EPSILON",
    "EPSILON_ID",
    "ONE",
    "REGEX_NT",
    "SymbolTable",
    "Wfst",
    "ZERO",
    "linear_acceptor",
]

__version__ = "0.1.0"
