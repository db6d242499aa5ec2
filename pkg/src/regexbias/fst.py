"""Weighted finite-state transducers over the tropical semiring.

A Wfst is mutable while it is being built (add_state / add_arc / set_final)
and treated as immutable once handed to any algorithm in ops.py: every
operation returns a fresh machine and never mutates its inputs, so finished
machines are safe to share across threads.
"""

from dataclasses import dataclass

from .errors import SymbolError
from .semiring import ONE, ZERO

EPSILON = "<eps>"
BLANK = "<blank>"
DISAMBIG = "#0"
REGEX_NT = "$REGEX"

EPSILON_ID = 0

# Property flags. They are promises recorded by the operation that built the
# machine; check_* methods compute the ground truth.
DETERMINISTIC = 1
ACCEPTOR = 2
EPS_FREE = 4
ILABEL_SORTED = 8
OLABEL_SORTED = 16


class SymbolTable:
    """Dense bijection between label strings and integer ids; id 0 is <eps>."""

    def __init__(self, name="symbols"):
        self.name = name
        self._syms = [EPSILON]
        self._ids = {EPSILON: 0}

    @classmethod
    def from_symbols(cls, symbols, name="symbols"):
        table = cls(name)
        for s in symbols:
            table.add(s)
        return table

    def add(self, symbol: str) -> int:
        """Register a symbol, returning its id (existing symbols keep theirs)."""
        if "\t" in symbol or "\n" in symbol:
            raise SymbolError(f"symbol may not contain tab or newline: {symbol!r}")
        existing = self._ids.get(symbol)
        if existing is not None:
            return existing
        new_id = len(self._syms)
        self._syms.append(symbol)
        self._ids[symbol] = new_id
        return new_id

    def id(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError:
            raise SymbolError(f"unknown symbol {symbol!r} in table {self.name!r}") from None

    def sym(self, label_id: int) -> str:
        try:
            return self._syms[label_id]
        except IndexError:
            raise SymbolError(f"no symbol with id {label_id} in table {self.name!r}") from None

    def find(self, symbol: str):
        """Id for symbol, or None when absent."""
        return self._ids.get(symbol)

    def symbols(self):
        return list(self._syms)

    def copy(self, name=None):
        table = SymbolTable(name or self.name)
        table._syms = list(self._syms)
        table._ids = dict(self._ids)
        return table

    def __len__(self):
        return len(self._syms)

    def __contains__(self, symbol):
        return symbol in self._ids

    def __iter__(self):
        return iter(self._syms)

    def __eq__(self, other):
        return isinstance(other, SymbolTable) and self._syms == other._syms

    def __repr__(self):
        return f"SymbolTable({self.name!r}, {len(self)} symbols)"


@dataclass(slots=True)
class Arc:
    """One transition: consume ilabel, emit olabel, accumulate weight."""

    ilabel: int
    olabel: int
    weight: float
    nextstate: int


class Wfst:
    """Transducer: list of per-state arc lists, a start state, final weights."""

    def __init__(self, isymbols: SymbolTable, osymbols: SymbolTable | None = None):
        self.isymbols = isymbols
        self.osymbols = osymbols if osymbols is not None else isymbols
        self._arcs: list[list[Arc]] = []
        self.start: int | None = None
        self.finals: dict[int, float] = {}
        self.properties = 0

    # -- construction -------------------------------------------------

    def add_state(self) -> int:
        self._arcs.append([])
        return len(self._arcs) - 1

    def add_states(self, n: int) -> int:
        """Add n states, returning the id of the first."""
        first = len(self._arcs)
        for _ in range(n):
            self._arcs.append([])
        return first

    def set_start(self, state: int):
        self._check_state(state)
        self.start = state

    def add_arc(self, src: int, ilabel: int, olabel: int, weight: float, dst: int):
        self._check_state(src)
        self._check_state(dst)
        if weight == 0.0:
            weight = 0.0  # normalize -0.0
        self._arcs[src].append(Arc(ilabel, olabel, weight, dst))

    def set_final(self, state: int, weight: float = ONE):
        self._check_state(state)
        if weight == ZERO:
            self.finals.pop(state, None)
        else:
            if weight == 0.0:
                weight = 0.0
            self.finals[state] = weight

    def _check_state(self, state: int):
        if not 0 <= state < len(self._arcs):
            raise IndexError(f"state {state} out of range (machine has {len(self._arcs)} states)")

    # -- inspection ---------------------------------------------------

    def num_states(self) -> int:
        return len(self._arcs)

    def num_arcs(self) -> int:
        return sum(len(a) for a in self._arcs)

    def states(self):
        return range(len(self._arcs))

    def arcs(self, state: int) -> list[Arc]:
        return self._arcs[state]

    def all_arcs(self):
        """Iterate (src, arc) over every transition."""
        for s, arcs in enumerate(self._arcs):
            for arc in arcs:
                yield s, arc

    def final(self, state: int) -> float:
        return self.finals.get(state, ZERO)

    def is_final(self, state: int) -> bool:
        return state in self.finals

    def is_empty(self) -> bool:
        """True when the machine has no start state at all."""
        return self.start is None

    # -- property predicates (ground truth, not the cached flags) ------

    def check_acceptor(self) -> bool:
        return all(arc.ilabel == arc.olabel for _, arc in self.all_arcs())

    def check_deterministic(self) -> bool:
        """No input-epsilon arcs and at most one arc per (state, ilabel)."""
        for s in self.states():
            seen = set()
            for arc in self._arcs[s]:
                if arc.ilabel == EPSILON_ID or arc.ilabel in seen:
                    return False
                seen.add(arc.ilabel)
        return True

    def check_pair_deterministic(self) -> bool:
        """At most one arc per (state, ilabel, olabel) and no eps:eps arcs."""
        for s in self.states():
            seen = set()
            for arc in self._arcs[s]:
                key = (arc.ilabel, arc.olabel)
                if key == (EPSILON_ID, EPSILON_ID) or key in seen:
                    return False
                seen.add(key)
        return True

    def check_eps_free(self) -> bool:
        return not any(
            arc.ilabel == EPSILON_ID and arc.olabel == EPSILON_ID for _, arc in self.all_arcs()
        )

    def refresh_properties(self):
        """Recompute the property flags from scratch."""
        props = 0
        if self.check_deterministic():
            props |= DETERMINISTIC
        if self.check_acceptor():
            props |= ACCEPTOR
        if self.check_eps_free():
            props |= EPS_FREE
        self.properties = props | (self.properties & (ILABEL_SORTED | OLABEL_SORTED))
        return self.properties

    def has_property(self, flag: int) -> bool:
        return bool(self.properties & flag)

    # -- misc -----------------------------------------------------------

    def copy(self) -> "Wfst":
        out = Wfst(self.isymbols, self.osymbols)
        out._arcs = [[Arc(a.ilabel, a.olabel, a.weight, a.nextstate) for a in arcs]
                     for arcs in self._arcs]
        out.start = self.start
        out.finals = dict(self.finals)
        out.properties = self.properties
        return out

    def __repr__(self):
        return (f"Wfst({self.num_states()} states, {self.num_arcs()} arcs, "
                f"{len(self.finals)} finals)")


def linear_acceptor(symbols, table: SymbolTable, arc_weight: float = ONE,
                    final_weight: float = ONE) -> Wfst:
    """Single-path acceptor of the given symbol sequence."""
    m = Wfst(table)
    prev = m.add_state()
    m.set_start(prev)
    for s in symbols:
        nxt = m.add_state()
        label = table.id(s)
        m.add_arc(prev, label, label, arc_weight, nxt)
        prev = nxt
    m.set_final(prev, final_weight)
    m.properties = DETERMINISTIC | ACCEPTOR | EPS_FREE
    return m
