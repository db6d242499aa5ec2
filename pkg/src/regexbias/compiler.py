"""Regex AST -> NFA -> DFA -> unweighted acceptor R -> biased machine T_r.

The bias step composes R with a one-state scorer whose self-loops cost
alpha per symbol, so a matching string of length n costs exactly n*alpha.
"""

from dataclasses import dataclass

from . import grammar as gr
from .errors import SymbolError
from .fst import ACCEPTOR, BLANK, DISAMBIG, EPSILON_ID, REGEX_NT, SymbolTable, Wfst
from .ops import DETERMINIZE_STATE_BUDGET, compose, connect, determinize, minimize

RESERVED = {BLANK, DISAMBIG, REGEX_NT}


@dataclass(frozen=True)
class BiasSpec:
    """Per-matched-symbol cost alpha; negative values strengthen the bias."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha == self.alpha and abs(self.alpha) != float("inf")):
            raise ValueError(f"alpha must be a finite real, got {self.alpha}")


def character_symbols(table: SymbolTable):
    """Symbols the recognizer can actually emit: everything but the reserved ones."""
    return [s for i, s in enumerate(table) if i != EPSILON_ID and s not in RESERVED]


def ast_to_nfa(ast, alphabet: SymbolTable) -> Wfst:
    """Thompson construction: an eps-NFA acceptor with the regex's language.

    Literals must exist in the alphabet; character classes narrow to the
    alphabet's subset of their range and must stay non-empty.
    """
    m = Wfst(alphabet)

    def lookup(symbol):
        label = alphabet.find(symbol)
        if label is None:
            raise SymbolError(
                f"regex symbol {symbol!r} is not in the decoder alphabet {alphabet.name!r}"
            )
        return label

    def eps(src, dst):
        m.add_arc(src, EPSILON_ID, EPSILON_ID, 0.0, dst)

    def build(node):
        if isinstance(node, gr.Literal):
            s, f = m.add_state(), m.add_state()
            label = lookup(node.symbol)
            m.add_arc(s, label, label, 0.0, f)
            return s, f
        if isinstance(node, gr.Class):
            members = [c for c in node.symbols if alphabet.find(c) is not None
                       and c not in RESERVED]
            if not members:
                raise SymbolError(
                    f"character class {node.symbols!r} has no symbols in the "
                    f"decoder alphabet {alphabet.name!r}"
                )
            s, f = m.add_state(), m.add_state()
            for c in members:
                label = alphabet.id(c)
                m.add_arc(s, label, label, 0.0, f)
            return s, f
        if isinstance(node, gr.Concat):
            if not node.children:
                s, f = m.add_state(), m.add_state()
                eps(s, f)
                return s, f
            s, cur = build(node.children[0])
            for child in node.children[1:]:
                ns, nf = build(child)
                eps(cur, ns)
                cur = nf
            return s, cur
        if isinstance(node, gr.Union):
            s, f = m.add_state(), m.add_state()
            for child in node.children:
                cs, cf = build(child)
                eps(s, cs)
                eps(cf, f)
            return s, f
        if isinstance(node, gr.Star):
            s, f = m.add_state(), m.add_state()
            cs, cf = build(node.child)
            eps(s, f)
            eps(s, cs)
            eps(cf, f)
            eps(cf, cs)
            return s, f
        if isinstance(node, gr.Plus):
            s, f = m.add_state(), m.add_state()
            cs, cf = build(node.child)
            eps(s, cs)
            eps(cf, f)
            eps(cf, cs)
            return s, f
        if isinstance(node, gr.Opt):
            s, f = m.add_state(), m.add_state()
            cs, cf = build(node.child)
            eps(s, f)
            eps(s, cs)
            eps(cf, f)
            return s, f
        if isinstance(node, gr.Repeat):
            s = m.add_state()
            cur = s
            for _ in range(node.min):
                cs, cf = build(node.child)
                eps(cur, cs)
                cur = cf
            stops = [cur]
            for _ in range(node.max - node.min):
                cs, cf = build(node.child)
                eps(cur, cs)
                cur = cf
                stops.append(cur)
            f = m.add_state()
            for stop in stops:
                eps(stop, f)
            return s, f
        if isinstance(node, gr.Ref):
            raise SymbolError(
                f"unresolved reference {node.name!r}; resolve the grammar first"
            )
        raise TypeError(f"not a regex AST node: {node!r}")

    start, final = build(ast)
    m.set_start(start)
    m.set_final(final, 0.0)
    return m


def nfa_to_dfa(nfa: Wfst, state_budget: int = DETERMINIZE_STATE_BUDGET) -> Wfst:
    """Subset construction plus minimization: the canonical eps-free DFA."""
    dfa = minimize(determinize(nfa, state_budget))
    dfa.refresh_properties()
    return dfa


def dfa_to_acceptor(dfa: Wfst) -> Wfst:
    """The unweighted acceptor R: identical in/out labels, every weight 0."""
    out = Wfst(dfa.isymbols, dfa.osymbols)
    out.add_states(dfa.num_states())
    if dfa.is_empty():
        return out
    out.set_start(dfa.start)
    for s in dfa.states():
        for arc in dfa.arcs(s):
            out.add_arc(s, arc.ilabel, arc.ilabel, 0.0, arc.nextstate)
    for s in dfa.finals:
        out.set_final(s, 0.0)
    out.properties = dfa.properties | ACCEPTOR
    return out


def scorer(alphabet: SymbolTable, alpha: float) -> Wfst:
    """S_alpha: one state, start and final, a self-loop per character at alpha."""
    m = Wfst(alphabet, alphabet)
    s = m.add_state()
    m.set_start(s)
    m.set_final(s, 0.0)
    for symbol in character_symbols(alphabet):
        label = alphabet.id(symbol)
        m.add_arc(s, label, label, alpha, s)
    return m


def apply_bias(r: Wfst, bias: BiasSpec) -> Wfst:
    """T_r = S_alpha o R: same language, each matched symbol now costs alpha."""
    return connect(compose(scorer(r.isymbols, bias.alpha), r))


def compile_grammar(text: str, alphabet: SymbolTable):
    """Grammar text -> (GrammarSource, unweighted acceptor R)."""
    source = gr.parse_grammar(text)
    nfa = ast_to_nfa(source.export_ast(), alphabet)
    return source, dfa_to_acceptor(nfa_to_dfa(nfa))


def compile_biased(text: str, alphabet: SymbolTable, alpha: float):
    """Grammar text -> (GrammarSource, R, T_r at the given alpha)."""
    source, r = compile_grammar(text, alphabet)
    return source, r, apply_bias(r, BiasSpec(alpha))
