"""Word-level language model machinery: counts -> G, lexicon -> L, the
`$REGEX` nonterminal splice (G', L'), and the optimized root graph.

Layout conventions baked in here and relied on downstream:

* G's unigram/backoff state is recorded as `machine.unigram_state`.
* The word table is shared by G and L's output side and also carries one
  token per recognizer character, so out-of-vocabulary spans can surface
  verbatim in the decoded token stream (the char-loop fallback).
* L emits a word on the first character of its spelling and a space
  separator between words; `#0` is appended to spellings that collide
  with or prefix another word's spelling, and is relabeled away after the
  root graph is optimized.
"""

import math
from dataclasses import dataclass, field

from .compiler import character_symbols
from .errors import LexiconError, RegexBiasError, SymbolError, SymbolTableMismatchError
from .fst import DISAMBIG, EPSILON_ID, REGEX_NT, SymbolTable, Wfst
from .ops import compose, connect, optim, relabel, rm_epsilon, shortest_path
from .semiring import ZERO

SENTENCE_START = "<s>"
SENTENCE_END = "</s>"
WORD_SEPARATOR = " "


@dataclass
class NgramCounts:
    unigram: dict = field(default_factory=dict)
    bigram: dict = field(default_factory=dict)
    sentences: int = 0

    def vocabulary(self):
        return sorted(w for w in self.unigram
                      if w not in (SENTENCE_START, SENTENCE_END))


@dataclass
class LmConfig:
    backoff_discount: float = 0.4
    char_fallback_penalty: float = 8.0
    nonterminal_weight: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.backoff_discount < 1.0:
            raise ValueError(f"backoff_discount must be in (0, 1), got {self.backoff_discount}")
        if math.isnan(self.char_fallback_penalty) or math.isinf(self.char_fallback_penalty):
            raise ValueError("char_fallback_penalty must be finite")
        if math.isnan(self.nonterminal_weight):
            raise ValueError("nonterminal_weight may not be NaN")


class Lexicon:
    """Word -> character spelling map. Spellings may not contain spaces."""

    def __init__(self, entries=None):
        self.entries: dict[str, tuple] = {}
        for word, spelling in (entries or {}).items():
            self.add(word, spelling)

    def add(self, word, spelling):
        spelling = tuple(spelling)
        if not word or not spelling:
            raise LexiconError(f"empty word or spelling: {word!r} -> {spelling!r}")
        if WORD_SEPARATOR in spelling:
            raise LexiconError(f"spelling of {word!r} contains the word separator")
        self.entries[word] = spelling

    @classmethod
    def from_words(cls, words):
        """Spell each word with its own characters."""
        lex = cls()
        for w in words:
            lex.add(w, tuple(w))
        return lex

    @classmethod
    def from_text(cls, text):
        """Parse `word<TAB>c1 c2 c3 ...` lines."""
        lex = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            word, _, rest = line.partition("\t")
            chars = rest.split(" ") if rest else []
            if not word or not chars or any(not c for c in chars):
                raise LexiconError(f"bad lexicon line {lineno}: {line!r}")
            lex.add(word, chars)
        return lex

    def to_text(self):
        return "".join(f"{w}\t{' '.join(sp)}\n" for w, sp in sorted(self.entries.items()))

    def words(self):
        return sorted(self.entries)

    def __len__(self):
        return len(self.entries)


def count_ngrams(lines) -> NgramCounts:
    """Exact unigram and bigram counts with sentence-boundary markers."""
    counts = NgramCounts()
    uni, bi = counts.unigram, counts.bigram
    for line in lines:
        tokens = line.split()
        if not tokens:
            continue
        counts.sentences += 1
        uni[SENTENCE_START] = uni.get(SENTENCE_START, 0) + 1
        prev = SENTENCE_START
        for tok in tokens:
            uni[tok] = uni.get(tok, 0) + 1
            bi[(prev, tok)] = bi.get((prev, tok), 0) + 1
            prev = tok
        uni[SENTENCE_END] = uni.get(SENTENCE_END, 0) + 1
        bi[(prev, SENTENCE_END)] = bi.get((prev, SENTENCE_END), 0) + 1
    return counts


def merge_counts(parts) -> NgramCounts:
    """Counts form a commutative monoid; shard and merge freely."""
    total = NgramCounts()
    for part in parts:
        for w, c in part.unigram.items():
            total.unigram[w] = total.unigram.get(w, 0) + c
        for pair, c in part.bigram.items():
            total.bigram[pair] = total.bigram.get(pair, 0) + c
        total.sentences += part.sentences
    return total


def make_word_table(words, name="words") -> SymbolTable:
    return SymbolTable.from_symbols(sorted(words), name)


def _neglog(p: float) -> float:
    if p <= 0.0:
        return ZERO
    return -math.log(p)


def build_grammar(counts: NgramCounts, cfg: LmConfig,
                  word_table: SymbolTable | None = None) -> Wfst:
    """Bigram backoff acceptor over words.

    Unigram arcs leave the backoff state at -log p(w); bigram arcs cost
    -log p(w2|w1) with absolute discounting (discount = backoff_discount);
    epsilon backoff arcs return to the unigram state carrying the
    normalized discounted mass. Sentence end lands in final weights.
    """
    vocab = counts.vocabulary()
    if not vocab:
        raise RegexBiasError("cannot build a grammar from an empty vocabulary")
    if word_table is None:
        word_table = make_word_table(vocab)
    d = cfg.backoff_discount

    total = sum(c for w, c in counts.unigram.items() if w != SENTENCE_START)
    p_uni = {w: counts.unigram[w] / total for w in vocab}
    p_uni[SENTENCE_END] = counts.unigram.get(SENTENCE_END, 0) / total

    g = Wfst(word_table, word_table)
    unigram_state = g.add_state()
    word_state = {}
    for w in vocab:
        word_state[w] = g.add_state()
        g.add_arc(unigram_state, word_table.id(w), word_table.id(w),
                  _neglog(p_uni[w]), word_state[w])
    if p_uni[SENTENCE_END] > 0.0:
        g.set_final(unigram_state, _neglog(p_uni[SENTENCE_END]))

    contexts = {}
    for (w1, w2), c in counts.bigram.items():
        contexts.setdefault(w1, {})[w2] = c
    start_state = g.add_state()
    g.set_start(start_state)
    state_of = dict(word_state)
    state_of[SENTENCE_START] = start_state

    for w1 in sorted(contexts):
        src = state_of[w1]
        conts = contexts[w1]
        c_ctx = sum(conts.values())
        unseen_mass = sum(p_uni[w] for w in vocab if w not in conts)
        if SENTENCE_END not in conts:
            unseen_mass += p_uni[SENTENCE_END]
        discount = d if unseen_mass > 0.0 else 0.0  # nowhere to back off to
        for w2 in sorted(conts):
            p = (conts[w2] - discount) / c_ctx
            if w2 == SENTENCE_END:
                g.set_final(src, _neglog(p))
            else:
                g.add_arc(src, word_table.id(w2), word_table.id(w2),
                          _neglog(p), word_state[w2])
        if discount > 0.0:
            bow = (discount * len(conts) / c_ctx) / unseen_mass
            g.add_arc(src, EPSILON_ID, EPSILON_ID, _neglog(bow), unigram_state)
    g.unigram_state = unigram_state
    return g


def grammar_from_probs(uni_probs: dict, bi_probs: dict | None = None,
                       word_table: SymbolTable | None = None) -> Wfst:
    """G from hand-set probabilities, shaped like the two-word figure model:
    unigram arcs from the start at -log p(w), bigram arcs between word
    states at -log p(w2|w1), every word state final with weight 0."""
    if not uni_probs:
        raise RegexBiasError("cannot build a grammar from an empty vocabulary")
    if word_table is None:
        word_table = make_word_table(uni_probs)
    g = Wfst(word_table, word_table)
    start = g.add_state()
    g.set_start(start)
    word_state = {}
    for w in sorted(uni_probs):
        word_state[w] = g.add_state()
        g.add_arc(start, word_table.id(w), word_table.id(w),
                  _neglog(uni_probs[w]), word_state[w])
        g.set_final(word_state[w], 0.0)
    for (w1, w2), p in sorted((bi_probs or {}).items()):
        g.add_arc(word_state[w1], word_table.id(w2), word_table.id(w2),
                  _neglog(p), word_state[w2])
    g.unigram_state = start
    return g


def disambiguated_spellings(lex: Lexicon):
    """Append `#0` (repeated per extra collision) to spellings that equal or
    prefix another word's spelling, so the lexicon determinizes cleanly."""
    spellings = {w: tuple(sp) for w, sp in lex.entries.items()}
    by_spelling = {}
    for w in sorted(spellings):
        by_spelling.setdefault(spellings[w], []).append(w)
    all_spellings = set(spellings.values())

    def has_proper_extension(sp):
        return any(other != sp and other[:len(sp)] == sp for other in all_spellings)

    out = {}
    for sp, words in sorted(by_spelling.items()):
        needs_marker = len(words) > 1 or has_proper_extension(sp)
        for k, w in enumerate(words):
            if needs_marker:
                out[w] = sp + (DISAMBIG,) * (k + 1)
            else:
                out[w] = sp
    return out


def build_lexicon(lex: Lexicon, charset: SymbolTable,
                  word_table: SymbolTable | None = None) -> Wfst:
    """Characters -> words transducer, closed over word sequences with a
    space separator; the word label rides on the first character."""
    if not len(lex):
        raise RegexBiasError("cannot build a lexicon machine from no entries")
    if word_table is None:
        word_table = make_word_table(lex.words())
    spellings = disambiguated_spellings(lex)
    if any(DISAMBIG in sp for sp in spellings.values()):
        charset.add(DISAMBIG)
    sep = charset.find(WORD_SEPARATOR)

    l = Wfst(charset, word_table)
    root = l.add_state()
    l.set_start(root)
    for w in sorted(spellings):
        wid = word_table.find(w)
        if wid is None:
            raise SymbolError(f"word {w!r} missing from table {word_table.name!r}")
        spelling = spellings[w]
        cur = root
        out_label = wid
        for ch in spelling:
            cid = charset.find(ch)
            if cid is None:
                raise LexiconError(
                    f"spelling of {w!r} uses unknown character {ch!r}"
                )
            nxt = l.add_state()
            l.add_arc(cur, cid, out_label, 0.0, nxt)
            cur = nxt
            out_label = EPSILON_ID
        l.set_final(cur, 0.0)
        if sep is not None:
            l.add_arc(cur, sep, EPSILON_ID, 0.0, root)
    return l


def add_char_fallback(g: Wfst, l: Wfst, charset: SymbolTable, cfg: LmConfig):
    """Attach the out-of-vocabulary escape hatch.

    The grammar's unigram state gains a self-loop per character token at
    char_fallback_penalty; the lexicon gains identity character paths so
    any text can be consumed and resurfaced verbatim as char tokens.
    """
    word_table = g.isymbols
    if word_table is not l.osymbols and word_table != l.osymbols:
        raise SymbolTableMismatchError(word_table.name, l.osymbols.name)
    chars = [c for c in character_symbols(charset) if c != WORD_SEPARATOR]
    for c in chars:
        word_table.add(c)

    g2 = g.copy()
    u = getattr(g, "unigram_state", None)
    if u is None:
        raise RegexBiasError("grammar has no recorded unigram_state")
    for c in chars:
        tok = word_table.id(c)
        g2.add_arc(u, tok, tok, cfg.char_fallback_penalty, u)
    g2.unigram_state = u

    l2 = l.copy()
    hub = l2.add_state()
    sep = charset.find(WORD_SEPARATOR)
    for c in chars:
        cid = charset.id(c)
        tok = word_table.id(c)
        l2.add_arc(l2.start, cid, tok, 0.0, hub)
        l2.add_arc(hub, cid, tok, 0.0, hub)
    l2.set_final(hub, 0.0)
    if sep is not None:
        l2.add_arc(hub, sep, EPSILON_ID, 0.0, l2.start)
    return g2, l2


def insert_nonterminal(g: Wfst, l: Wfst, cfg: LmConfig):
    """G', L': splice the `$REGEX` nonterminal in as a unigram word whose
    spelling is one epsilon, so a regex span can cover part of a sentence
    while the rest is scored by G."""
    word_table = g.isymbols
    nt = word_table.find(REGEX_NT)
    if nt is None:
        raise SymbolError(
            f"{REGEX_NT!r} is not registered in the word table {word_table.name!r}"
        )
    u = getattr(g, "unigram_state", None)
    if u is None:
        raise RegexBiasError("grammar has no recorded unigram_state")

    g2 = g.copy()
    if cfg.nonterminal_weight != ZERO:  # +inf would kill the path anyway
        g2.add_arc(u, nt, nt, cfg.nonterminal_weight, u)
    g2.unigram_state = u

    l2 = l.copy()
    end = l2.add_state()
    l2.add_arc(l2.start, EPSILON_ID, nt, 0.0, end)
    l2.set_final(end, 0.0)
    sep = l2.isymbols.find(WORD_SEPARATOR)
    if sep is not None:
        l2.add_arc(end, sep, EPSILON_ID, 0.0, l2.start)
    return g2, l2


def build_root(l_prime: Wfst, g_prime: Wfst) -> Wfst:
    """T_root = optim(L' o G'), with the `#0` markers relabeled away after
    optimization; `$REGEX` labels pass through optim as ordinary symbols."""
    if l_prime.osymbols != g_prime.isymbols:
        raise SymbolTableMismatchError(
            l_prime.osymbols.name, g_prime.isymbols.name,
            "lexicon output side must be the grammar's word table",
        )
    root = optim(compose(l_prime, g_prime))
    disambig = l_prime.isymbols.find(DISAMBIG)
    if disambig is not None:
        root = rm_epsilon(relabel(root, imap={disambig: EPSILON_ID}))
    root = connect(root)
    root.refresh_properties()
    return root


def check_stochastic(g: Wfst, counts: NgramCounts, tol: float = 1e-6) -> float:
    """Max deviation of per-state outgoing word mass + backoff mass from 1.

    Char-fallback and nonterminal arcs are biasing machinery outside the
    probability budget and are excluded.
    """
    vocab = set(counts.vocabulary())
    total = sum(c for w, c in counts.unigram.items() if w != SENTENCE_START)
    p_uni = {w: counts.unigram[w] / total
             for w in counts.unigram if w != SENTENCE_START}
    worst = 0.0
    u = getattr(g, "unigram_state", None)
    for s in g.states():
        word_arcs = []
        backoff_weight = None
        for arc in g.arcs(s):
            if arc.ilabel == EPSILON_ID:
                if arc.nextstate == u:
                    backoff_weight = arc.weight
                continue
            if s == u and arc.nextstate == u:
                continue  # char-fallback loop, outside the budget
            symbol = g.isymbols.sym(arc.ilabel)
            if symbol in vocab:
                word_arcs.append((symbol, arc.weight))
        if not word_arcs and backoff_weight is None and not g.is_final(s):
            continue
        mass = sum(math.exp(-w) for _, w in word_arcs)
        if g.is_final(s):
            mass += math.exp(-g.final(s))
        if backoff_weight is not None:
            seen = {symbol for symbol, _ in word_arcs}
            unseen = sum(p for w, p in p_uni.items() if w in vocab and w not in seen)
            if not g.is_final(s):
                unseen += p_uni.get(SENTENCE_END, 0.0)
            mass += math.exp(-backoff_weight) * unseen
        worst = max(worst, abs(mass - 1.0))
    if worst > tol:
        raise RegexBiasError(f"grammar mass deviates from 1 by {worst}")
    return worst
