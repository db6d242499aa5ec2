"""Thrax-lite grammar files: `name = expr ;` definitions and one export.

Supported regex syntax: double-quoted literals (a quoted string is the
concatenation of its characters), `|`, juxtaposition for concatenation,
`*` `+` `?`, `{m}`, `{m,n}` with m <= n <= 64, parentheses, references to
earlier definitions, character classes like `[A-Z0-9]`, the escapes `\\d`
(digits) and `\\u` (upper-case A-Z), and `#` comments. References may only
point at names defined earlier in the file, so grammars cannot recurse.
"""

import re as _stdlib_re
import string
from dataclasses import dataclass, field

from .errors import GrammarError

MAX_REPEAT = 64

DIGITS = tuple(string.digits)
UPPER = tuple(string.ascii_uppercase)


# --- AST ------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    symbol: str


@dataclass(frozen=True)
class Class:
    """Candidate characters; narrowed to the decoder alphabet at compile time."""

    symbols: tuple

    def __post_init__(self):
        if not self.symbols:
            raise GrammarError("empty character class")


@dataclass(frozen=True)
class Concat:
    children: tuple


@dataclass(frozen=True)
class Union:
    children: tuple


@dataclass(frozen=True)
class Star:
    child: object


@dataclass(frozen=True)
class Plus:
    child: object


@dataclass(frozen=True)
class Opt:
    child: object


@dataclass(frozen=True)
class Repeat:
    child: object
    min: int
    max: int

    def __post_init__(self):
        if not (0 <= self.min <= self.max <= MAX_REPEAT):
            raise GrammarError(
                f"repeat bounds must satisfy 0 <= min <= max <= {MAX_REPEAT}, "
                f"got {{{self.min},{self.max}}}"
            )


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass
class GrammarSource:
    """Parsed grammar: ordered definitions plus the mandatory export."""

    definitions: list = field(default_factory=list)  # (name, source text, ast)
    export_name: str = "export"

    def names(self):
        return [name for name, _, _ in self.definitions]

    def ast(self, name):
        for n, _, a in self.definitions:
            if n == name:
                return a
        raise GrammarError(f"no definition named {name!r}")

    def export_ast(self):
        """The export expression with every reference substituted away."""
        resolved = {}
        for name, _, ast in self.definitions:
            resolved[name] = _substitute(ast, resolved)
        return resolved[self.export_name]


def _substitute(node, resolved):
    if isinstance(node, Ref):
        return resolved[node.name]
    if isinstance(node, Concat):
        return Concat(tuple(_substitute(c, resolved) for c in node.children))
    if isinstance(node, Union):
        return Union(tuple(_substitute(c, resolved) for c in node.children))
    if isinstance(node, Star):
        return Star(_substitute(node.child, resolved))
    if isinstance(node, Plus):
        return Plus(_substitute(node.child, resolved))
    if isinstance(node, Opt):
        return Opt(_substitute(node.child, resolved))
    if isinstance(node, Repeat):
        return Repeat(_substitute(node.child, resolved), node.min, node.max)
    return node


# --- tokenizer --------------------------------------------------------------

_PUNCT = {"=": "EQUALS", ";": "SEMI", "|": "PIPE", "*": "STAR", "+": "PLUS",
          "?": "QMARK", "(": "LPAREN", ")": "RPAREN", "{": "LBRACE",
          "}": "RBRACE", ",": "COMMA"}

_NAME_RE = _stdlib_re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = _stdlib_re.compile(r"[0-9]+")


@dataclass
class _Token:
    kind: str
    value: object
    line: int
    column: int


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)

    def err(msg):
        raise GrammarError(msg, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch == '"':
            i += 1
            col += 1
            chars = []
            while True:
                if i >= n or text[i] == "\n":
                    err("unterminated string literal")
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        err("dangling backslash in string")
                    chars.append(text[i + 1])
                    i += 2
                    col += 2
                else:
                    chars.append(c)
                    i += 1
                    col += 1
            tokens.append(_Token("STRING", "".join(chars), line, start_col))
            continue
        if ch == "[":
            i += 1
            col += 1
            members = []
            while True:
                if i >= n or text[i] == "\n":
                    err("unterminated character class")
                c = text[i]
                if c == "]":
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        err("dangling backslash in class")
                    members.append(text[i + 1])
                    i += 2
                    col += 2
                    continue
                if (i + 2 < n and text[i + 1] == "-" and text[i + 2] not in "]\n"):
                    lo, hi = c, text[i + 2]
                    if ord(lo) > ord(hi):
                        err(f"backwards class range {lo}-{hi}")
                    members.extend(chr(o) for o in range(ord(lo), ord(hi) + 1))
                    i += 3
                    col += 3
                    continue
                members.append(c)
                i += 1
                col += 1
            if not members:
                err("empty character class")
            tokens.append(_Token("CLASS", tuple(members), line, start_col))
            continue
        if ch == "\\":
            if i + 1 >= n:
                err("dangling backslash")
            esc = text[i + 1]
            if esc == "d":
                tokens.append(_Token("CLASS", DIGITS, line, start_col))
            elif esc == "u":
                tokens.append(_Token("CLASS", UPPER, line, start_col))
            else:
                err(f"unknown escape \\{esc} (only \\d and \\u are supported)")
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            tokens.append(_Token(_PUNCT[ch], ch, line, start_col))
            i += 1
            col += 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            tokens.append(_Token("NUMBER", int(m.group()), line, start_col))
            col += m.end() - i
            i = m.end()
            continue
        m = _NAME_RE.match(text, i)
        if m:
            tokens.append(_Token("NAME", m.group(), line, start_col))
            col += m.end() - i
            i = m.end()
            continue
        err(f"unexpected character {ch!r}")
    tokens.append(_Token("EOF", None, line, col))
    return tokens


# --- parser -----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens, known_names):
        self.tokens = tokens
        self.pos = 0
        self.known = known_names

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok.kind != kind:
            raise GrammarError(f"expected {kind}, found {tok.kind}", tok.line, tok.column)
        self.pos += 1
        return tok

    def parse_expr(self):
        alternatives = [self.parse_concat()]
        while self.peek().kind == "PIPE":
            self.take()
            alternatives.append(self.parse_concat())
        if len(alternatives) == 1:
            return alternatives[0]
        return Union(tuple(alternatives))

    def parse_concat(self):
        parts = []
        while self.peek().kind in ("STRING", "CLASS", "NAME", "LPAREN"):
            parts.append(self.parse_postfix())
        if not parts:
            tok = self.peek()
            raise GrammarError("expected an expression", tok.line, tok.column)
        if len(parts) == 1:
            return parts[0]
        return Concat(tuple(parts))

    def parse_postfix(self):
        node = self.parse_atom()
        while True:
            kind = self.peek().kind
            if kind == "STAR":
                self.take()
                node = Star(node)
            elif kind == "PLUS":
                self.take()
                node = Plus(node)
            elif kind == "QMARK":
                self.take()
                node = Opt(node)
            elif kind == "LBRACE":
                tok = self.take()
                lo = self.take("NUMBER").value
                hi = lo
                if self.peek().kind == "COMMA":
                    self.take()
                    hi = self.take("NUMBER").value
                self.take("RBRACE")
                try:
                    node = Repeat(node, lo, hi)
                except GrammarError as exc:
                    raise GrammarError(str(exc), tok.line, tok.column) from None
            else:
                return node

    def parse_atom(self):
        tok = self.peek()
        if tok.kind == "STRING":
            self.take()
            if len(tok.value) == 0:
                return Concat(())  # empty string: matches epsilon
            if len(tok.value) == 1:
                return Literal(tok.value)
            return Concat(tuple(Literal(c) for c in tok.value))
        if tok.kind == "CLASS":
            self.take()
            return Class(tok.value)
        if tok.kind == "NAME":
            self.take()
            if tok.value not in self.known:
                raise GrammarError(
                    f"reference to undefined name {tok.value!r} "
                    "(definitions may only refer to earlier lines)",
                    tok.line, tok.column)
            return Ref(tok.value)
        if tok.kind == "LPAREN":
            self.take()
            node = self.parse_expr()
            self.take("RPAREN")
            return node
        raise GrammarError(f"expected an expression, found {tok.kind}", tok.line, tok.column)


def parse_grammar(text: str) -> GrammarSource:
    """Parse and validate grammar text into ordered, reference-checked rules."""
    tokens = _tokenize(text)
    source = GrammarSource()
    known = set()
    parser = _Parser(tokens, known)
    while parser.peek().kind != "EOF":
        name_tok = parser.take("NAME")
        name = name_tok.value
        if name in known:
            raise GrammarError(f"duplicate definition of {name!r}",
                               name_tok.line, name_tok.column)
        parser.take("EQUALS")
        expr_start = parser.pos
        ast = parser.parse_expr()
        semi = parser.take("SEMI")
        expr_text = _span_text(tokens, expr_start, parser.pos - 1)
        source.definitions.append((name, expr_text, ast))
        known.add(name)
        del semi
    if "export" not in known:
        raise GrammarError("grammar must end with an `export = expr ;` rule")
    return source


def _span_text(tokens, start, end):
    parts = []
    for tok in tokens[start:end]:
        if tok.kind == "STRING":
            parts.append('"' + str(tok.value).replace("\\", "\\\\").replace('"', '\\"') + '"')
        elif tok.kind == "CLASS":
            parts.append("[" + "".join(tok.value) + "]")
        else:
            parts.append(str(tok.value))
    return " ".join(parts)


# --- Python-regex rendering (the reference-engine oracle hook) ---------------

def ast_to_pattern(node, alphabet=None) -> str:
    """Render an AST as an equivalent Python `re` pattern.

    When `alphabet` (an iterable of symbols) is given, character classes
    are narrowed to it, mirroring how compilation expands classes against
    the decoder's symbol table.
    """
    allowed = set(alphabet) if alphabet is not None else None

    def render(n):
        if isinstance(n, Literal):
            return _stdlib_re.escape(n.symbol)
        if isinstance(n, Class):
            members = [c for c in n.symbols if allowed is None or c in allowed]
            if not members:
                raise GrammarError("character class is empty after alphabet narrowing")
            return "(?:" + "|".join(_stdlib_re.escape(c) for c in members) + ")"
        if isinstance(n, Concat):
            return "".join(render(c) for c in n.children)
        if isinstance(n, Union):
            return "(?:" + "|".join(render(c) for c in n.children) + ")"
        if isinstance(n, Star):
            return "(?:" + render(n.child) + ")*"
        if isinstance(n, Plus):
            return "(?:" + render(n.child) + ")+"
        if isinstance(n, Opt):
            return "(?:" + render(n.child) + ")?"
        if isinstance(n, Repeat):
            return "(?:" + render(n.child) + ")" + "{%d,%d}" % (n.min, n.max)
        if isinstance(n, Ref):
            raise GrammarError(f"unresolved reference {n.name!r}; call export_ast() first")
        raise TypeError(f"not a regex AST node: {n!r}")

    return render(node)
