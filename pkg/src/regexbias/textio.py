"""AT&T-style text serialization for machines and symbol tables.

Arc lines are `src<TAB>dst<TAB>ilabel<TAB>olabel<TAB>weight`, final lines
are `state<TAB>weight`; the weight field is omitted when it is 0. Labels
are integer ids resolved against the symbol table files written alongside
(`symbol<TAB>id` per line, `<eps>` is id 0). The first line's src is the
start state. Weights print with up to 9 significant digits, `inf` for the
zero element.
"""

from .errors import RegexBiasError
from .fst import SymbolTable, Wfst
from .semiring import ZERO


def format_weight(w: float) -> str:
    if w == ZERO:
        return "inf"
    return f"{w:.9g}"


def parse_weight(text: str) -> float:
    return float(text)


def write_fst_text(m: Wfst) -> str:
    if m.is_empty():
        return ""
    lines = []
    order = [m.start] + [s for s in m.states() if s != m.start]
    for s in order:
        for arc in m.arcs(s):
            fields = [str(s), str(arc.nextstate), str(arc.ilabel), str(arc.olabel)]
            if arc.weight != 0.0:
                fields.append(format_weight(arc.weight))
            lines.append("\t".join(fields))
    if not lines and m.start in m.finals:
        # arcless machine: the first (final) line still names the start state
        pass
    for s in sorted(m.finals):
        w = m.finals[s]
        if w != 0.0:
            lines.append(f"{s}\t{format_weight(w)}")
        else:
            lines.append(str(s))
    return "\n".join(lines) + ("\n" if lines else "")


def read_fst_text(text: str, isymbols: SymbolTable, osymbols: SymbolTable | None = None) -> Wfst:
    m = Wfst(isymbols, osymbols)
    pending_arcs = []
    pending_finals = []
    start = None
    max_state = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        try:
            if len(fields) in (4, 5):
                src, dst = int(fields[0]), int(fields[1])
                ilabel, olabel = int(fields[2]), int(fields[3])
                weight = parse_weight(fields[4]) if len(fields) == 5 else 0.0
                pending_arcs.append((src, dst, ilabel, olabel, weight))
                max_state = max(max_state, src, dst)
            elif len(fields) in (1, 2):
                state = int(fields[0])
                weight = parse_weight(fields[1]) if len(fields) == 2 else 0.0
                pending_finals.append((state, weight))
                max_state = max(max_state, state)
            else:
                raise ValueError(f"expected 1, 2, 4 or 5 tab-separated fields, got {len(fields)}")
        except ValueError as exc:
            raise RegexBiasError(f"bad machine text at line {lineno}: {exc}") from None
        if start is None:
            start = int(fields[0])
    if start is None:
        return m
    m.add_states(max_state + 1)
    m.set_start(start)
    for src, dst, ilabel, olabel, weight in pending_arcs:
        m.add_arc(src, ilabel, olabel, weight, dst)
    for state, weight in pending_finals:
        m.set_final(state, weight)
    return m


def write_fst(m: Wfst, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_fst_text(m))


def read_fst(path, isymbols: SymbolTable, osymbols: SymbolTable | None = None) -> Wfst:
    with open(path, encoding="utf-8") as fh:
        return read_fst_text(fh.read(), isymbols, osymbols)


def write_symbols_text(table: SymbolTable) -> str:
    return "".join(f"{sym}\t{i}\n" for i, sym in enumerate(table))


def read_symbols_text(text: str, name="symbols") -> SymbolTable:
    table = SymbolTable(name)
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        sym, _, id_text = line.rpartition("\t")
        try:
            sym_id = int(id_text)
        except ValueError:
            raise RegexBiasError(f"bad symbol table line {lineno}: {line!r}") from None
        if sym_id == 0:
            continue  # <eps> is implicit
        got = table.add(sym)
        if got != sym_id:
            raise RegexBiasError(
                f"symbol table ids must be dense and in order: {sym!r} "
                f"declared {sym_id}, expected {got}"
            )
    return table


def write_symbols(table: SymbolTable, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_symbols_text(table))


def read_symbols(path, name=None) -> SymbolTable:
    import os

    with open(path, encoding="utf-8") as fh:
        return read_symbols_text(fh.read(), name or os.path.basename(str(path)))
