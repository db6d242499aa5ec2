"""Shared fixtures and the brute-force machinery the equivalence tests use."""

import random

import pytest

from regexbias.fst import EPSILON_ID, SymbolTable, Wfst
from regexbias.semiring import ZERO


def make_table(symbols, name="t"):
    return SymbolTable.from_symbols(symbols, name)


def random_machine(rng: random.Random, table: SymbolTable, max_states=6,
                   acyclic=False, acceptor=False, eps_prob=0.2,
                   arc_density=1.8, weight_range=(0.0, 4.0)):
    """Small random transducer over `table` (same table on both sides)."""
    n = rng.randint(1, max_states)
    m = Wfst(table, table)
    m.add_states(n)
    m.set_start(0)
    n_arcs = max(1, int(arc_density * n))
    labels = list(range(1, len(table)))
    for _ in range(n_arcs):
        src = rng.randrange(n)
        if acyclic:
            if src == n - 1:
                continue
            dst = rng.randrange(src + 1, n)
        else:
            dst = rng.randrange(n)
        if rng.random() < eps_prob:
            ilabel = EPSILON_ID
        else:
            ilabel = rng.choice(labels)
        if acceptor:
            olabel = ilabel
        elif rng.random() < eps_prob:
            olabel = EPSILON_ID
        else:
            olabel = rng.choice(labels)
        w = round(rng.uniform(*weight_range), 3)
        m.add_arc(src, ilabel, olabel, w, dst)
    n_finals = rng.randint(1, n)
    for s in rng.sample(range(n), n_finals):
        m.set_final(s, round(rng.uniform(0.0, 2.0), 3))
    return m


def paths_equal(lhs: dict, rhs: dict, tol=1e-9):
    """Compare two enumerate_paths results with a weight tolerance."""
    if set(lhs) != set(rhs):
        return False
    return all(abs(lhs[k] - rhs[k]) <= tol for k in lhs)


def join_paths(pa: dict, pb: dict):
    """Relational join of two path sets: the brute-force compose oracle."""
    out = {}
    for (x, y), w1 in pa.items():
        for (y2, z), w2 in pb.items():
            if y != y2:
                continue
            key = (x, z)
            w = w1 + w2
            if w < out.get(key, ZERO):
                out[key] = w
    return out


@pytest.fixture
def rng():
    return random.Random(20260810)


@pytest.fixture
def ab_table():
    return make_table(["a", "b"], "ab")


@pytest.fixture
def abcd_table():
    return make_table(["a", "b", "c", "d"], "abcd")
