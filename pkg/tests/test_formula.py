import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import random_box, random_formula, random_path
from stlplan.formula import (
    AgentAtom,
    Always,
    And,
    Atom,
    Eventually,
    MaAnd,
    MaOr,
    NegAtom,
    Not,
    Or,
    Release,
    Until,
    agents_of,
    formula_size,
    horizon,
    is_nnf,
    regions_of,
    to_nnf,
    to_text,
)
from stlplan.geometry import box
from stlplan.monitor import sat_set
from stlplan.parser import SpecError, parse_spec, parse_stl

A, B, C = Atom("A"), Atom("B"), Atom("C")
REG = {"goal": box((0, 0), (1, 1)), "obs": box((2, 2), (3, 3)), "g2": box((4, 4), (5, 5)), "g": box((0, 0), (1, 1))}


def test_parse_examples():
    assert parse_spec("A1(F[0,10] goal)", REG, 1) == AgentAtom(1, Eventually(0, 10, Atom("goal")))
    got = parse_spec("A1(G[0,5] !obs) & A2(F[0,5] g2)", REG, 2)
    assert got == MaAnd((AgentAtom(1, Always(0, 5, NegAtom("obs"))), AgentAtom(2, Eventually(0, 5, Atom("g2")))))


@pytest.mark.parametrize(
    "text,fragment,line,col",
    [
        ("A1(F[5,2] g)", "a > b", 1, 5),
        ("A1(F[0,2] g) &\n A3(g)", "agent index 3", 2, 2),
        ("A1(F[0,2] q)", "unknown region 'q'", 1, 11),
        ("A1(F[0,2 g)", "expected ']'", 1, 10),
    ],
)
def test_parse_errors(text, fragment, line, col):
    with pytest.raises(SpecError) as info:
        parse_spec(text, REG, 2)
    assert fragment in str(info.value)
    assert (info.value.line, info.value.col) == (line, col)


def test_precedence():
    assert parse_stl("A | B & C") == Or((A, And((B, C))))
    # U and R bind tighter than &, and associate to the left
    assert parse_stl("A U[0,1] B R[0,2] C") == Release(0, 2, Until(0, 1, A, B), C)
    assert parse_stl("!A U[0,1] B") == Until(0, 1, NegAtom("A"), B)
    assert parse_stl("F[0,1] A & B") == And((Eventually(0, 1, A), B))
    ma = parse_spec("A1(A) | A2(A) & A1(B)", None, 2)
    assert ma == MaOr((AgentAtom(1, A), MaAnd((AgentAtom(2, A), AgentAtom(1, B)))))


def test_nnf_examples():
    assert to_nnf(Not(Eventually(0, 5, A))) == Always(0, 5, NegAtom("A"))
    assert to_nnf(Not(And((A, Not(B))))) == Or((NegAtom("A"), B))
    assert to_nnf(Not(Until(1, 2, A, B))) == Release(1, 2, NegAtom("A"), NegAtom("B"))
    assert to_nnf(Not(Release(1, 2, A, B))) == Until(1, 2, NegAtom("A"), NegAtom("B"))
    assert to_nnf(Not(Not(A))) == A
    assert parse_stl("!(A U[1,2] B)") == Release(1, 2, NegAtom("A"), NegAtom("B"))


def test_formula_size_examples():
    assert formula_size(A) == 0
    assert formula_size(Eventually(0, 1, A)) == 1
    assert formula_size(And((Eventually(0, 1, A), Always(0, 1, B)))) == 3


def test_interval_validation():
    with pytest.raises(ValueError):
        Eventually(5, 2, A)
    with pytest.raises(ValueError):
        Always(-1, 2, A)
    with pytest.raises(ValueError):
        Until(0, float("inf"), A, B)


def test_helpers():
    phi = And((Eventually(0, 3, Always(1, 2, A)), Until(0, 4, B, C)))
    assert horizon(phi) == 5
    assert regions_of(phi) == {"A", "B", "C"}
    psi = MaAnd((AgentAtom(1, A), MaOr((AgentAtom(3, B), AgentAtom(2, C)))))
    assert agents_of(psi) == {1, 2, 3}
    assert regions_of(psi) == {"A", "B", "C"}
    with pytest.raises(ValueError):
        AgentAtom(0, A)


# --- properties ---------------------------------------------------------------------

names = st.sampled_from(["A", "B", "goal"])
times = st.integers(0, 20).map(float)


def _interval(draw):
    a = draw(times)
    return a, a + draw(times)


@st.composite
def formulas(draw, depth=3, allow_not=True):
    if depth == 0:
        return Atom(draw(names))
    kind = draw(st.sampled_from(["atom", "not", "and", "or", "F", "G", "U", "R"] if allow_not
                                else ["atom", "and", "or", "F", "G", "U", "R"]))
    sub = formulas(depth - 1, allow_not)
    if kind == "atom":
        return Atom(draw(names))
    if kind == "not":
        return Not(draw(sub))
    if kind in ("and", "or"):
        kids = tuple(draw(st.lists(sub, min_size=2, max_size=3)))
        return And(kids) if kind == "and" else Or(kids)
    a, b = _interval(draw)
    if kind == "F":
        return Eventually(a, b, draw(sub))
    if kind == "G":
        return Always(a, b, draw(sub))
    if kind == "U":
        return Until(a, b, draw(sub), draw(sub))
    return Release(a, b, draw(sub), draw(sub))


@given(formulas())
def test_nnf_idempotent(phi):
    once = to_nnf(phi)
    assert is_nnf(once)
    assert to_nnf(once) == once


@given(formulas())
def test_print_parse_round_trip(phi):
    phi = to_nnf(phi)
    assert parse_stl(to_text(phi)) == phi


@given(st.lists(st.tuples(st.integers(1, 3), formulas(2)), min_size=1, max_size=4), st.booleans())
def test_ma_round_trip(parts, conj):
    atoms = [AgentAtom(i, to_nnf(f)) for i, f in parts]
    psi = atoms[0] if len(atoms) == 1 else (MaAnd if conj else MaOr)(tuple(atoms))
    assert parse_spec(to_text(psi), None, 3) == psi


def test_double_negation_preserves_semantics():
    rng = np.random.default_rng(7)
    T = 10.0
    for _ in range(200):
        regions = {"A": random_box(rng), "B": random_box(rng)}
        phi = random_formula(rng, ["A", "B"], 3, T)
        dn = to_nnf(Not(Not(phi)))
        for _ in range(50):
            path = random_path(rng, int(rng.integers(1, 5)), T)
            assert sat_set(phi, path, 0.1, T, regions) == sat_set(dn, path, 0.1, T, regions)
