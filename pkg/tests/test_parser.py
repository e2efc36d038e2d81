"""Formula parser and printer: examples, precedence, round trips."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from silkit.errors import ParseError
from silkit.formula import (
    And, Atom, AtomKind, BAnd, BNot, BTerm, CloseMod, Emp, Eq, ExistsIndex,
    ExistsPort, Neq, Not, Or, PortConst, PortFun, PortVar, Pred, Star, Wand,
    bor,
)
from silkit.parser import parse_formula, print_formula


def bt(name):
    return BTerm(PortConst(name))


def test_atom_example():
    assert parse_formula("p -o q.r") == Atom(
        AtomKind.ALL_INTER, PortConst("p"), BAnd(bt("q"), bt("r"))
    )


def test_closemod_example():
    phi = parse_formula("< p -o q * q -oE p >")
    assert phi == CloseMod(
        Star(
            Atom(AtomKind.ALL_INTER, PortConst("p"), bt("q")),
            Atom(AtomKind.SOME_INTER, PortConst("q"), bt("p")),
        )
    )


def test_exists_port_example():
    phi = parse_formula("E x . p -#E ?x")
    assert phi == ExistsPort("x", Atom(AtomKind.SOME_MIN, PortConst("p"), BTerm(PortVar("x"))))


def test_exists_index():
    phi = parse_formula("E i . Sys(i,j)")
    assert phi == ExistsIndex("i", Pred("Sys", ("i", "j")))
    assert parse_formula("E ?y . ?y = p") == ExistsPort("y", Eq(PortVar("y"), PortConst("p")))


def test_precedence():
    phi = parse_formula("emp -* emp | emp & emp * emp")
    assert phi == Wand(Emp(), Or(Emp(), And(Emp(), Star(Emp(), Emp()))))
    assert parse_formula("emp * emp * emp") == Star(Star(Emp(), Emp()), Emp())
    assert parse_formula("emp -* emp -* emp") == Wand(Emp(), Wand(Emp(), Emp()))
    assert parse_formula("!emp * emp") == Star(Not(Emp()), Emp())


def test_bool_terms():
    phi = parse_formula("p -o q+r")
    assert phi == Atom(AtomKind.ALL_INTER, PortConst("p"), bor(bt("q"), bt("r")))
    assert parse_formula("p -o ~q.r") == Atom(
        AtomKind.ALL_INTER, PortConst("p"), BAnd(BNot(bt("q")), bt("r"))
    )
    assert parse_formula("p -o (q+r).s") == Atom(
        AtomKind.ALL_INTER, PortConst("p"), BAnd(bor(bt("q"), bt("r")), bt("s"))
    )


def test_port_functions_and_preds():
    assert parse_formula("p(i) -o q(j)") == Atom(
        AtomKind.ALL_INTER, PortFun("p", "i"), BTerm(PortFun("q", "j"))
    )
    assert parse_formula("Sys()") == Pred("Sys", ())
    assert parse_formula("Task(i,j)") == Pred("Task", ("i", "j"))
    assert parse_formula("i != j") == Neq(PortConst("i"), PortConst("j"))


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as e:
        parse_formula("p -o ")
    assert "line" in str(e.value)
    with pytest.raises(ParseError):
        parse_formula("p q")
    with pytest.raises(ParseError):
        parse_formula("(emp")


# --- generated round trips -------------------------------------------------

_terms = st.one_of(
    st.sampled_from([PortConst("p"), PortConst("q"), PortConst("r1")]),
    st.sampled_from([PortVar("x"), PortVar("y")]),
    st.sampled_from([PortFun("p", "i"), PortFun("q", "j")]),
)

_bools = st.recursive(
    _terms.map(BTerm),
    lambda inner: st.one_of(
        inner.map(BNot),
        st.tuples(inner, inner).map(lambda ab: BAnd(*ab)),
    ),
    max_leaves=6,
)

_atoms = st.one_of(
    st.just(Emp()),
    st.tuples(st.sampled_from(list(AtomKind)), _terms, _bools).map(lambda kab: Atom(*kab)),
    st.tuples(_terms, _terms).map(lambda ab: Eq(*ab)),
    st.tuples(_terms, _terms).map(lambda ab: Neq(*ab)),
    st.just(Pred("Sys", ("i", "j"))),
)

_formulas = st.recursive(
    _atoms,
    lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda ab: And(*ab)),
        st.tuples(inner, inner).map(lambda ab: Or(*ab)),
        st.tuples(inner, inner).map(lambda ab: Star(*ab)),
        st.tuples(inner, inner).map(lambda ab: Wand(*ab)),
        inner.map(Not),
        inner.map(CloseMod),
        inner.map(lambda f: ExistsPort("x", f)),
        inner.map(lambda f: ExistsIndex("i", f)),
    ),
    max_leaves=10,
)


@settings(max_examples=300, deadline=None)
@given(_formulas)
def test_round_trip(phi):
    assert parse_formula(print_formula(phi)) == phi
