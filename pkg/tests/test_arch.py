"""Architecture algebra: composition, closure, invariants, text format."""

import itertools

import pytest

from silkit.arch import (
    EMPTY, Architecture, closes, closure_of, compose, is_closed,
    parse_architecture, print_architecture,
)
from silkit.errors import InvalidArchitecture, NotDisjoint, ParseError


def A(domain, *inters):
    return Architecture.make(domain, inters)


def test_compose_matching_example():
    # two halves offering p and q respectively, sharing the interaction {p,q}
    a1 = A({"p"}, {"p", "q"})
    a2 = A({"q"}, {"p", "q"})
    assert compose(a1, a2) == A({"p", "q"}, {"p", "q"})


def test_compose_unmatched_interaction_removed():
    a1 = A({"p"}, {"p", "q"})
    a2 = A({"q"}, {"q", "r"})
    assert compose(a1, a2) == A({"p", "q"}, {"q", "r"})


def test_compose_neutral_element():
    for a in [EMPTY, A({"p"}, {"p", "q"}), A({"p", "q"}, {"p"}, {"q", "r"})]:
        assert compose(a, EMPTY) == a
        assert compose(EMPTY, a) == a


def test_compose_rejects_overlap():
    with pytest.raises(NotDisjoint):
        compose(A({"p"}), A({"p", "q"}))


def test_constructor_rejects_untouched_interaction():
    with pytest.raises(InvalidArchitecture):
        A({"p"}, {"q", "r"})
    with pytest.raises(InvalidArchitecture):
        A(set(), {"q"})
    with pytest.raises(InvalidArchitecture):
        A({"p"}, set())  # the empty interaction misses every domain


def test_closure():
    assert closure_of(A({"p", "q"}, {"p", "q"}, {"q", "r"})) == A({"p", "q"}, {"p", "q"})
    assert closure_of(A({"p"})) == A({"p"})
    assert closure_of(A({"p"}, {"p", "q"})) == A({"p"})


def test_closes():
    assert closes(A({"p", "q"}, {"p", "q"}), A({"p", "q"}, {"p", "q"}, {"q", "r"}))
    assert not closes(A({"p"}), A({"q"}))
    closed = A({"p", "q"}, {"p"}, {"p", "q"})
    assert closes(closed, closed)  # identity on closed architectures


def test_is_closed():
    assert is_closed(A({"p", "q"}, {"p", "q"}))
    assert not is_closed(A({"p"}, {"p", "q"}))
    assert is_closed(EMPTY)


def _universe(domain_pool, inter_pool):
    """All architectures with a domain from the pool and interactions from
    the pool's nonempty subsets."""
    pool = [frozenset(s) for r in range(1, len(inter_pool) + 1)
            for s in itertools.combinations(inter_pool, r)]
    for dr in range(len(domain_pool) + 1):
        for dom in itertools.combinations(domain_pool, dr):
            d = frozenset(dom)
            valid = [i for i in pool if i & d]
            for r in range(len(valid) + 1):
                for chosen in itertools.combinations(valid, r):
                    yield Architecture.make(d, chosen)


SMALL = list(_universe("pq", "pqr"))


def test_commutative_small():
    for a1 in SMALL:
        for a2 in SMALL:
            if a1.dom_mask & a2.dom_mask:
                continue
            assert compose(a1, a2) == compose(a2, a1)


def test_associative_small():
    for a1, a2, a3 in itertools.combinations(SMALL, 3):
        if a1.dom_mask & a2.dom_mask or a1.dom_mask & a3.dom_mask or a2.dom_mask & a3.dom_mask:
            continue
        assert compose(compose(a1, a2), a3) == compose(a1, compose(a2, a3))


def test_closure_idempotent_and_closes():
    for a in SMALL:
        c = closure_of(a)
        assert closure_of(c) == c
        assert closes(c, a)


def test_text_round_trip():
    for a in [EMPTY, A({"p"}, {"p", "q"}), A({"p", "q"}, {"p", "q"}, {"q", "r"})]:
        assert parse_architecture(print_architecture(a)) == a
    assert parse_architecture("dom {p,q} inter { {p,q}; {q,r} }") == A(
        {"p", "q"}, {"p", "q"}, {"q", "r"}
    )
    assert parse_architecture("  dom{ p , q }inter{{q , p}}") == A({"p", "q"}, {"p", "q"})


def test_text_errors():
    with pytest.raises(ParseError):
        parse_architecture("dom {p} inter")
    with pytest.raises(ParseError):
        parse_architecture("dom {p} inter { {p} } trailing")
