"""QBF layer: evaluation, solver vs brute force, QDIMACS round trips."""

import itertools
import random

import pytest

from silkit.errors import UnassignedFree
from silkit.qbf import (
    FALSE, TRUE, QConst, QExists, QForall, QIff, QImplies, QVar, free_vars,
    parse_qdimacs, qand, qbf_eval, qbf_solve, qdimacs_to_qbf, qexists,
    qforall, qnot, qor, solve_qdimacs, to_qdimacs,
)

x, y, z = QVar("x"), QVar("y"), QVar("z")


def test_eval_examples():
    assert qbf_eval(QForall("x", qor(x, qnot(x))), {})
    assert not qbf_eval(QExists("x", qand(x, y)), {"y": False})
    assert qbf_eval(QForall("x", QExists("y", QIff(x, y))), {})
    with pytest.raises(UnassignedFree):
        qbf_eval(qand(x, y), {"x": True})


def test_solve_examples():
    assert qbf_solve(qand(x, qnot(x)))[0] is False
    ok, witness = qbf_solve(QExists("x", qand(x, qor(y, qnot(y)))))
    assert ok and witness["x"] is True
    ok, witness = qbf_solve(qand(x, qnot(y)))
    assert ok and witness == {"x": True, "y": False}


def _random_qbf(rng, variables, depth):
    if depth == 0 or rng.random() < 0.3:
        return QVar(rng.choice(variables))
    k = rng.randrange(6)
    if k == 0:
        return qnot(_random_qbf(rng, variables, depth - 1))
    if k == 1:
        return qand(*(_random_qbf(rng, variables, depth - 1) for _ in range(2)))
    if k == 2:
        return qor(*(_random_qbf(rng, variables, depth - 1) for _ in range(2)))
    if k == 3:
        return QImplies(_random_qbf(rng, variables, depth - 1), _random_qbf(rng, variables, depth - 1))
    if k == 4:
        return QIff(_random_qbf(rng, variables, depth - 1), _random_qbf(rng, variables, depth - 1))
    v = rng.choice(variables)
    cls = QExists if rng.random() < 0.5 else QForall
    return cls(v, _random_qbf(rng, variables, depth - 1))


def _brute_exists_closure(f):
    fv = sorted(free_vars(f))
    return any(
        qbf_eval(f, dict(zip(fv, bits)))
        for bits in itertools.product([True, False], repeat=len(fv))
    )


def test_solver_agrees_with_brute_force():
    rng = random.Random(20240801)
    variables = ["a", "b", "c", "d", "e", "f"]
    for _ in range(150):
        f = _random_qbf(rng, variables, 4)
        assert qbf_solve(f)[0] == _brute_exists_closure(f)


def test_qdimacs_verdict_agrees():
    rng = random.Random(7)
    variables = ["a", "b", "c", "d"]
    for _ in range(120):
        f = _random_qbf(rng, variables, 4)
        text = to_qdimacs(f)
        assert solve_qdimacs(text) == qbf_solve(f)[0]


def test_qdimacs_round_trip_through_ast():
    rng = random.Random(99)
    variables = ["a", "b", "c"]
    for _ in range(60):
        f = _random_qbf(rng, variables, 3)
        back = qdimacs_to_qbf(to_qdimacs(f))
        assert qbf_solve(back)[0] == qbf_solve(f)[0]


def test_qdimacs_shapes():
    text = to_qdimacs(QForall("x", QExists("y", QIff(x, y))))
    lines = text.splitlines()
    assert lines[0].startswith("p cnf")
    assert lines[1].startswith("a 1 0")
    assert lines[2].startswith("e 2")
    assert solve_qdimacs(text) is True

    assert to_qdimacs(TRUE) == "p cnf 1 0\n"
    assert solve_qdimacs(to_qdimacs(TRUE)) is True
    assert solve_qdimacs(to_qdimacs(FALSE)) is False

    text = to_qdimacs(qand(x, y))  # free variables: leading e block
    assert text.splitlines()[1].startswith("e 1 2")
    assert solve_qdimacs(text) is True


def test_parse_qdimacs():
    prefix, clauses, nvars = parse_qdimacs("c comment\np cnf 3 2\na 1 0\ne 2 3 0\n1 -2 0\n3 0\n")
    assert nvars == 3
    assert prefix == [("a", [1]), ("e", [2, 3])]
    assert clauses == [[1, -2], [3]]
