"""SIL+ machinery: encodings, abstraction, test formulae, translation, tau."""

import itertools
import random

import pytest

from silkit.arch import EMPTY, Architecture
from silkit.errors import DomainNotVisible, NotInFragment
from silkit.parser import parse_formula
from silkit.qbf import QExists, QForall, QVar, qand, qbf_eval, qnot, qor
from silkit.semantics import EnumBudget, check, enumerate_canonical, oracle_sat
from silkit.silplus import (
    BVarSet, BoolValuation, arch_of, arch_wf, beta_of, characteristic_signature,
    compose_enc, closure_enc, disjoint_enc, encode_qbf, entails_plus,
    eval_test_formula, get_engine, sat_plus, translate,
    tr_truth_at, visible_equiv,
)
from silkit.silplus import test_formulae_plus as tf_plus


def A(domain, *inters):
    return Architecture.make(domain, inters)


def _beta_dict(bv: BVarSet, h=0, o=(), c=()):
    return BoolValuation(bv, h, frozenset(o), frozenset(c)).as_dict()


class TestEncodings:
    def test_wf_k1(self):
        bv = BVarSet(("p",))
        wf = arch_wf(bv)
        assert qbf_eval(wf, _beta_dict(bv))  # the all-false valuation
        assert not qbf_eval(wf, _beta_dict(bv, h=0, c=[1]))
        assert qbf_eval(wf, _beta_dict(bv, h=1, c=[1]))

    def test_disjoint_k1(self):
        b1, b2 = BVarSet(("p",), 0), BVarSet(("p",), 1)
        enc = disjoint_enc(b1, b2)
        both = {**_beta_dict(b1, h=1), **_beta_dict(b2, h=1)}
        assert not qbf_eval(enc, both)
        one = {**_beta_dict(b1, h=1), **_beta_dict(b2, h=0)}
        assert qbf_eval(enc, one)

    def test_disjoint_exhaustive_k1(self):
        # any pair of valuations satisfying the encoding realizes disjoint
        # architectures
        b1, b2 = BVarSet(("p",), 0), BVarSet(("p",), 1)
        enc = disjoint_enc(b1, b2)
        vals = list(_all_valuations(("p",)))
        for v1 in vals:
            for v2 in vals:
                asg = {**_rename(v1, b1), **_rename(v2, b2)}
                if qbf_eval(enc, asg):
                    a1 = arch_of(v1) if _wf_ok(v1) else None
                    a2 = arch_of(v2) if _wf_ok(v2) else None
                    if a1 is not None and a2 is not None:
                        assert not (a1.dom_mask & a2.dom_mask)

    def test_compose_enc_on_matched_halves(self):
        ports = ("p", "q")
        b0, b1, b2 = BVarSet(ports, 0), BVarSet(ports, 1), BVarSet(ports, 2)
        left = A({"p"}, {"p", "q"})
        right = A({"q"}, {"p", "q"})
        whole = A({"p", "q"}, {"p", "q"})
        asg = {}
        asg.update(_rename(beta_of(whole, ports), b0))
        asg.update(_rename(beta_of(left, ports), b1))
        asg.update(_rename(beta_of(right, ports), b2))
        assert qbf_eval(compose_enc(b0, b1, b2), asg)
        # the dropped-interaction composition of the second worked example
        left2 = A({"p"}, {"p", "q"})
        right2 = A({"q"}, {"q", "r"})
        whole2 = A({"p", "q"}, {"q", "r"})
        ports3 = ("p", "q", "r")
        b0, b1, b2 = BVarSet(ports3, 0), BVarSet(ports3, 1), BVarSet(ports3, 2)
        asg = {}
        asg.update(_rename(beta_of(whole2, ports3), b0))
        asg.update(_rename(beta_of(left2, ports3), b1))
        asg.update(_rename(beta_of(right2, ports3), b2))
        assert qbf_eval(compose_enc(b0, b1, b2), asg)

    def test_closure_enc(self):
        ports = ("p", "q")
        b0, b1 = BVarSet(ports, 0), BVarSet(ports, 1)
        original = A({"p", "q"}, {"p", "q"}, {"q", "r"})
        closed = A({"p", "q"}, {"p", "q"})
        asg = {**_rename(beta_of(closed, ports), b0), **_rename(beta_of(original, ports), b1)}
        assert qbf_eval(closure_enc(b0, b1), asg)
        asg = {**_rename(beta_of(original, ports), b0), **_rename(beta_of(closed, ports), b1)}
        assert not qbf_eval(closure_enc(b0, b1), asg)


def _all_valuations(ports):
    k = len(ports)
    M = (1 << k) - 1
    for h in range(1 << k):
        for o_bits in range(1 << M):
            for c_bits in range(1 << M):
                yield BoolValuation(
                    BVarSet(ports), h,
                    frozenset(m for m in range(1, M + 1) if o_bits >> (m - 1) & 1),
                    frozenset(m for m in range(1, M + 1) if c_bits >> (m - 1) & 1),
                )


def _wf_ok(v: BoolValuation) -> bool:
    return all(m & v.h_bits for m in v.o_masks | v.c_masks)


def _rename(v: BoolValuation, bv: BVarSet) -> dict:
    return BoolValuation(bv, v.h_bits, v.o_masks, v.c_masks).as_dict()


class TestAbstraction:
    def test_beta_of_fully_visible_interaction(self):
        # {p,q} is fully visible, so it is recorded on the c side even
        # though q is outside the domain (open interactions in the o sense
        # are those with invisible ports)
        v = beta_of(A({"p"}, {"p", "q"}), ("p", "q"))
        assert v.h_bits == 0b01
        assert v.c_masks == frozenset({0b11})
        assert v.o_masks == frozenset()

    def test_beta_of_invisible_part(self):
        v = beta_of(A({"p"}, {"p", "q"}), ("p",))
        assert v.h_bits == 0b1
        assert v.c_masks == frozenset()
        assert v.o_masks == frozenset({0b1})

    def test_beta_of_empty(self):
        v = beta_of(EMPTY, ("p", "q"))
        assert v.h_bits == 0 and not v.o_masks and not v.c_masks

    def test_beta_requires_visible_domain(self):
        with pytest.raises(DomainNotVisible):
            beta_of(A({"r"}, {"r"}), ("p", "q"))

    def test_round_trip_exhaustive_k1(self):
        for v in _all_valuations(("p",)):
            if _wf_ok(v):
                assert beta_of(arch_of(v), ("p",)) == v

    def test_beta_deterministic(self):
        a = A({"p"}, {"p", "q"})
        assert beta_of(a, ("p", "q")) == beta_of(a, ("p", "q"))


class TestVisibleEquiv:
    def test_open_projection_identified(self):
        assert visible_equiv(A({"p"}, {"p", "q"}), A({"p"}, {"p", "r"}), ("p",))

    def test_reflexive(self):
        a = A({"p"}, {"p"})
        assert visible_equiv(a, a, ("p",))

    def test_closed_sets_differ(self):
        assert not visible_equiv(A({"p"}, {"p"}), A({"p"}), ("p",))

    def test_theorem1_exhaustive_pq(self):
        # equivalent canonical architectures agree on sampled formulas
        budget = EnumBudget(("p", "q"))
        texts = [
            "p -o q", "p -# q", "p -#E q", "p -oE q", "emp",
            "p -o q * q -oE p", "< p -o q >", "p -o q -* q -oE p",
            "p -oE q | emp", "p -o ~q & p -oE q",
        ]
        formulas = [parse_formula(t) for t in texts]
        archs = [a for a in enumerate_canonical(budget)]
        by_class = {}
        for a in archs:
            key = beta_of(a, ("p", "q"))
            by_class.setdefault((key.h_bits, key.o_masks, key.c_masks), []).append(a)
        for members in by_class.values():
            if len(members) < 2:
                continue
            for phi in formulas:
                vals = {check(m, phi, budget=budget) for m in members}
                assert len(vals) == 1


class TestTestFormulae:
    def test_has(self):
        tfs = tf_plus(("p",))
        has = [t for t in tfs if t.kind == "has"][0]
        assert eval_test_formula(A({"p"}), has)
        assert not eval_test_formula(EMPTY, has)

    def test_some_min_example(self):
        tf = [
            t for t in tf_plus(("p", "q"))
            if t.kind == "some_min" and t.port == "p" and t.positive == frozenset({"q"})
        ][0]
        assert eval_test_formula(A({"p"}, {"p", "q"}, {"p", "q", "r"}), tf)
        assert not eval_test_formula(A({"p"}, {"p", "q", "r"}), tf)

    def test_nonmin_example(self):
        tf = [
            t for t in tf_plus(("p",))
            if t.kind == "some_nonmin" and t.port == "p"
        ][0]
        assert not eval_test_formula(A({"p"}, {"p"}), tf)
        assert eval_test_formula(A({"p"}, {"p", "q"}), tf)

    def test_signature_refines_equiv_k1(self):
        # agreement on all test formulae implies visible equivalence, and
        # conversely: the characteristic signature cuts exactly the classes
        budget = EnumBudget(("p",))
        archs = [a for a in enumerate_canonical(budget)]
        for a1 in archs:
            for a2 in archs:
                same_sig = characteristic_signature(a1, ("p",)) == characteristic_signature(a2, ("p",))
                assert same_sig == visible_equiv(a1, a2, ("p",))

    def test_signature_refines_equiv_k2_sampled(self):
        budget = EnumBudget(("p", "q"))
        archs = list(enumerate_canonical(budget))
        rng = random.Random(5)
        pairs = [(rng.choice(archs), rng.choice(archs)) for _ in range(300)]
        for a1, a2 in pairs:
            if characteristic_signature(a1, ("p", "q")) == characteristic_signature(a2, ("p", "q")):
                assert visible_equiv(a1, a2, ("p", "q"))


class TestTranslation:
    def test_tr_emp(self):
        bv = BVarSet(("p", "q"))
        tr = translate(parse_formula("emp"), bv)
        assert qbf_eval(tr, _beta_dict(bv))
        assert not qbf_eval(tr, _beta_dict(bv, h=1))

    def test_tr_atom_satisfiable(self):
        bv = BVarSet(("p",))
        tr = translate(parse_formula("p -o p"), bv)
        assert qbf_eval(tr, _beta_dict(bv, h=1))
        assert qbf_eval(tr, _beta_dict(bv, h=1, c=[1]))

    def test_ast_matches_table_k1(self):
        bv = BVarSet(("p",))
        eng = get_engine(("p",))
        texts = ["emp", "p -o p", "p -# p", "p -oE p", "p -#E p",
                 "p -o p * emp", "< p -#E p >", "p -o p -* emp", "p -o ~p"]
        for t in texts:
            phi = parse_formula(t)
            ast = translate(phi, bv)
            table = eng.compile(phi)
            for v in _all_valuations(("p",)):
                assert qbf_eval(ast, v.as_dict()) == bool(table[v.index()]), t

    def test_ast_matches_table_k2_spot(self):
        bv = BVarSet(("p", "q"))
        eng = get_engine(("p", "q"))
        phi = parse_formula("p -o q * q -oE p")
        ast = translate(phi, bv)
        table = eng.compile(phi)
        rng = random.Random(11)
        idxs = [rng.randrange(256) for _ in range(6)]
        for i in idxs:
            from silkit.silplus import _valuation_at

            v = _valuation_at(i, ("p", "q"))
            assert qbf_eval(ast, v.as_dict()) == bool(table[i])

    def test_not_in_fragment(self):
        with pytest.raises(NotInFragment):
            translate(parse_formula("!emp"), BVarSet(("p",)))


class TestSatEntail:
    def test_sat_emp(self):
        ok, w = sat_plus(parse_formula("emp"))
        assert ok and w == EMPTY

    def test_unsat_false(self):
        ok, _ = sat_plus(parse_formula("emp & p -o p"))
        assert not ok

    def test_sat_pair(self):
        ok, w = sat_plus(parse_formula("p -o q * q -o p"))
        assert ok and w.domain == {"p", "q"}

    def test_sat_atom_witness(self):
        ok, w = sat_plus(parse_formula("p -#E q"))
        assert ok
        assert check(w, parse_formula("p -#E q"), budget=EnumBudget(("p", "q")))

    def test_entails(self):
        assert entails_plus(parse_formula("p -# q"), parse_formula("p -o q"))
        assert not entails_plus(parse_formula("p -o q"), parse_formula("p -# q"))
        assert entails_plus(parse_formula("emp * p -o q"), parse_formula("p -o q"))

    def test_theorem2_pointwise_small(self):
        budget = EnumBudget(("p", "q"))
        texts = [
            "emp", "p -o q", "p -# q", "p -oE q", "p -#E q",
            "p -o q * q -oE p", "p -o q -* q -o p", "< p -o q >",
            "p -oE q | q -oE p", "p -o q & p -oE q",
        ]
        archs = [a for a in enumerate_canonical(budget) if not (a.dom_mask & ~budget_mask())]
        for t in texts:
            phi = parse_formula(t)
            for a in archs:
                assert check(a, phi, budget=budget) == tr_truth_at(phi, a, ("p", "q")), (
                    t, str(a))


def budget_mask():
    from silkit.arch import mask_of

    return mask_of(("p", "q"))


class TestTau:
    def test_valid_example(self):
        x, y = QVar("x"), QVar("y")
        q = QForall("x", QExists("y", qor(qand(x, y), qand(qnot(x), qnot(y)))))
        phi = encode_qbf(q)
        ok, _ = sat_plus(phi, max_visible=16)
        assert ok

    def test_invalid_example(self):
        x, y = QVar("x"), QVar("y")
        q = QForall("x", QExists("y", qand(x, y)))
        ok, _ = sat_plus(encode_qbf(q), max_visible=16)
        assert not ok

    def test_tautology(self):
        y = QVar("y")
        q = QForall("x", QExists("y", qor(y, qnot(y))))
        ok, _ = sat_plus(encode_qbf(q), max_visible=16)
        assert ok

    def test_random_instances_match_direct_validity(self):
        rng = random.Random(424242)
        for _ in range(60):
            q, valid = _random_sentence(rng)
            phi = encode_qbf(q)
            ok, _ = sat_plus(phi, max_visible=32)
            assert ok == valid
            oracle_ok, _ = oracle_sat(phi, EnumBudget.for_ports(
                __import__("silkit.formula", fromlist=["ports_of"]).ports_of(phi)))
            assert oracle_ok == valid


def _random_sentence(rng, blocks=None):
    from silkit.qbf import qbf_eval as qe

    nblocks = blocks if blocks is not None else rng.randint(1, 2)
    names = []
    for i in range(nblocks):
        names += ["x%d" % i, "y%d" % i]

    def matrix(depth):
        if depth == 0 or rng.random() < 0.4:
            v = QVar(rng.choice(names))
            return v if rng.random() < 0.5 else qnot(v)
        op = qand if rng.random() < 0.5 else qor
        return op(matrix(depth - 1), matrix(depth - 1))

    m = matrix(3)
    q = m
    for i in reversed(range(nblocks)):
        q = QForall("x%d" % i, QExists("y%d" % i, q))
    # direct validity via evaluation of the closed sentence
    return q, qe(q, {})
