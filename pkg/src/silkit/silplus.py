"""Decision procedure for the positive fragment via QBF translation.

An architecture with domain inside a visible port list P of size k is
abstracted by boolean variables: h(i) for domain membership, c(m) for the
presence of the closed interaction with visible set m, and o(m) for the
presence of an open interaction whose visible projection is m (m ranges
over the nonempty subsets of P, addressed by bitmask).  The translation
``translate`` maps a positive-fragment formula to a QBF over one such
variable set, allocating fresh copies for the separating connectives and
the closure modality.

Two evaluation routes are provided: a faithful QBF AST (exported to
QDIMACS, solvable by the generic expansion solver on small instances) and
a vectorized truth-table engine over numpy arrays that decides whole
formulas for every abstraction simultaneously; the table engine carries
the satisfiability/entailment procedures at their default scale.  Formulas
outside the table cap but inside the domain-driven algebra (notably the
image of the hardness reduction ``encode_qbf``) are decided exactly by the
reference semantics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .arch import Architecture, mask_of, names_of, port_id
from .errors import (
    CapExceeded, DomainNotVisible, NotInFragment, NotPrenex, NotWellFormed,
    VisiblePortsExceeded,
)
from .formula import (
    And, Atom, AtomKind, BAnd, BNot, BTerm, BoolTerm, CloseMod, Emp, Formula,
    Not, Or, PortConst, Star, Wand, bor, in_silplus, ports_of,
)
from .qbf import (
    QConst, QExists, QForall, QVar, Qbf, qand, qexists, qforall, qimplies,
    qnot, qor,
)
from .semantics import EnumBudget, eval_bterm, is_minimal_model, oracle_sat


# ---------------------------------------------------------------------------
# Boolean variable sets


@dataclass(frozen=True)
class BVarSet:
    """The h/o/c variables over a visible port list, one copy per tag."""

    visible: tuple[str, ...]
    tag: int = 0

    @property
    def k(self) -> int:
        return len(self.visible)

    @property
    def masks(self) -> range:
        return range(1, 1 << self.k)

    @property
    def var_count(self) -> int:
        return self.k + 2 * ((1 << self.k) - 1)

    def h(self, i: int) -> QVar:
        # i is a 1-based port index, following the paper's convention
        return QVar("h%d.%d" % (i, self.tag))

    def o(self, mask: int) -> QVar:
        return QVar("o%d.%d" % (mask, self.tag))

    def c(self, mask: int) -> QVar:
        return QVar("c%d.%d" % (mask, self.tag))

    def names(self) -> list[str]:
        out = [self.h(i).name for i in range(1, self.k + 1)]
        out += [self.o(m).name for m in self.masks]
        out += [self.c(m).name for m in self.masks]
        return out

    def fresh(self, counter: itertools.count) -> "BVarSet":
        return BVarSet(self.visible, next(counter))


@dataclass(frozen=True)
class BoolValuation:
    """Total assignment of one boolean variable set."""

    bvars: BVarSet
    h_bits: int
    o_masks: frozenset[int]
    c_masks: frozenset[int]

    def value(self, kind: str, arg: int) -> bool:
        if kind == "h":
            return bool(self.h_bits >> (arg - 1) & 1)
        if kind == "o":
            return arg in self.o_masks
        return arg in self.c_masks

    def as_dict(self) -> dict[str, bool]:
        b = self.bvars
        out = {b.h(i).name: self.value("h", i) for i in range(1, b.k + 1)}
        for m in b.masks:
            out[b.o(m).name] = m in self.o_masks
            out[b.c(m).name] = m in self.c_masks
        return out

    def index(self) -> int:
        """Position of this assignment in the table engine's layout."""
        k = self.bvars.k
        M = (1 << k) - 1
        idx = self.h_bits
        for m in self.o_masks:
            idx |= 1 << (k + m - 1)
        for m in self.c_masks:
            idx |= 1 << (k + M + m - 1)
        return idx


# ---------------------------------------------------------------------------
# The four encoding formulas (QBF ASTs)


def arch_wf(b: BVarSet) -> Qbf:
    """Valuations that define valid architectures: every recorded
    interaction projection intersects the domain."""
    parts = []
    for m in b.masks:
        hits = qor(*(b.h(i + 1) for i in range(b.k) if m >> i & 1))
        parts.append(qimplies(qor(b.o(m), b.c(m)), hits))
    return qand(*parts)


def disjoint_enc(b1: BVarSet, b2: BVarSet) -> Qbf:
    return qand(*(qnot(qand(b1.h(i), b2.h(i))) for i in range(1, b1.k + 1)))


def compose_enc(b: BVarSet, b1: BVarSet, b2: BVarSet) -> Qbf:
    """b defines the composition of the disjoint architectures b1 and b2;
    the twelve conjunct families, with o(m) left unconstrained when both
    sides have an open interaction projecting to m."""
    parts = []
    for i in range(1, b.k + 1):
        parts.append(_iff(b.h(i), qor(b1.h(i), b2.h(i))))
    for m in b.masks:
        ports = [i + 1 for i in range(b.k) if m >> i & 1]
        no1 = qand(*(qnot(b1.h(i)) for i in ports))
        no2 = qand(*(qnot(b2.h(i)) for i in ports))
        hit1 = qor(*(b1.h(i) for i in ports))
        hit2 = qor(*(b2.h(i) for i in ports))
        o, c = b.o(m), b.c(m)
        o1, c1 = b1.o(m), b1.c(m)
        o2, c2 = b2.o(m), b2.c(m)
        parts += [
            qimplies(qand(c1, c2), c),
            qimplies(qand(c1, no2), c),
            qimplies(qand(c2, no1), c),
            qimplies(qand(o1, no2), o),
            qimplies(qand(o2, no1), o),
            qimplies(qand(qnot(c1), qnot(c2)), qnot(c)),
            qimplies(qand(c1, qnot(c2), hit2), qnot(c)),
            qimplies(qand(c2, qnot(c1), hit1), qnot(c)),
            qimplies(qand(qnot(o1), qnot(o2)), qnot(o)),
            qimplies(qand(o1, qnot(o2), hit2), qnot(o)),
            qimplies(qand(o2, qnot(o1), hit1), qnot(o)),
        ]
    return qand(*parts)


def closure_enc(b: BVarSet, b1: BVarSet) -> Qbf:
    """b defines the closure of an architecture defined by b1.

    Closure keeps exactly the interactions inside the domain, so the
    visible interactions of b are those of b1 whose ports all lie in the
    (shared) domain; a plain c-biconditional would wrongly identify
    "fully visible" with "inside the domain".
    """
    parts = [_iff(b.h(i), b1.h(i)) for i in range(1, b.k + 1)]
    for m in b.masks:
        inside = qand(*(b.h(i + 1) for i in range(b.k) if m >> i & 1))
        parts.append(qnot(b.o(m)))
        parts.append(_iff(b.c(m), qand(b1.c(m), inside)))
    return qand(*parts)


def _iff(a: Qbf, c: Qbf) -> Qbf:
    return qand(qimplies(a, c), qimplies(c, a))


# ---------------------------------------------------------------------------
# Translation to QBF (faithful AST)


def _theta(b: BoolTerm, pvar) -> Qbf:
    if isinstance(b, BTerm):
        return pvar(b.term.name)
    if isinstance(b, BNot):
        return qnot(_theta(b.sub, pvar))
    return qand(_theta(b.left, pvar), _theta(b.right, pvar))


def _pi(mask: int, bv: BVarSet, pvar) -> Qbf:
    parts = []
    for i, p in enumerate(bv.visible):
        parts.append(pvar(p) if mask >> i & 1 else qnot(pvar(p)))
    return qand(*parts)


class _Translator:
    def __init__(self, bvars: BVarSet):
        self.base = bvars
        self.counter = itertools.count(bvars.tag + 1)

    def pvar_factory(self, tag: int):
        return lambda name: QVar("P.%s.%d" % (name, tag))

    def forall_ports(self, body: Qbf, tag: int) -> Qbf:
        return qforall(("P.%s.%d" % (p, tag) for p in self.base.visible), body)

    def exists_ports(self, body: Qbf, tag: int) -> Qbf:
        return qexists(("P.%s.%d" % (p, tag) for p in self.base.visible), body)

    def translate(self, phi: Formula, bv: BVarSet) -> Qbf:
        if isinstance(phi, Emp):
            return qand(*(qnot(bv.h(i)) for i in range(1, bv.k + 1)))
        if isinstance(phi, Atom):
            return self.atom(phi, bv)
        if isinstance(phi, And):
            return qand(self.translate(phi.left, bv), self.translate(phi.right, bv))
        if isinstance(phi, Or):
            return qor(self.translate(phi.left, bv), self.translate(phi.right, bv))
        if isinstance(phi, CloseMod):
            b1 = bv.fresh(self.counter)
            return qexists(
                b1.names(),
                qand(arch_wf(b1), closure_enc(bv, b1), self.translate(phi.sub, b1)),
            )
        if isinstance(phi, Star):
            b1 = bv.fresh(self.counter)
            b2 = bv.fresh(self.counter)
            return qexists(
                b1.names() + b2.names(),
                qand(
                    arch_wf(b1), arch_wf(b2), disjoint_enc(b1, b2),
                    compose_enc(bv, b1, b2),
                    self.translate(phi.left, b1), self.translate(phi.right, b2),
                ),
            )
        if isinstance(phi, Wand):
            b1 = bv.fresh(self.counter)
            b2 = bv.fresh(self.counter)
            ante = qand(arch_wf(b1), disjoint_enc(bv, b1), self.translate(phi.left, b1))
            succ = qexists(
                b2.names(),
                qand(arch_wf(b2), compose_enc(b2, bv, b1), self.translate(phi.right, b2)),
            )
            return qforall(b1.names(), qimplies(ante, succ))
        raise NotInFragment("connective outside the positive fragment: %r" % (phi,))

    def atom(self, phi: Atom, bv: BVarSet) -> Qbf:
        name = phi.term.name
        if name not in bv.visible:
            raise VisiblePortsExceeded("port %s is not visible" % name)
        i = bv.visible.index(name) + 1
        imask = 1 << (i - 1)
        hpat = qand(
            bv.h(i), *(qnot(bv.h(j)) for j in range(1, bv.k + 1) if j != i)
        )
        tb = BAnd(BTerm(PortConst(name)), phi.bterm)
        parts = [hpat]
        if phi.kind is AtomKind.ALL_INTER:
            for m in bv.masks:
                tag = next(self.counter)
                pv = self.pvar_factory(tag)
                body = qimplies(qand(_pi(m, bv, pv), qor(bv.o(m), bv.c(m))), _theta(tb, pv))
                parts.append(self.forall_ports(body, tag))
        elif phi.kind is AtomKind.ALL_MIN:
            for m in bv.masks:
                parts.append(qnot(bv.o(m)))
                tag = next(self.counter)
                pv = self.pvar_factory(tag)
                body = qimplies(qand(_pi(m, bv, pv), bv.c(m)), _theta(tb, pv))
                subs = [
                    qimplies(qand(_pi(s, bv, pv), bv.c(m)), qnot(_theta(tb, pv)))
                    for s in _proper_submasks(m)
                ]
                parts.append(self.forall_ports(qand(body, *subs), tag))
        elif phi.kind is AtomKind.SOME_INTER:
            alts = []
            for m in bv.masks:
                tag = next(self.counter)
                pv = self.pvar_factory(tag)
                body = qand(_pi(m, bv, pv), _theta(tb, pv), qor(bv.o(m), bv.c(m)))
                alts.append(self.exists_ports(body, tag))
            parts.append(qor(*alts))
        else:  # SOME_MIN
            alts = []
            for m in bv.masks:
                tag = next(self.counter)
                pv = self.pvar_factory(tag)
                wit = self.exists_ports(qand(_pi(m, bv, pv), _theta(tb, pv), bv.c(m)), tag)
                tag2 = next(self.counter)
                pv2 = self.pvar_factory(tag2)
                subs = qand(
                    *(qimplies(_pi(s, bv, pv2), qnot(_theta(tb, pv2)))
                      for s in _proper_submasks(m))
                )
                alts.append(qand(wit, self.forall_ports(subs, tag2)))
            parts.append(qor(*alts))
        return qand(*parts)


def _proper_submasks(mask: int):
    s = (mask - 1) & mask
    while s:
        yield s
        s = (s - 1) & mask


def translate(phi: Formula, bvars: BVarSet) -> Qbf:
    """tr(phi, B): free variables exactly the given copy; fresh copies are
    allocated per separating connective and closure modality.

    The minimal-model atoms constrain subsets with theta(t.b) rather than
    theta(b): an interaction is a minimal model of the atom's whole boolean
    term, which is the reading forced by the worked examples.
    """
    if not in_silplus(phi):
        raise NotInFragment("translate expects a positive-fragment formula")
    missing = ports_of(phi) - set(bvars.visible)
    if missing:
        raise VisiblePortsExceeded("formula ports outside the copy: %s" % sorted(missing))
    return _Translator(bvars).translate(phi, bvars)


def translation_size(phi: Formula, k: int) -> int:
    """Rough variable count of the translation: copies x |B|."""
    copies = 1 + sum(
        2 if isinstance(f, (Star, Wand)) else 1 if isinstance(f, CloseMod) else 0
        for f in _walk(phi)
    )
    return copies * (k + 2 * ((1 << k) - 1))


def _walk(phi):
    from .formula import subformulas

    return subformulas(phi)


# ---------------------------------------------------------------------------
# Architecture abstraction


def beta_of(a: Architecture, ports: Iterable[str]) -> BoolValuation:
    """The minimal boolean valuation whose realization set contains a."""
    visible = tuple(ports)
    vis_mask = mask_of(visible)
    if a.dom_mask & ~vis_mask:
        raise DomainNotVisible(
            "domain ports outside the visible list: %s" % sorted(names_of(a.dom_mask & ~vis_mask))
        )
    bits = {p: i for i, p in enumerate(visible)}
    h_bits = 0
    for p in names_of(a.dom_mask):
        h_bits |= 1 << bits[p]
    o_masks, c_masks = set(), set()
    for im in a.inter_masks:
        proj = 0
        for p in names_of(im & vis_mask):
            proj |= 1 << bits[p]
        if im & ~vis_mask:
            o_masks.add(proj)
        else:
            c_masks.add(proj)
    return BoolValuation(BVarSet(visible), h_bits, frozenset(o_masks), frozenset(c_masks))


def arch_of(beta: BoolValuation, budget: EnumBudget | None = None) -> Architecture:
    """Canonical member of the realization set: closed interactions as-is,
    each open projection extended with one fresh invisible port."""
    bv = beta.bvars
    for m in bv.masks:
        if (m in beta.o_masks or m in beta.c_masks) and not (m & beta.h_bits):
            raise NotWellFormed("projection %d does not intersect the domain" % m)
    dom = [bv.visible[i] for i in range(bv.k) if beta.h_bits >> i & 1]
    inters = []
    for m in beta.c_masks:
        inters.append([bv.visible[i] for i in range(bv.k) if m >> i & 1])
    for m in beta.o_masks:
        inters.append([bv.visible[i] for i in range(bv.k) if m >> i & 1] + ["@o"])
    return Architecture.make(dom, inters)


def visible_equiv(a1: Architecture, a2: Architecture, ports: Iterable[str]) -> bool:
    """Indistinguishability of architectures over the visible list: same
    domain, same closed visible interactions, same projections of the
    remaining interactions."""
    visible = tuple(ports)
    vis_mask = mask_of(visible)
    for a in (a1, a2):
        if a.dom_mask & ~vis_mask:
            raise DomainNotVisible("domain outside the visible list")
    if a1.dom_mask != a2.dom_mask:
        return False
    def parts(a):
        closed = frozenset(im for im in a.inter_masks if im & ~vis_mask == 0)
        openp = frozenset(im & vis_mask for im in a.inter_masks if im & ~vis_mask)
        return closed, openp
    return parts(a1) == parts(a2)


# ---------------------------------------------------------------------------
# Test formulae


@dataclass(frozen=True)
class PlusTestFormula:
    """has(p), or a some-interaction pattern whose boolean term is a full
    minterm over the visible ports other than p (the atom provides p), so
    each instance pins the visible projection of the witness exactly."""

    kind: str  # "has" | "some_nonmin" | "some_min"
    port: str
    positive: frozenset[str]
    visible: tuple[str, ...]

    def minterm(self) -> BoolTerm:
        b = BTerm(PortConst(self.port))
        for p in self.visible:
            if p == self.port:
                continue
            leaf = BTerm(PortConst(p))
            b = BAnd(b, leaf if p in self.positive else BNot(leaf))
        return b

    def formula(self) -> Formula:
        from .formula import BOT, ExistsPort, Neq, PortVar, TOP

        if self.kind == "has":
            return Wand(Atom(AtomKind.ALL_INTER, PortConst(self.port), BTerm(PortConst(self.port))), BOT)
        if self.kind == "some_min":
            return Star(Atom(AtomKind.SOME_MIN, PortConst(self.port), self.minterm()), TOP)
        guards = None
        for q in self.visible:
            g = Neq(PortVar("x"), PortConst(q))
            guards = g if guards is None else And(guards, g)
        body = Star(
            Atom(AtomKind.SOME_INTER, PortConst(self.port),
                 BAnd(BTerm(PortVar("x")), self.minterm())),
            TOP,
        )
        return ExistsPort("x", And(guards, body))


def test_formulae_plus(ports: Iterable[str]) -> list[PlusTestFormula]:
    """The finite instance set: has(p) plus the two some-interaction
    patterns with the boolean term ranging over full minterms."""
    visible = tuple(sorted(set(ports)))
    out = [PlusTestFormula("has", p, frozenset(), visible) for p in visible]
    for p in visible:
        others = [q for q in visible if q != p]
        for r in range(len(others) + 1):
            for pos in itertools.combinations(others, r):
                for kind in ("some_nonmin", "some_min"):
                    out.append(PlusTestFormula(kind, p, frozenset(pos), visible))
    return out


def eval_test_formula(a: Architecture, tf: PlusTestFormula) -> bool:
    """Direct semantic characterizations (not wand enumeration): has tests
    domain membership; the patterns test for an interaction satisfying the
    minterm non-minimally/minimally."""
    if tf.kind == "has":
        return tf.port in a.domain
    b = tf.minterm()
    for im in a.inter_masks:
        i = names_of(im)
        if tf.kind == "some_min" and is_minimal_model(i, b):
            return True
        if tf.kind == "some_nonmin" and eval_bterm(i, b) and not is_minimal_model(i, b):
            return True
    return False


def characteristic_signature(a: Architecture, ports: Iterable[str]) -> tuple:
    return tuple(eval_test_formula(a, tf) for tf in test_formulae_plus(ports))


# ---------------------------------------------------------------------------
# Table engine

_TABLE_MAX_VARS = 8  # one copy; binary grids are N^3 with N = 2^vars

_engines: dict = {}


class PlusEngine:
    """Vectorized evaluation of translations over all abstractions at once.

    Assignment layout: bit i is h(i+1), then o-masks ascending, then
    c-masks ascending; a formula compiles to a boolean table indexed by
    assignment, and the separating connectives become reductions over
    precomputed composition/disjointness grids.
    """

    def __init__(self, visible: tuple[str, ...]):
        self.visible = visible
        self.k = len(visible)
        self.M = (1 << self.k) - 1
        self.V = self.k + 2 * self.M
        if self.V > _TABLE_MAX_VARS:
            raise CapExceeded(
                "table engine supports up to %d boolean variables per copy; "
                "%d ports need %d" % (_TABLE_MAX_VARS, self.k, self.V)
            )
        self.N = 1 << self.V
        self._cache: dict = {}
        idx = np.arange(self.N, dtype=np.uint32)
        self.h = [(idx >> i & 1).astype(bool) for i in range(self.k)]
        self.o = {m: (idx >> (self.k + m - 1) & 1).astype(bool) for m in range(1, self.M + 1)}
        self.c = {m: (idx >> (self.k + self.M + m - 1) & 1).astype(bool) for m in range(1, self.M + 1)}
        self.wf = self._wf()
        self.disj = self._disj()
        self.comp = self._comp()
        self.close = self._close()

    def _wf(self):
        t = np.ones(self.N, dtype=bool)
        for m in range(1, self.M + 1):
            hits = np.zeros(self.N, dtype=bool)
            for i in range(self.k):
                if m >> i & 1:
                    hits |= self.h[i]
            t &= ~(self.o[m] | self.c[m]) | hits
        return t

    def _disj(self):
        t = np.ones((self.N, self.N), dtype=bool)
        for i in range(self.k):
            t &= ~(self.h[i][:, None] & self.h[i][None, :])
        return t

    def _comp(self):
        # indexed [result, left, right]
        ax0 = lambda v: v[:, None, None]
        ax1 = lambda v: v[None, :, None]
        ax2 = lambda v: v[None, None, :]
        t = np.ones((self.N, self.N, self.N), dtype=bool)
        for i in range(self.k):
            t &= ax0(self.h[i]) == (ax1(self.h[i]) | ax2(self.h[i]))
        for m in range(1, self.M + 1):
            bits = [i for i in range(self.k) if m >> i & 1]
            hit1 = np.zeros(self.N, dtype=bool)
            for i in bits:
                hit1 |= self.h[i]
            no1 = ~hit1
            o, c = self.o[m], self.c[m]
            t &= ~(ax1(c) & ax2(c)) | ax0(c)
            t &= ~(ax1(c) & ax2(no1)) | ax0(c)
            t &= ~(ax2(c) & ax1(no1)) | ax0(c)
            t &= ~(ax1(o) & ax2(no1)) | ax0(o)
            t &= ~(ax2(o) & ax1(no1)) | ax0(o)
            t &= ~(ax1(~c) & ax2(~c)) | ax0(~c)
            t &= ~(ax1(c) & ax2(~c) & ax2(hit1)) | ax0(~c)
            t &= ~(ax2(c) & ax1(~c) & ax1(hit1)) | ax0(~c)
            t &= ~(ax1(~o) & ax2(~o)) | ax0(~o)
            t &= ~(ax1(o) & ax2(~o) & ax2(hit1)) | ax0(~o)
            t &= ~(ax2(o) & ax1(~o) & ax1(hit1)) | ax0(~o)
        return t

    def _close(self):
        # indexed [closure, original]
        t = np.ones((self.N, self.N), dtype=bool)
        for i in range(self.k):
            t &= self.h[i][:, None] == self.h[i][None, :]
        for m in range(1, self.M + 1):
            inside = np.ones(self.N, dtype=bool)
            for i in range(self.k):
                if m >> i & 1:
                    inside &= self.h[i]
            t &= ~self.o[m][:, None]
            t &= self.c[m][:, None] == (self.c[m][None, :] & inside[:, None])
        return t

    # -- formula compilation ------------------------------------------------

    def _theta_const(self, tb: BoolTerm, mask: int) -> bool:
        present = {self.visible[i] for i in range(self.k) if mask >> i & 1}
        return eval_bterm(present, tb)

    def compile(self, phi: Formula) -> np.ndarray:
        hit = self._cache.get(phi)
        if hit is None:
            hit = self._compile(phi)
            self._cache[phi] = hit
        return hit

    def _compile(self, phi: Formula) -> np.ndarray:
        if isinstance(phi, Emp):
            t = np.ones(self.N, dtype=bool)
            for i in range(self.k):
                t &= ~self.h[i]
            return t
        if isinstance(phi, Atom):
            return self._atom(phi)
        if isinstance(phi, And):
            return self.compile(phi.left) & self.compile(phi.right)
        if isinstance(phi, Or):
            return self.compile(phi.left) | self.compile(phi.right)
        if isinstance(phi, CloseMod):
            t1 = self.compile(phi.sub) & self.wf
            return (self.close & t1[None, :]).any(axis=1)
        if isinstance(phi, Star):
            t1 = self.compile(phi.left) & self.wf
            t2 = self.compile(phi.right) & self.wf
            grid = self.comp & self.disj[None, :, :] & t1[None, :, None] & t2[None, None, :]
            return grid.any(axis=(1, 2))
        if isinstance(phi, Wand):
            t1 = self.compile(phi.left) & self.wf
            t2 = self.compile(phi.right) & self.wf
            # S[b, b'] = exists b''. comp[b'', b, b'] & t2[b'']
            grid = self.comp & t2[:, None, None]
            s = grid.any(axis=0)
            ante = self.disj & t1[None, :]
            return (~ante | s).all(axis=1)
        raise NotInFragment("connective outside the positive fragment: %r" % (phi,))

    def _atom(self, phi: Atom) -> np.ndarray:
        name = phi.term.name
        i = self.visible.index(name)
        hpat = self.h[i].copy()
        for j in range(self.k):
            if j != i:
                hpat &= ~self.h[j]
        tb = BAnd(BTerm(PortConst(name)), phi.bterm)
        theta = {m: self._theta_const(tb, m) for m in range(1, self.M + 1)}
        minimal = {
            m: theta[m] and not any(theta[s] for s in _proper_submasks(m))
            for m in range(1, self.M + 1)
        }
        t = hpat
        if phi.kind is AtomKind.ALL_INTER:
            for m in range(1, self.M + 1):
                if not theta[m]:
                    t = t & ~(self.o[m] | self.c[m])
            return t
        if phi.kind is AtomKind.ALL_MIN:
            for m in range(1, self.M + 1):
                t = t & ~self.o[m]
                if not minimal[m]:
                    t = t & ~self.c[m]
            return t
        if phi.kind is AtomKind.SOME_INTER:
            some = np.zeros(self.N, dtype=bool)
            for m in range(1, self.M + 1):
                if theta[m]:
                    some |= self.o[m] | self.c[m]
            return t & some
        some = np.zeros(self.N, dtype=bool)
        for m in range(1, self.M + 1):
            if minimal[m]:
                some |= self.c[m]
        return t & some


def get_engine(visible: tuple[str, ...]) -> PlusEngine:
    eng = _engines.get(visible)
    if eng is None:
        eng = PlusEngine(visible)
        _engines[visible] = eng
    return eng


def tr_truth_at(phi: Formula, a: Architecture, visible: tuple[str, ...]) -> bool:
    """qbf evaluation of tr(phi, B) at beta(a), through the table engine."""
    eng = get_engine(visible)
    return bool(eng.compile(phi)[beta_of(a, visible).index()])


# ---------------------------------------------------------------------------
# Satisfiability and entailment

DEFAULT_VISIBLE_CAP = 8


def _joint_ports(*phis: Formula) -> tuple[str, ...]:
    ports: set[str] = set()
    for phi in phis:
        ports |= ports_of(phi)
    return tuple(sorted(ports))


def sat_plus(
    phi: Formula, max_visible: int = DEFAULT_VISIBLE_CAP
) -> tuple[bool, Optional[Architecture]]:
    if not in_silplus(phi):
        raise NotInFragment("satisfiability procedure expects the positive fragment")
    visible = _joint_ports(phi)
    k = len(visible)
    if k > max_visible:
        raise CapExceeded(
            "%d visible ports need %d boolean variables per copy (cap %d); "
            "raise --max-visible to override" % (k, k + 2 * (2 ** k - 1), max_visible)
        )
    try:
        eng = get_engine(visible)
    except CapExceeded:
        return _sat_semantic(phi, visible)
    table = eng.compile(phi) & eng.wf
    idx = np.flatnonzero(table)
    if idx.size == 0:
        return False, None
    return True, arch_of(_valuation_at(int(idx[0]), visible))


def _valuation_at(index: int, visible: tuple[str, ...]) -> BoolValuation:
    k = len(visible)
    M = (1 << k) - 1
    h_bits = index & ((1 << k) - 1)
    o_masks = frozenset(m for m in range(1, M + 1) if index >> (k + m - 1) & 1)
    c_masks = frozenset(m for m in range(1, M + 1) if index >> (k + M + m - 1) & 1)
    return BoolValuation(BVarSet(visible), h_bits, o_masks, c_masks)


def _sat_semantic(phi: Formula, visible: tuple[str, ...]):
    """Fallback beyond the table cap: exact evaluation through the domain
    algebra of the reference semantics (covers the hardness-reduction
    image); anything else is out of reach at this scale."""
    budget = EnumBudget(visible)
    from .semantics import _Checker, EMPTY_VALUATION

    checker = _Checker(budget)
    prof = checker.profile(phi, EMPTY_VALUATION)
    if prof.val is None and prof.doms is None:
        raise CapExceeded(
            "%d visible ports exceed the table engine and the formula is "
            "outside the domain-driven algebra" % len(visible)
        )
    return oracle_sat(phi, budget)


def entails_plus(phi: Formula, psi: Formula, max_visible: int = DEFAULT_VISIBLE_CAP) -> bool:
    for f in (phi, psi):
        if not in_silplus(f):
            raise NotInFragment("entailment expects positive-fragment formulas")
    visible = _joint_ports(phi, psi)
    if len(visible) > max_visible:
        raise CapExceeded(
            "%d visible ports exceed the cap %d" % (len(visible), max_visible)
        )
    eng = get_engine(visible)
    bad = eng.wf & eng.compile(phi) & ~eng.compile(psi)
    return not bool(bad.any())


# ---------------------------------------------------------------------------
# Hardness reduction: QBF validity to positive-fragment satisfiability


def _nnf(f: Qbf, positive: bool) -> Qbf:
    from .qbf import QAnd, QIff, QImplies, QNot, QOr

    if isinstance(f, QVar):
        return f if positive else QNot(f)
    if isinstance(f, QConst):
        return QConst(f.value == positive)
    if isinstance(f, QNot):
        return _nnf(f.sub, not positive)
    if isinstance(f, QAnd):
        parts = tuple(_nnf(a, positive) for a in f.args)
        return QAnd(parts) if positive else QOr(parts)
    if isinstance(f, QOr):
        parts = tuple(_nnf(a, positive) for a in f.args)
        return QOr(parts) if positive else QAnd(parts)
    if isinstance(f, QImplies):
        return _nnf(qor(qnot(f.left), f.right), positive)
    if isinstance(f, QIff):
        g = qand(qimplies(f.left, f.right), qimplies(f.right, f.left))
        return _nnf(g, positive)
    raise NotPrenex("quantifiers inside the matrix")


def encode_qbf(q: Qbf) -> Formula:
    """The reduction from QBF validity: returns a positive-fragment formula
    satisfiable iff the prenex forall/exists sentence is valid."""
    from .qbf import QExists as QE, QForall as QA

    prefix: list[tuple[str, str]] = []
    body = q
    while isinstance(body, (QE, QA)):
        prefix.append(("e" if isinstance(body, QE) else "a", body.var))
        body = body.sub
    matrix = _nnf(body, True)
    from .qbf import free_vars

    if free_vars(q):
        raise NotPrenex("the reduction expects a closed sentence")

    # pad to strict forall/exists alternation, one variable per block
    padded: list[tuple[str, str]] = []
    expecting = "a"
    dummy = itertools.count()
    for kind, var in prefix:
        while kind != expecting:
            padded.append((expecting, "_pad%d" % next(dummy)))
            expecting = "e" if expecting == "a" else "a"
        padded.append((kind, var))
        expecting = "e" if expecting == "a" else "a"
    if expecting == "e":
        padded.append(("e", "_pad%d" % next(dummy)))

    order = [v for _, v in padded]

    def has_port(port: str) -> Formula:
        false_f = And(Emp(), Atom(AtomKind.ALL_INTER, PortConst("p0"), BTerm(PortConst("p0"))))
        return Wand(Atom(AtomKind.ALL_INTER, PortConst(port), BTerm(PortConst(port))), false_f)

    FALSE_F = And(Emp(), Atom(AtomKind.ALL_INTER, PortConst("p0"), BTerm(PortConst("p0"))))

    def a_single(v: str) -> Formula:
        t = Atom(AtomKind.ALL_INTER, PortConst(v + "_t"), BTerm(PortConst(v + "_t")))
        f = Atom(AtomKind.ALL_INTER, PortConst(v + "_f"), BTerm(PortConst(v + "_f")))
        return Or(t, f)

    def a_set(vs: list[str]) -> Formula:
        out = None
        for v in vs:
            out = a_single(v) if out is None else Star(out, a_single(v))
        return out

    def upto(v: str) -> list[str]:
        return order[: order.index(v) + 1]

    def tau_matrix(g: Qbf) -> Formula:
        from .qbf import QAnd, QNot, QOr

        if isinstance(g, QVar):
            return has_port(g.name + "_t")
        if isinstance(g, QNot):
            return has_port(g.sub.name + "_f")
        if isinstance(g, QConst):
            # constants only arise from folding; keep the fragment positive
            return Wand(FALSE_F, FALSE_F) if g.value else FALSE_F
        parts = [tau_matrix(a) for a in g.args]
        out = parts[0]
        for p in parts[1:]:
            out = And(out, p) if isinstance(g, QAnd) else Or(out, p)
        return out

    def tau(i: int) -> Formula:
        if i == len(padded):
            return tau_matrix(matrix)
        kind, var = padded[i]
        if kind == "a":
            return Wand(a_single(var), tau(i + 1))
        x_i = padded[i - 1][1]
        inner = Wand(And(a_set(upto(var)), tau(i + 1)), FALSE_F)
        return Wand(And(a_set(upto(x_i)), inner), FALSE_F)

    return And(Emp(), tau(0))
