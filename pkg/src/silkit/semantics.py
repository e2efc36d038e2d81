"""Reference semantics for ground formulas.

This is the oracle side of the toolkit: a direct implementation of the
satisfaction relation where every unbounded quantification (sub-architecture
splits, wand extensions, closure extensions, port quantifiers) is replaced
by enumeration over canonical architectures drawn from a finite budget.

Invisible ports (anything outside the budget's visible list) are always
written with a leading ``@`` so they can never collide with user ports:
``@o`` realizes an open remainder, ``@a<n>`` are extra invisible domain
ports, ``@d1``/``@d2`` mark dropped interactions inside a split, ``@c``
extends closures and ``@e<n>`` witnesses port quantifiers.

Truth of a formula never depends on the names of invisible ports, so
results are memoized on architectures with invisible ports canonically
renamed, and interchangeable invisible domain ports are split by count
rather than by identity.

Formulas whose truth value is a function of the domain alone (the shape
used by the hardness reduction: ``has``-style wands over atoms with known
model domains) are evaluated exactly through a small algebra of domain
profiles, with no finitization at all.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

from .arch import EMPTY, Architecture, compose, closure_of, is_closed, mask_of, names_of, port_id, sorted_names
from .errors import BudgetUnsupported, UnboundVariable, VisiblePortsExceeded
from .formula import (
    And, Atom, AtomKind, BAnd, BNot, BTerm, BoolTerm, CloseMod, Emp, Eq,
    ExistsIndex, ExistsPort, Formula, Neq, Not, Or, PortConst, PortFun,
    PortVar, Pred, Star, Term, Wand, in_silplus, ports_of,
)


@dataclass(frozen=True)
class Valuation:
    """Sort-respecting partial assignment of port and index variables."""

    ports: tuple[tuple[str, str], ...] = ()
    ids: tuple[tuple[str, str], ...] = ()

    @staticmethod
    def make(ports: dict | None = None, ids: dict | None = None) -> "Valuation":
        return Valuation(
            tuple(sorted((ports or {}).items())), tuple(sorted((ids or {}).items()))
        )

    def port(self, name: str) -> str:
        for k, v in self.ports:
            if k == name:
                return v
        raise UnboundVariable("port variable ?%s is unbound" % name)

    def ident(self, name: str) -> str:
        for k, v in self.ids:
            if k == name:
                return v
        raise UnboundVariable("index variable %s is unbound" % name)

    def bind_port(self, name: str, value: str) -> "Valuation":
        items = tuple((k, v) for k, v in self.ports if k != name) + ((name, value),)
        return Valuation(tuple(sorted(items)), self.ids)


EMPTY_VALUATION = Valuation()


@dataclass(frozen=True)
class EnumBudget:
    """Finite universes used to replace the unbounded quantifiers."""

    visible: tuple[str, ...]
    extra_invisible_ports: int = 0
    max_extra_interactions: Optional[int] = None
    closemod: str = "dual"  # "dual" or "literal"

    def __post_init__(self):
        if len(set(self.visible)) != len(self.visible):
            raise ValueError("visible port list contains duplicates")

    @staticmethod
    def for_ports(ports: Iterable[str], extra: int = 0, **kw) -> "EnumBudget":
        return EnumBudget(tuple(sorted(set(ports))), extra, **kw)

    @property
    def extras_cap(self) -> int:
        if self.max_extra_interactions is not None:
            return self.max_extra_interactions
        return min(2 ** len(self.visible), 8)


def resolve_term(t: Term, nu: Valuation) -> str:
    if isinstance(t, PortConst):
        return t.name
    if isinstance(t, PortVar):
        return nu.port(t.name)
    return "%s@%s" % (t.fun, nu.ident(t.index))


# ---------------------------------------------------------------------------
# Boolean terms over interactions


def eval_bterm(interaction: Iterable[str], b: BoolTerm, nu: Valuation = EMPTY_VALUATION) -> bool:
    """The satisfaction relation between an interaction and a boolean term."""
    iset = frozenset(interaction)
    if isinstance(b, BTerm):
        return resolve_term(b.term, nu) in iset
    if isinstance(b, BNot):
        return not eval_bterm(iset, b.sub, nu)
    return eval_bterm(iset, b.left, nu) and eval_bterm(iset, b.right, nu)


def _compile_bterm(b: BoolTerm, nu: Valuation) -> tuple[Callable[[int], bool], int]:
    """Compile to a mask predicate; returns (predicate, relevant port mask)."""
    if isinstance(b, BTerm):
        bit = 1 << port_id(resolve_term(b.term, nu))
        return (lambda m, _b=bit: m & _b != 0), bit
    if isinstance(b, BNot):
        f, rel = _compile_bterm(b.sub, nu)
        return (lambda m, _f=f: not _f(m)), rel
    fl, rl = _compile_bterm(b.left, nu)
    fr, rr = _compile_bterm(b.right, nu)
    return (lambda m, _l=fl, _r=fr: _l(m) and _r(m)), rl | rr


def _minimal_mask(imask: int, fn: Callable[[int], bool], relevant: int) -> bool:
    """Minimal-model test on masks.

    A port outside the term's vocabulary can always be removed without
    changing satisfaction, so interactions with irrelevant ports are never
    minimal; the remaining core is checked against all proper submasks.
    """
    if not fn(imask):
        return False
    if imask & ~relevant:
        return False
    sub = (imask - 1) & imask
    while sub:
        if fn(sub):
            return False
        sub = (sub - 1) & imask
    return True


def is_minimal_model(interaction: Iterable[str], b: BoolTerm, nu: Valuation = EMPTY_VALUATION) -> bool:
    imask = mask_of(interaction)
    fn, rel = _compile_bterm(b, nu)
    if fn(imask) and imask & ~rel:
        return False
    # full proper-subset check (no monotonicity shortcut)
    if not fn(imask):
        return False
    sub = (imask - 1) & imask
    while sub:
        if fn(sub):
            return False
        sub = (sub - 1) & imask
    return True


# ---------------------------------------------------------------------------
# Canonical architecture enumeration


def _subsets(items: list) -> Iterator[tuple]:
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def canonical_rename(a: Architecture, anchor_mask: int) -> Architecture:
    """Rename every port outside ``anchor_mask`` to ``@0``, ``@1``, ...

    The renaming is deterministic per architecture; since satisfaction only
    inspects invisible ports up to identity, results of the checker agree on
    architectures with the same canonical form.
    """
    invis = (a.dom_mask | _union(a.inter_masks)) & ~anchor_mask
    if not invis:
        return a

    ports = sorted(names_of(invis))
    sig = {}
    for p in ports:
        bit = 1 << port_id(p)
        inters = sorted(
            (sorted_names(im & anchor_mask), bool(im & ~anchor_mask & ~bit))
            for im in a.inter_masks
            if im & bit
        )
        sig[p] = (0 if a.dom_mask & bit else 1, tuple(inters), p)
    order = sorted(ports, key=lambda p: sig[p])
    mapping = {p: "@%d" % i for i, p in enumerate(order)}

    def ren(mask: int) -> int:
        out = mask & anchor_mask
        for p in names_of(mask & ~anchor_mask):
            out |= 1 << port_id(mapping[p])
        return out

    return Architecture(ren(a.dom_mask), frozenset(ren(im) for im in a.inter_masks))


def _union(masks: Iterable[int]) -> int:
    u = 0
    for m in masks:
        u |= m
    return u


def enumerate_canonical(budget: EnumBudget) -> Iterator[Architecture]:
    """All canonical architectures of the budget, deterministically ordered.

    Domains range over the visible ports plus ``extra_invisible_ports``
    fresh invisible ports; every interaction is a visible set J (optionally
    including invisible domain ports), either concrete or extended with the
    open-remainder port ``@o``.  Architectures equal up to renaming of
    invisible ports are suppressed.
    """
    visible = list(budget.visible)
    extras = ["@a%d" % i for i in range(budget.extra_invisible_ports)]
    vis_mask = mask_of(visible)
    out = []
    seen = set()
    for dn in range(len(extras) + 1):
        dom_extras = extras[:dn]  # prefix choice: extras are interchangeable
        for dom_vis in _subsets(visible):
            dom_mask = mask_of(dom_vis) | mask_of(dom_extras)
            jspace = [
                frozenset(j)
                for j in _subsets(sorted(set(visible) | set(dom_extras)))
                if mask_of(j) & dom_mask
            ]
            candidates = [(j, flag) for j in sorted(jspace, key=sorted) for flag in (False, True)]
            for chosen in _subsets(candidates):
                inters = [j | {"@o"} if flag else j for j, flag in chosen]
                arch = Architecture(dom_mask, frozenset(mask_of(i) for i in inters))
                canon = canonical_rename(arch, vis_mask)
                if canon not in seen:
                    seen.add(canon)
                    out.append(canon)
    out.sort(key=Architecture.sort_key)
    yield from out


def count_canonical(budget: EnumBudget) -> int:
    return sum(1 for _ in enumerate_canonical(budget))


# ---------------------------------------------------------------------------
# Domain profiles: exact evaluation of domain-driven formulas


@dataclass
class _Profile:
    # val: truth as a function of the domain only (None if unknown)
    # doms: the exact set of model domains (None if unknown; empty = unsat)
    val: Optional[Callable[[frozenset], bool]] = None
    doms: Optional[frozenset] = None


_DOMS_CAP = 4096


class _Checker:
    def __init__(self, budget: EnumBudget):
        self.budget = budget
        self.vis_mask = mask_of(budget.visible)
        self.memo: dict = {}
        self.profiles: dict = {}
        self.bterms: dict = {}

    # -- boolean term compilation cache ---------------------------------

    def tb(self, atom: Atom, nu: Valuation):
        key = (id(atom), nu.ports, nu.ids)
        hit = self.bterms.get(key)
        if hit is None:
            tb = BAnd(BTerm(atom.term), atom.bterm)
            hit = _compile_bterm(tb, nu)
            self.bterms[key] = hit
        return hit

    # -- main recursion ---------------------------------------------------

    def check(self, a: Architecture, phi: Formula, nu: Valuation) -> bool:
        prof = self.profile(phi, nu)
        if prof.val is not None:
            return prof.val(a.domain)
        anchor = self.vis_mask | mask_of(p for p, _ in _nu_ports(nu)) | mask_of(ports_of(phi))
        key = (phi, canonical_rename(a, anchor), nu.ports, nu.ids)
        hit = self.memo.get(key)
        if hit is None:
            hit = self._check(a, phi, nu)
            self.memo[key] = hit
        return hit

    def _check(self, a: Architecture, phi: Formula, nu: Valuation) -> bool:
        if isinstance(phi, Emp):
            return a.dom_mask == 0 and not a.inter_masks
        if isinstance(phi, (Eq, Neq)):
            same = _pure_eq(phi, nu)
            return same if isinstance(phi, Eq) else not same
        if isinstance(phi, Atom):
            p = resolve_term(phi.term, nu)
            if a.dom_mask != 1 << port_id(p):
                return False
            fn, rel = self.tb(phi, nu)
            if phi.kind is AtomKind.ALL_INTER:
                return all(fn(im) for im in a.inter_masks)
            if phi.kind is AtomKind.SOME_INTER:
                return any(fn(im) for im in a.inter_masks)
            if phi.kind is AtomKind.ALL_MIN:
                return all(_minimal_mask(im, fn, rel) for im in a.inter_masks)
            return any(_minimal_mask(im, fn, rel) for im in a.inter_masks)
        if isinstance(phi, And):
            return self.check(a, phi.left, nu) and self.check(a, phi.right, nu)
        if isinstance(phi, Or):
            return self.check(a, phi.left, nu) or self.check(a, phi.right, nu)
        if isinstance(phi, Not):
            return not self.check(a, phi.sub, nu)
        if isinstance(phi, Star):
            return self._check_star(a, phi, nu)
        if isinstance(phi, Wand):
            return self._check_wand(a, phi, nu)
        if isinstance(phi, CloseMod):
            if self.budget.closemod == "literal":
                return self.check(closure_of(a), phi.sub, nu)
            if not is_closed(a):
                return False
            for ext in self.closemod_extensions(a, phi):
                if self.check(ext, phi.sub, nu):
                    return True
            return False
        if isinstance(phi, ExistsPort):
            used = a.dom_mask | _union(a.inter_masks) | self.vis_mask
            fresh = _fresh_port("@e", used)
            for w in list(self.budget.visible) + [fresh]:
                if self.check(a, phi.sub, nu.bind_port(phi.var, w)):
                    return True
            return False
        if isinstance(phi, (Pred, ExistsIndex)):
            raise BudgetUnsupported(
                "predicate atoms and index quantifiers require unfolding first"
            )
        raise TypeError("unknown formula node %r" % (phi,))

    # -- star decomposition ----------------------------------------------

    def _check_star(self, a: Architecture, phi: Star, nu: Valuation) -> bool:
        relevant = self.vis_mask | mask_of(ports_of(phi))
        prof_l = self.profile(phi.left, nu)
        prof_r = self.profile(phi.right, nu)

        def dom_ok(prof: _Profile, side: Architecture) -> bool:
            if prof.doms is not None and side.domain not in prof.doms:
                return False
            if prof.val is not None and not prof.val(side.domain):
                return False
            return True

        for d1, d2, base1, base2, extras in _split_frames(a, self.budget, relevant):
            a1 = Architecture(d1, base1)
            a2 = Architecture(d2, base2)
            if not (dom_ok(prof_l, a1) and dom_ok(prof_r, a2)):
                continue
            if self.check(a1, phi.left, nu) and self.check(a2, phi.right, nu):
                return True
            if prof_l.val is not None and prof_r.val is not None:
                continue  # interaction-independent sides: extras are moot
            for x1, x2 in extras():
                b1 = Architecture(d1, base1 | x1)
                b2 = Architecture(d2, base2 | x2)
                if self.check(b1, phi.left, nu) and self.check(b2, phi.right, nu):
                    return True
        return False

    # -- closure extensions ------------------------------------------------

    def closemod_extensions(self, a: Architecture, node: CloseMod) -> Iterator[Architecture]:
        relevant = mask_of(ports_of(node)) | a.dom_mask
        used = a.dom_mask | _union(a.inter_masks) | self.vis_mask | relevant
        fresh_bit = 1 << port_id(_fresh_port("@c", used))
        candidates = []
        for j in _mask_subsets(relevant):
            if j & a.dom_mask == 0:
                continue
            if j & ~a.dom_mask and j not in a.inter_masks:
                candidates.append(j)  # open as a fully concrete set
            jf = j | fresh_bit
            if jf not in a.inter_masks:
                candidates.append(jf)
        cap = self.budget.extras_cap
        for r in range(cap + 1):
            for combo in itertools.combinations(candidates, r):
                yield Architecture(a.dom_mask, a.inter_masks | frozenset(combo))

    # -- wand ---------------------------------------------------------------

    def _check_wand(self, a: Architecture, phi: Wand, nu: Valuation) -> bool:
        prof_r = self.profile(phi.right, nu)
        prof_l = self.profile(phi.left, nu)
        if prof_r.val is not None and prof_l.doms is not None:
            dom = a.domain
            return all(
                prof_r.val(dom | s) for s in prof_l.doms if not (s & dom)
            )
        left_ports = mask_of(ports_of(phi.left))
        silplus_left = in_silplus(phi.left)
        count = 0
        for a1 in enumerate_canonical(self.budget):
            count += 1
            if count > 2 ** 18:
                raise BudgetUnsupported("wand extension universe exceeds the budget")
            if a1.dom_mask & a.dom_mask:
                continue
            if silplus_left and a1.dom_mask & ~left_ports:
                continue  # SIL+ models only have visible formula ports in the domain
            if not self.check(a1, phi.left, nu):
                continue
            if not self.check(compose(a1, a), phi.right, nu):
                return False
        return True

    # -- domain profiles ---------------------------------------------------

    def profile(self, phi: Formula, nu: Valuation) -> _Profile:
        key = (phi, nu.ports, nu.ids)
        hit = self.profiles.get(key)
        if hit is None:
            hit = self._profile(phi, nu)
            self.profiles[key] = hit
        return hit

    def _profile(self, phi: Formula, nu: Valuation) -> _Profile:
        empty = frozenset()
        if isinstance(phi, Emp):
            return _Profile(val=lambda d: not d, doms=frozenset([empty]))
        if isinstance(phi, (Eq, Neq)):
            same = _pure_eq(phi, nu)
            c = same if isinstance(phi, Eq) else not same
            return _Profile(val=lambda d, _c=c: _c, doms=None if c else frozenset())
        if isinstance(phi, Atom):
            try:
                p = resolve_term(phi.term, nu)
            except UnboundVariable:
                return _Profile()
            dom = frozenset([frozenset([p])])
            if phi.kind in (AtomKind.ALL_INTER, AtomKind.ALL_MIN):
                return _Profile(doms=dom)  # the empty interaction set is a model
            fn, rel = self.tb(phi, nu)
            need_min = phi.kind is AtomKind.SOME_MIN
            sat = any(
                (_minimal_mask(m, fn, rel) if need_min else fn(m))
                for m in _mask_subsets(rel)
            )
            return _Profile(doms=dom if sat else frozenset())
        if isinstance(phi, Not):
            sub = self.profile(phi.sub, nu)
            if sub.val is not None:
                return _Profile(val=lambda d, _f=sub.val: not _f(d))
            return _Profile()
        if isinstance(phi, (And, Or)):
            l = self.profile(phi.left, nu)
            r = self.profile(phi.right, nu)
            if isinstance(phi, And):
                for one, other_phi in ((phi.left, phi.right), (phi.right, phi.left)):
                    if isinstance(one, Emp):
                        ok = self.check(EMPTY, other_phi, nu)
                        return _Profile(
                            val=lambda d, _ok=ok: _ok and not d,
                            doms=frozenset([empty]) if ok else frozenset(),
                        )
                val = None
                if l.val is not None and r.val is not None:
                    val = lambda d, _l=l.val, _r=r.val: _l(d) and _r(d)
                doms = None
                if l.doms is not None and r.val is not None:
                    doms = frozenset(s for s in l.doms if r.val(s))
                elif r.doms is not None and l.val is not None:
                    doms = frozenset(s for s in r.doms if l.val(s))
                return _Profile(val=val, doms=doms)
            val = None
            if l.val is not None and r.val is not None:
                val = lambda d, _l=l.val, _r=r.val: _l(d) or _r(d)
            doms = None
            if l.doms is not None and r.doms is not None:
                doms = l.doms | r.doms
            return _Profile(val=val, doms=doms)
        if isinstance(phi, Star):
            l = self.profile(phi.left, nu)
            r = self.profile(phi.right, nu)
            val = None
            if l.val is not None and r.val is not None:
                cache: dict = {}

                def split_val(d, _l=l.val, _r=r.val, _cache=cache):
                    hit = _cache.get(d)
                    if hit is None:
                        items = sorted(d)
                        hit = any(
                            _l(frozenset(c)) and _r(d - frozenset(c))
                            for c in _subsets(items)
                        )
                        _cache[d] = hit
                    return hit

                val = split_val
            doms = None
            if l.doms is not None and r.doms is not None:
                pairs = set()
                for s1 in l.doms:
                    for s2 in r.doms:
                        if not (s1 & s2):
                            pairs.add(s1 | s2)
                        if len(pairs) > _DOMS_CAP:
                            pairs = None
                            break
                    if pairs is None:
                        break
                doms = frozenset(pairs) if pairs is not None else None
            return _Profile(val=val, doms=doms)
        if isinstance(phi, Wand):
            l = self.profile(phi.left, nu)
            r = self.profile(phi.right, nu)
            if r.val is not None and l.doms is not None:
                ds = l.doms

                def wand_val(d, _r=r.val, _ds=ds):
                    return all(_r(d | s) for s in _ds if not (s & d))

                return _Profile(val=wand_val)
            return _Profile()
        return _Profile()


def _nu_ports(nu: Valuation):
    return nu.ports


def _pure_eq(phi, nu: Valuation) -> bool:
    try:
        return resolve_term(phi.left, nu) == resolve_term(phi.right, nu)
    except UnboundVariable:
        if phi.left == phi.right:
            return True
        raise


def _fresh_port(base: str, used_mask: int) -> str:
    used = names_of(used_mask)
    if base not in used:
        return base
    i = 0
    while "%s%d" % (base, i) in used:
        i += 1
    return "%s%d" % (base, i)


def _mask_subsets(mask: int) -> Iterator[int]:
    """All nonempty submasks of mask, plus the empty mask last excluded."""
    sub = mask
    while sub:
        yield sub
        sub = (sub - 1) & mask


# ---------------------------------------------------------------------------
# Star split enumeration (shared with the SIL* compatibility tests)


def _invisible_groups(a: Architecture, anchored_mask: int) -> list[list[str]]:
    """Group interchangeable invisible domain ports: swapping two ports of a
    group is an automorphism of the architecture."""
    ports = sorted(names_of(a.dom_mask & ~anchored_mask))
    groups: list[list[str]] = []
    for p in ports:
        placed = False
        for g in groups:
            if _swappable(a, g[0], p):
                g.append(p)
                placed = True
                break
        if not placed:
            groups.append([p])
    return groups


def _swappable(a: Architecture, p: str, q: str) -> bool:
    bp, bq = 1 << port_id(p), 1 << port_id(q)

    def swap(mask: int) -> int:
        hp, hq = mask & bp, mask & bq
        mask &= ~(bp | bq)
        if hp:
            mask |= bq
        if hq:
            mask |= bp
        return mask

    return frozenset(swap(im) for im in a.inter_masks) == a.inter_masks


def _split_frames(a: Architecture, budget: EnumBudget, relevant_mask: int):
    """Domain-level decomposition frames: (d1, d2, base1, base2, extras)
    where extras() lazily enumerates the dropped-interaction additions."""
    anchored_mask = a.dom_mask & relevant_mask
    anchored = sorted(names_of(anchored_mask))
    groups = _invisible_groups(a, relevant_mask)

    used = a.dom_mask | _union(a.inter_masks) | relevant_mask
    f1 = 1 << port_id(_fresh_port("@d1", used))
    f2 = 1 << port_id(_fresh_port("@d2", used))

    for vis1 in _subsets(anchored):
        vis1_mask = mask_of(vis1)
        vis2_mask = anchored_mask & ~vis1_mask
        for counts in itertools.product(*(range(len(g) + 1) for g in groups)):
            d1 = vis1_mask
            d2 = vis2_mask
            for g, c in zip(groups, counts):
                d1 |= mask_of(g[:c])
                d2 |= mask_of(g[c:])
            base1 = frozenset(im for im in a.inter_masks if im & d1)
            base2 = frozenset(im for im in a.inter_masks if im & d2)

            def extras(d1=d1, d2=d2, counts=counts):
                if not d1 or not d2:
                    return  # dropped interactions must intersect both sides
                cap = budget.extras_cap
                if cap <= 0:
                    return
                sigs = _dropped_signatures(groups, counts, d1, d2, relevant_mask)
                avail1 = {gi: c for gi, c in enumerate(counts)}
                avail2 = {
                    gi: len(g) - c for gi, (g, c) in enumerate(zip(groups, counts))
                }
                for r in range(1, cap + 1):
                    for combo in itertools.combinations_with_replacement(sigs, r):
                        got = _instantiate_drops(
                            combo, groups, counts, avail1, avail2, a.inter_masks, f1, f2
                        )
                        if got is None:
                            continue
                        x1 = frozenset(k for k, side in got if side == 1)
                        x2 = frozenset(k for k, side in got if side == 2)
                        yield x1, x2

            yield d1, d2, base1, base2, extras


def star_splits(
    a: Architecture, budget: EnumBudget, relevant_mask: int
) -> Iterator[tuple[Architecture, Architecture]]:
    """All decompositions a = a1 (+) a2, canonically up to invisible-port
    symmetry, including splits that lose up to ``extras_cap`` dropped
    interactions (each intersecting both sub-domains)."""
    for d1, d2, base1, base2, extras in _split_frames(a, budget, relevant_mask):
        yield Architecture(d1, base1), Architecture(d2, base2)
        for x1, x2 in extras():
            yield Architecture(d1, base1 | x1), Architecture(d2, base2 | x2)


def _dropped_signatures(groups, counts, d1, d2, relevant_mask):
    """Shapes of dropped interactions up to invisible-port symmetry: a
    visible core, at most one invisible domain port of each side
    (identified by its interchangeability group), and an optional fresh
    invisible port distinguishing fully visible drops from marked ones."""
    g1_opts = [None] + [gi for gi, c in enumerate(counts) if c > 0]
    g2_opts = [None] + [gi for gi, (g, c) in enumerate(zip(groups, counts)) if len(g) - c > 0]
    sigs = []
    for jv in itertools.chain([0], _mask_subsets(relevant_mask)):
        for gi1 in g1_opts:
            for gi2 in g2_opts:
                if gi1 is None and jv & d1 == 0:
                    continue
                if gi2 is None and jv & d2 == 0:
                    continue
                for side in (1, 2):
                    for fresh in (False, True):
                        sigs.append((jv, gi1, gi2, side, fresh))
    return sigs


def _instantiate_drops(combo, groups, counts, avail1, avail2, inter_masks, f1, f2):
    """Assign concrete group ports to a multiset of drop shapes, first-k per
    group and side; returns None when the groups run out of ports or the
    same interaction would be dropped on both sides."""
    used1: dict = {}
    used2: dict = {}
    out = []
    for jv, gi1, gi2, side, fresh in combo:
        core = jv
        if gi1 is not None:
            slot = used1.get(gi1, 0)
            if slot >= avail1[gi1]:
                return None
            used1[gi1] = slot + 1
            core |= 1 << port_id(groups[gi1][slot])
        if gi2 is not None:
            slot = used2.get(gi2, 0)
            if slot >= avail2[gi2]:
                return None
            used2[gi2] = slot + 1
            core |= 1 << port_id(groups[gi2][counts[gi2] + slot])
        if fresh:
            core |= f1 if side == 1 else f2
        k = core
        if k in inter_masks:
            return None
        out.append((k, side))
    masks = [k for k, _ in out]
    if len(set(masks)) != len(masks):
        return None
    return out


# ---------------------------------------------------------------------------
# Public entry points


def check(
    a: Architecture,
    phi: Formula,
    nu: Valuation = EMPTY_VALUATION,
    budget: EnumBudget | None = None,
) -> bool:
    """The satisfaction relation with budget-driven finite quantification."""
    if budget is None:
        budget = EnumBudget.for_ports(ports_of(phi))
    missing = ports_of(phi) - set(budget.visible)
    if missing:
        raise VisiblePortsExceeded("formula ports outside the visible list: %s" % sorted(missing))
    return _Checker(budget).check(a, phi, nu)


def oracle_sat(
    phi: Formula, budget: EnumBudget, nu: Valuation = EMPTY_VALUATION
) -> tuple[bool, Optional[Architecture]]:
    """Brute-force satisfiability over the canonical architecture stream."""
    checker = _Checker(budget)
    prof = checker.profile(phi, nu)
    if prof.doms is not None:
        for d in sorted(prof.doms, key=sorted):
            return True, Architecture(mask_of(d), frozenset())
        return False, None
    if prof.val is not None:
        base = sorted(ports_of(phi) | set(budget.visible))
        fresh = ["@w%d" % i for i in range(_fresh_count(phi))]
        for d in _subsets(base + fresh):
            if prof.val(frozenset(d)):
                return True, Architecture(mask_of(d), frozenset())
        return False, None
    uni = budget
    if in_silplus(phi):
        uni = EnumBudget(budget.visible, 0, budget.max_extra_interactions, budget.closemod)
    for a in enumerate_canonical(uni):
        if checker.check(a, phi, nu):
            return True, a
    return False, None


def _fresh_count(phi: Formula) -> int:
    from .formula import subformulas

    n = 1 + sum(1 for f in subformulas(phi) if isinstance(f, (Star, ExistsPort)))
    return min(n, 4)


def oracle_entails(
    phi: Formula, psi: Formula, budget: EnumBudget, nu: Valuation = EMPTY_VALUATION
) -> bool:
    """Brute-force entailment: every canonical model of phi satisfies psi."""
    checker = _Checker(budget)
    uni = budget
    if in_silplus(phi) and in_silplus(psi):
        uni = EnumBudget(budget.visible, 0, budget.max_extra_interactions, budget.closemod)
    for a in enumerate_canonical(uni):
        if checker.check(a, phi, nu) and not checker.check(a, psi, nu):
            return False
    return True
