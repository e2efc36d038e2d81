"""Decision machinery for the negation fragment (no wand).

Negation lets formulas assert invisible domain ports, so architectures are
compared by counting statistics: each invisible domain port has a visible
interaction type (the set of visible projections of its interactions), and
two architectures are n-equivalent when they agree on the visible data and
on the per-type counts up to the recurrence threshold b_P(n, type).

The counting equivalence is implemented with one repair over the source
material, recorded in the project notes: the visible-interaction condition
keeps fully visible interaction sets separate from projections of
invisible-carrying interactions.  Without the split, architectures such as
<{p},{{p}}> and <{p},{{p,@o}}> would be identified while the minimal-model
atoms distinguish them; the test-formula set gains the matching
minimal-witness pattern for the same reason.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional

from .arch import Architecture, mask_of, names_of, port_id
from .errors import CapExceeded, NotInFragment, NotInvisibleDomainPort
from .formula import (
    And, Atom, Emp, Formula, Not, Star, in_silstar, ports_of, subformulas,
)
from .semantics import EnumBudget, check


# ---------------------------------------------------------------------------
# The counting recurrence

# A visible interaction type ("class") is a set of subsets of P.  Classes
# are addressed by bitmask over the 2^|P| visible sets, ordered by their
# own masks over the port list.


def _class_mask(cls: Iterable[Iterable[str]], ports: tuple[str, ...]) -> int:
    bits = {p: i for i, p in enumerate(ports)}
    m = 0
    for s in cls:
        sm = 0
        for p in s:
            sm |= 1 << bits[p]
        m |= 1 << sm
    return m


def _class_sets(mask: int, ports: tuple[str, ...]) -> frozenset[frozenset[str]]:
    out = []
    for sm in range(1 << len(ports)):
        if mask >> sm & 1:
            out.append(frozenset(ports[i] for i in range(len(ports)) if sm >> i & 1))
    return frozenset(out)


@lru_cache(maxsize=None)
def _b_rec(k: int, n: int, cls_mask: int) -> int:
    if n <= 0:
        return 0
    if n == 1:
        return 1
    n_sets = 1 << k
    full = (1 << n_sets) - 1
    total = 0
    rest = full & ~cls_mask
    sub = rest
    while True:  # all supersets of cls_mask
        total += _b_rec(k, n - 1, cls_mask | sub)
        if sub == 0:
            break
        sub = (sub - 1) & rest
    return 2 * total


def b_rec(ports: Iterable[str], n: int, cls: Iterable[Iterable[str]]) -> int:
    """The threshold recurrence: 1 at n=1, then twice the sum over all
    superset types; exact big-integer arithmetic."""
    p = tuple(sorted(set(ports)))
    return _b_rec(len(p), n, _class_mask(cls, p))


# ---------------------------------------------------------------------------
# Formula bound


def bound_of(psi: Formula) -> int:
    if not in_silstar(psi):
        raise NotInFragment("the bound is defined on the negation fragment")
    return _bound(psi)


def _bound(psi: Formula) -> int:
    if isinstance(psi, (Emp, Atom)):
        return 1
    if isinstance(psi, And):
        return max(_bound(psi.left), _bound(psi.right))
    if isinstance(psi, Not):
        return _bound(psi.sub)
    return max(_bound(psi.left), _bound(psi.right)) + 1  # Star


# ---------------------------------------------------------------------------
# Visible interaction types


def vtype(x: str, ports: Iterable[str], a: Architecture) -> frozenset[frozenset[str]]:
    vis = tuple(sorted(set(ports)))
    vis_mask = mask_of(vis)
    bit = 1 << port_id(x)
    if not (a.dom_mask & bit) or (vis_mask & bit):
        raise NotInvisibleDomainPort("%s is not an invisible domain port" % x)
    return frozenset(
        frozenset(names_of(im & vis_mask)) for im in a.inter_masks if im & bit
    )


def vmap(a: Architecture, ports: Iterable[str], cls: Iterable[Iterable[str]]) -> frozenset[str]:
    vis = tuple(sorted(set(ports)))
    target = frozenset(frozenset(s) for s in cls)
    out = []
    for x in names_of(a.dom_mask & ~mask_of(vis)):
        if vtype(x, vis, a) == target:
            out.append(x)
    return frozenset(out)


def _class_counts(a: Architecture, vis_mask: int) -> dict[int, int]:
    """Counts of invisible domain ports per visible interaction type,
    classes addressed by bitmask."""
    k = vis_mask.bit_count()
    bits = {}
    i = 0
    m = vis_mask
    while m:
        low = m & -m
        bits[low] = i
        i += 1
        m ^= low
    counts: dict[int, int] = {}
    for x_bit in _bits(a.dom_mask & ~vis_mask):
        cls = 0
        for im in a.inter_masks:
            if im & x_bit:
                sm = 0
                mm = im & vis_mask
                while mm:
                    low = mm & -mm
                    sm |= 1 << bits[low]
                    mm ^= low
                cls |= 1 << sm
        counts[cls] = counts.get(cls, 0) + 1
    return counts


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low
        mask ^= low


# ---------------------------------------------------------------------------
# The counting equivalence


def veq(a1: Architecture, a2: Architecture, ports: Iterable[str], n: int,
        literal: bool = False) -> bool:
    """n-indexed equivalence: same visible domain, same visible interaction
    record, type counts equal below the threshold and both above otherwise.

    With ``literal=True`` the visible interaction record is the merged
    projection set as displayed in the source; the default separates fully
    visible interactions from projections of invisible-carrying ones, which
    is required for the minimal-model atoms (see the module notes).
    """
    vis = tuple(sorted(set(ports)))
    vis_mask = mask_of(vis)
    k = len(vis)
    if (a1.dom_mask ^ a2.dom_mask) & vis_mask:
        return False

    def record(a):
        dv = a.dom_mask & vis_mask
        if literal:
            return frozenset(
                im & vis_mask for im in a.inter_masks if im & dv
            )
        closed = frozenset(im for im in a.inter_masks if im & ~vis_mask == 0)
        openp = frozenset(
            im & vis_mask for im in a.inter_masks if im & ~vis_mask and im & dv
        )
        return (closed, openp)

    if record(a1) != record(a2):
        return False
    c1 = _class_counts(a1, vis_mask)
    c2 = _class_counts(a2, vis_mask)
    for cls in set(c1) | set(c2):
        b = _b_rec(k, n, cls)
        x, y = c1.get(cls, 0), c2.get(cls, 0)
        if x < b or y < b:
            if x != y:
                return False
    return True


# ---------------------------------------------------------------------------
# Test formulae


@dataclass(frozen=True)
class StarTestFormula:
    """has(p); exact-projection open/closed witnesses; type counting."""

    kind: str  # "has" | "some_nonmin" | "some_min" | "type_at_least"
    port: Optional[str]
    proj: Optional[frozenset[str]]
    cls: Optional[frozenset[frozenset[str]]]
    count: int
    visible: tuple[str, ...]


def test_formulae_star(ports: Iterable[str], n: int) -> list[StarTestFormula]:
    vis = tuple(sorted(set(ports)))
    out = [StarTestFormula("has", p, None, None, 0, vis) for p in vis]
    for p in vis:
        for r in range(len(vis)):
            for rest in itertools.combinations([q for q in vis if q != p], r):
                proj = frozenset(rest) | {p}
                out.append(StarTestFormula("some_nonmin", p, proj, None, 0, vis))
                out.append(StarTestFormula("some_min", p, proj, None, 0, vis))
    bound = b_rec(vis, n, [])
    k = len(vis)
    for cls_mask in range(1 << (1 << k)):
        cls = _class_sets(cls_mask, vis)
        for m in range(1, bound + 1):
            out.append(StarTestFormula("type_at_least", None, None, cls, m, vis))
    return out


def eval_star_test_formula(a: Architecture, tf: StarTestFormula) -> bool:
    vis_mask = mask_of(tf.visible)
    if tf.kind == "has":
        return bool(a.dom_mask & (1 << port_id(tf.port)))
    if tf.kind == "type_at_least":
        cls_mask = _class_mask(tf.cls, tf.visible)
        return _class_counts(a, vis_mask).get(cls_mask, 0) >= tf.count
    pbit = 1 << port_id(tf.port)
    if not (a.dom_mask & pbit):
        return False
    proj = mask_of(tf.proj)
    for im in a.inter_masks:
        if im & pbit and im & vis_mask == proj:
            invisible = im & ~vis_mask
            if tf.kind == "some_min" and not invisible:
                return True
            if tf.kind == "some_nonmin" and invisible:
                return True
    return False


def star_signature(a: Architecture, ports: Iterable[str], n: int) -> tuple:
    return tuple(eval_star_test_formula(a, tf) for tf in test_formulae_star(ports, n))


# ---------------------------------------------------------------------------
# Canonical architectures and small models


def star_canonical(
    ports: Iterable[str],
    caps: dict[int, int] | int,
    max_universe: int = 500_000,
) -> Iterator[Architecture]:
    """The canonical universe: a visible part (domain, fully visible
    interaction sets, open projections) plus counted invisible domain ports
    per visible interaction type, capped per type.

    ``caps`` is either a single cap or a map from class mask to cap.
    """
    vis = tuple(sorted(set(ports)))
    k = len(vis)
    n_sets = 1 << k
    classes = list(range(1 << n_sets))
    if isinstance(caps, int):
        caps = {cls: caps for cls in classes}

    def with_cap(cls):
        return caps.get(cls, 0)

    # size estimate
    total = 1
    for cls in classes:
        total *= with_cap(cls) + 1
    visible_combos = 0
    for dv_bits in range(1 << k):
        js = [j for j in range(1, n_sets) if j & dv_bits]
        visible_combos += 1 << (2 * len(js))
    if total * visible_combos > max_universe:
        raise CapExceeded(
            "canonical universe has about %d members (cap %d)"
            % (total * visible_combos, max_universe)
        )

    def port_set(sm):
        return [vis[i] for i in range(k) if sm >> i & 1]

    caps_list = [with_cap(cls) for cls in classes]
    # small architectures first: invisible port total ascending
    for counts in _counts_by_sum(caps_list):
        for dv_bits in range(1 << k):
            dv = port_set(dv_bits)
            js = [j for j in range(1, n_sets) if j & dv_bits]
            for closed_bits in range(1 << len(js)):
                closed = [js[i] for i in range(len(js)) if closed_bits >> i & 1]
                for open_bits in range(1 << len(js)):
                    opens = [js[i] for i in range(len(js)) if open_bits >> i & 1]
                    dom = list(dv)
                    inters = [port_set(j) for j in closed]
                    inters += [port_set(j) + ["@o"] for j in opens]
                    idx = 0
                    for cls, c in zip(classes, counts):
                        for _ in range(c):
                            x = "@x%d" % idx
                            idx += 1
                            dom.append(x)
                            for sm in range(n_sets):
                                if cls >> sm & 1:
                                    inters.append(port_set(sm) + [x])
                    yield Architecture.make(dom, inters)


def _counts_by_sum(caps_list: list[int]) -> Iterator[tuple[int, ...]]:
    def comps(caps, s):
        if not caps:
            if s == 0:
                yield ()
            return
        for first in range(min(caps[0], s) + 1):
            for rest in comps(caps[1:], s - first):
                yield (first,) + rest

    for s in range(sum(caps_list) + 1):
        yield from comps(caps_list, s)


def small_model_bound(psi: Formula) -> int:
    """Exact domain/interaction size bound from the trimming argument:
    number of types times the empty-type threshold, plus the visible
    ports."""
    ports = ports_of(psi)
    n = bound_of(psi)
    k = len(ports)
    return (1 << (1 << k)) * b_rec(ports, n, []) + k


def _has_negation(psi: Formula) -> bool:
    return any(isinstance(f, Not) for f in subformulas(psi))


def _domain_pinned(psi: Formula) -> bool:
    """True when every model's domain is contained in the visible ports:
    atoms pin a singleton visible domain, emp pins the empty one, a
    conjunction is pinned by either side and a star by both."""
    if isinstance(psi, (Emp, Atom)):
        return True
    if isinstance(psi, And):
        return _domain_pinned(psi.left) or _domain_pinned(psi.right)
    if isinstance(psi, Star):
        return _domain_pinned(psi.left) and _domain_pinned(psi.right)
    return False


def sat_star(
    psi: Formula,
    max_visible: int = 2,
    max_bound: int = 3,
    max_universe: int = 500_000,
) -> tuple[bool, Optional[Architecture]]:
    """Small-model satisfiability: enumerate the canonical universe with
    per-type caps at the recurrence threshold and model-check."""
    if not in_silstar(psi):
        raise NotInFragment("satisfiability procedure expects the negation fragment")
    vis = tuple(sorted(ports_of(psi)))
    n = bound_of(psi)
    if len(vis) > max_visible:
        raise CapExceeded("%d visible ports exceed the cap %d" % (len(vis), max_visible))
    if n > max_bound:
        raise CapExceeded("formula bound %d exceeds the cap %d" % (n, max_bound))
    k = len(vis)
    if _has_negation(psi) and not _domain_pinned(psi):
        caps = {cls: _b_rec(k, n, cls) for cls in range(1 << (1 << k))}
    else:
        caps = 0  # every model has a visible domain
    budget = EnumBudget(vis)
    for a in star_canonical(vis, caps, max_universe):
        if check(a, psi, budget=budget):
            return True, a
    return False, None


def entails_star(psi1: Formula, psi2: Formula, **kw) -> bool:
    """Entailment through the negation connective."""
    ok, _ = sat_star(And(psi1, Not(psi2)), **kw)
    return not ok
