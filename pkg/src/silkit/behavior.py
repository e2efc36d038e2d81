"""Finite-state machines labeled by interactions.

The asynchronous product synchronizes shared labels and interleaves labels
unknown to the other machine; restricting a machine by an architecture
keeps the transitions whose label is one of its interactions.  The
composition theorem relates the two: restriction of a composition is
included in the product of the restrictions, with equality under a
matching side condition.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Hashable, Iterable, Optional

from .arch import Architecture, compose
from .errors import ParseError, UndefinedRestriction, UnknownState

Label = frozenset


@dataclass(frozen=True)
class Fsm:
    states: frozenset
    transitions: frozenset  # of (state, Label, state)
    initial: Optional[Hashable] = None

    def __post_init__(self):
        for q, _, q2 in self.transitions:
            if q not in self.states or q2 not in self.states:
                raise UnknownState("transition endpoint outside the state set")
        if self.initial is not None and self.initial not in self.states:
            raise UnknownState("initial state outside the state set")

    @staticmethod
    def make(states: Iterable, transitions: Iterable, initial=None) -> "Fsm":
        return Fsm(
            frozenset(states),
            frozenset((q, frozenset(i), q2) for q, i, q2 in transitions),
            initial,
        )

    def labels(self) -> frozenset:
        """The label alphabet (set of interactions on transitions)."""
        return frozenset(i for _, i, _ in self.transitions)


def async_product(m1: Fsm, m2: Fsm) -> Fsm:
    """Product over the state pairs: shared labels synchronize, labels
    outside the other machine's alphabet interleave."""
    s1, s2 = m1.labels(), m2.labels()
    trans = set()
    for q1, i, q1b in m1.transitions:
        for q2, j, q2b in m2.transitions:
            if i == j:
                trans.add(((q1, q2), i, (q1b, q2b)))
        if i not in s2:
            for q2 in m2.states:
                trans.add(((q1, q2), i, (q1b, q2)))
    for q2, i, q2b in m2.transitions:
        if i not in s1:
            for q1 in m1.states:
                trans.add(((q1, q2), i, (q1, q2b)))
    states = frozenset((q1, q2) for q1 in m1.states for q2 in m2.states)
    initial = None
    if m1.initial is not None and m2.initial is not None:
        initial = (m1.initial, m2.initial)
    return Fsm(states, frozenset(trans), initial)


def restrict(a: Architecture, m: Fsm) -> Fsm:
    """Keep transitions whose label is an interaction of the architecture;
    undefined when some label misses the domain entirely."""
    dom = a.domain
    for label in m.labels():
        if not (label & dom):
            raise UndefinedRestriction(label)
    inters = a.interactions
    trans = frozenset((q, i, q2) for q, i, q2 in m.transitions if i in inters)
    return Fsm(m.states, trans, m.initial)


@dataclass(frozen=True)
class BehaviorReport:
    inclusion_holds: bool
    equality_holds: bool
    side_condition: bool
    counterexample: Optional[tuple] = None


def check_behavior_theorem(
    a1: Architecture, a2: Architecture, m1: Fsm, m2: Fsm
) -> BehaviorReport:
    """Compare the restriction of the composition with the product of the
    restrictions, and evaluate the matching side condition."""
    lhs = restrict(compose(a1, a2), async_product(m1, m2))
    rhs = async_product(restrict(a1, m1), restrict(a2, m2))
    inclusion = lhs.transitions <= rhs.transitions
    equality = lhs.transitions == rhs.transitions

    def side(x: Architecture, y: Architecture) -> bool:
        inters_y = y.interactions
        return all(
            (not (i & y.domain)) or (i in inters_y) for i in x.interactions
        )

    condition = side(a1, a2) and side(a2, a1)
    counterexample = None
    if not equality:
        diff = (rhs.transitions - lhs.transitions) | (lhs.transitions - rhs.transitions)
        counterexample = sorted(diff, key=repr)[0]
    return BehaviorReport(inclusion, equality, condition, counterexample)


def reachable(m: Fsm, q0) -> frozenset:
    if q0 not in m.states:
        raise UnknownState("unknown state %r" % (q0,))
    seen = {q0}
    frontier = [q0]
    step = {}
    for q, _, q2 in m.transitions:
        step.setdefault(q, []).append(q2)
    while frontier:
        q = frontier.pop()
        for q2 in step.get(q, ()):
            if q2 not in seen:
                seen.add(q2)
                frontier.append(q2)
    return frozenset(seen)


def deadlock_states(m: Fsm, q0) -> frozenset:
    out_going = {q for q, _, _ in m.transitions}
    return frozenset(q for q in reachable(m, q0) if q not in out_going)


# ---------------------------------------------------------------------------
# Text format:  fsm states {a,b} init a trans { a -{x,y}-> b; b -{x}-> a }

_FSM_TOKEN = re.compile(r"\s*([A-Za-z0-9_@]+|->|-|[{},;])")


def parse_fsm(text: str) -> Fsm:
    toks = []
    pos = 0
    while pos < len(text):
        m = _FSM_TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise ParseError("unexpected character %r in fsm" % text[pos], 1, pos + 1)
        toks.append(m.group(1))
        pos = m.end()
    i = 0

    def take(expected=None):
        nonlocal i
        if i >= len(toks):
            raise ParseError("unexpected end of fsm text")
        t = toks[i]
        if expected is not None and t != expected:
            raise ParseError("expected %r, found %r in fsm" % (expected, t))
        i += 1
        return t

    def peek():
        return toks[i] if i < len(toks) else None

    def id_list(closer):
        items = []
        if peek() != closer:
            items.append(take())
            while peek() == ",":
                take(",")
                items.append(take())
        take(closer)
        return items

    take("fsm")
    take("states")
    take("{")
    states = id_list("}")
    initial = None
    if peek() == "init":
        take("init")
        initial = take()
    take("trans")
    take("{")
    transitions = []
    while peek() != "}":
        src = take()
        take("-")
        take("{")
        label = id_list("}")
        take("->")
        dst = take()
        transitions.append((src, label, dst))
        if peek() == ";":
            take(";")
    take("}")
    if i != len(toks):
        raise ParseError("trailing input after fsm")
    return Fsm.make(states, transitions, initial)


def print_fsm(m: Fsm) -> str:
    def state_str(q):
        return q if isinstance(q, str) else "(%s)" % ",".join(map(state_str, q))

    states = ",".join(sorted(state_str(q) for q in m.states))
    trans = sorted(
        (state_str(q), ",".join(sorted(i)), state_str(q2))
        for q, i, q2 in m.transitions
    )
    body = "; ".join("%s -{%s}-> %s" % t for t in trans)
    init = " init %s" % state_str(m.initial) if m.initial is not None else ""
    return "fsm states {%s}%s trans { %s }" % (states, init, body)
