"""Formula ASTs for the interaction logic and its fragments.

Terms denote ports: constants, variables (written ?x), or applied port
functions p(i) over component indices.  Boolean terms describe interactions
with conjunction and negation; disjunction is the derived form ~(~a.~b).
Formulas combine the atomic propositions with the separating connectives,
the closure modality <.> and the two kinds of quantifiers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union

# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class PortConst:
    name: str


@dataclass(frozen=True)
class PortVar:
    name: str


@dataclass(frozen=True)
class PortFun:
    fun: str
    index: str  # index variable or identifier literal


Term = Union[PortConst, PortVar, PortFun]


def materialize(fun: str, ident: str) -> PortConst:
    """Ground port of a component: injective in (function, identifier)."""
    return PortConst("%s@%s" % (fun, ident))


# ---------------------------------------------------------------------------
# Boolean terms


@dataclass(frozen=True)
class BTerm:
    term: Term


@dataclass(frozen=True)
class BNot:
    sub: "BoolTerm"


@dataclass(frozen=True)
class BAnd:
    left: "BoolTerm"
    right: "BoolTerm"


BoolTerm = Union[BTerm, BNot, BAnd]


def bor(a: BoolTerm, b: BoolTerm) -> BoolTerm:
    """Derived boolean disjunction ~(~a.~b)."""
    return BNot(BAnd(BNot(a), BNot(b)))


def bports(b: BoolTerm) -> frozenset[str]:
    if isinstance(b, BTerm):
        return frozenset([b.term.name]) if isinstance(b.term, PortConst) else frozenset()
    if isinstance(b, BNot):
        return bports(b.sub)
    return bports(b.left) | bports(b.right)


def bvars(b: BoolTerm) -> frozenset[str]:
    if isinstance(b, BTerm):
        return frozenset([b.term.name]) if isinstance(b.term, PortVar) else frozenset()
    if isinstance(b, BNot):
        return bvars(b.sub)
    return bvars(b.left) | bvars(b.right)


# ---------------------------------------------------------------------------
# Formulas


class AtomKind(Enum):
    ALL_INTER = "-o"   # every interaction satisfies t.b
    ALL_MIN = "-#"     # every interaction is a minimal model of t.b
    SOME_MIN = "-#E"   # some interaction is a minimal model of t.b
    SOME_INTER = "-oE"  # some interaction satisfies t.b


@dataclass(frozen=True)
class Emp:
    pass


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Neq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Atom:
    kind: AtomKind
    term: Term
    bterm: BoolTerm


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple[str, ...]  # index variables or identifier literals


@dataclass(frozen=True)
class CloseMod:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class Star:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Wand:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class ExistsPort:
    var: str
    sub: "Formula"


@dataclass(frozen=True)
class ExistsIndex:
    var: str
    sub: "Formula"


Formula = Union[
    Emp, Eq, Neq, Atom, Pred, CloseMod, And, Or, Not, Star, Wand, ExistsPort, ExistsIndex
]

EMP = Emp()
TOP = Eq(PortVar("x"), PortVar("x"))
BOT = Not(TOP)

_BINARY = (And, Or, Star, Wand)


def subformulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    if isinstance(phi, _BINARY):
        yield from subformulas(phi.left)
        yield from subformulas(phi.right)
    elif isinstance(phi, (Not, CloseMod, ExistsPort, ExistsIndex)):
        yield from subformulas(phi.sub)


def _term_ports(t: Term) -> frozenset[str]:
    return frozenset([t.name]) if isinstance(t, PortConst) else frozenset()


def ports_of(phi: Formula) -> frozenset[str]:
    """All port constants occurring in the formula."""
    out: set[str] = set()
    for f in subformulas(phi):
        if isinstance(f, Atom):
            out |= _term_ports(f.term) | bports(f.bterm)
        elif isinstance(f, (Eq, Neq)):
            out |= _term_ports(f.left) | _term_ports(f.right)
    return frozenset(out)


def free_port_vars(phi: Formula) -> frozenset[str]:
    if isinstance(phi, Atom):
        fv = bvars(phi.bterm)
        if isinstance(phi.term, PortVar):
            fv |= {phi.term.name}
        return fv
    if isinstance(phi, (Eq, Neq)):
        fv = frozenset()
        for t in (phi.left, phi.right):
            if isinstance(t, PortVar):
                fv |= {t.name}
        return fv
    if isinstance(phi, _BINARY):
        return free_port_vars(phi.left) | free_port_vars(phi.right)
    if isinstance(phi, (Not, CloseMod, ExistsIndex)):
        return free_port_vars(phi.sub)
    if isinstance(phi, ExistsPort):
        return free_port_vars(phi.sub) - {phi.var}
    return frozenset()


# ---------------------------------------------------------------------------
# Fragment membership


def quantifier_free(phi: Formula) -> bool:
    return not any(isinstance(f, (ExistsPort, ExistsIndex)) for f in subformulas(phi))


def port_ground(phi: Formula) -> bool:
    """No port variables and no unapplied port functions with index vars."""

    def ground_term(t: Term) -> bool:
        return isinstance(t, PortConst)

    for f in subformulas(phi):
        if isinstance(f, Atom):
            if not ground_term(f.term) or bvars(f.bterm):
                return False
            if any(isinstance(x.term, PortFun) for x in _bleaves(f.bterm)):
                return False
        elif isinstance(f, (Eq, Neq)):
            if not (ground_term(f.left) and ground_term(f.right)):
                return False
        elif isinstance(f, (Pred, ExistsIndex)):
            return False
    return True


def _bleaves(b: BoolTerm) -> Iterator[BTerm]:
    if isinstance(b, BTerm):
        yield b
    elif isinstance(b, BNot):
        yield from _bleaves(b.sub)
    else:
        yield from _bleaves(b.left)
        yield from _bleaves(b.right)


def _const_atom(f: Atom) -> bool:
    return isinstance(f.term, PortConst) and all(
        isinstance(x.term, PortConst) for x in _bleaves(f.bterm)
    )


def in_silplus(phi: Formula) -> bool:
    """Positive fragment: atoms over port constants, <.>, and/or/star/wand."""
    if isinstance(phi, Emp):
        return True
    if isinstance(phi, Atom):
        return _const_atom(phi)
    if isinstance(phi, (And, Or, Star, Wand)):
        return in_silplus(phi.left) and in_silplus(phi.right)
    if isinstance(phi, CloseMod):
        return in_silplus(phi.sub)
    return False


def in_silstar(phi: Formula) -> bool:
    """Negation fragment: no wand, no closure modality, no -oE atoms."""
    if isinstance(phi, Emp):
        return True
    if isinstance(phi, Atom):
        return phi.kind is not AtomKind.SOME_INTER and _const_atom(phi)
    if isinstance(phi, (And, Star)):
        return in_silstar(phi.left) and in_silstar(phi.right)
    if isinstance(phi, Not):
        return in_silstar(phi.sub)
    return False


def in_rule_body(phi: Formula) -> bool:
    """The positive rule-body fragment: index (dis)equalities, emp, predicate
    atoms, port-function atoms, star, the closure modality and index
    existentials (used by every worked system of definitions)."""
    if isinstance(phi, Emp):
        return True
    if isinstance(phi, (Eq, Neq)):
        return True
    if isinstance(phi, Pred):
        return True
    if isinstance(phi, Atom):
        return isinstance(phi.term, (PortFun, PortConst))
    if isinstance(phi, Star):
        return in_rule_body(phi.left) and in_rule_body(phi.right)
    if isinstance(phi, CloseMod):
        return in_rule_body(phi.sub)
    if isinstance(phi, ExistsIndex):
        return in_rule_body(phi.sub)
    return False
