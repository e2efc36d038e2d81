"""Parametric architectures: recursive definition systems and unfolding.

A system declares predicates over component identifiers whose rule bodies
live in the positive rule fragment (index (dis)equalities, emp, predicate
atoms, port-function atoms, star, the closure modality, index
existentials).  Bounded unfolding instantiates index variables over a
finite identifier universe and produces ground heaps: star-compositions of
ground atoms over materialized ports ``fun@id``, possibly under pending
closure wrappers.

The unfolding depth counts applications of rules for recursive predicates
(those on a cycle of the call graph) along each derivation branch;
non-recursive predicates expand freely since they cannot loop.  Depth zero
performs no expansion at all.  Index equalities act as instantiation
filters contributing the empty architecture to the composition; the pure
reading (equalities hold in any architecture) is available via
``pure_eq``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .arch import Architecture, EMPTY, closure_of, compose, mask_of
from .errors import (
    ArityMismatch, BudgetUnsupported, NegativePolarity, ParseError,
    UnknownPredicate,
)
from .formula import (
    And, Atom, AtomKind, BAnd, BNot, BTerm, BoolTerm, CloseMod, Emp, Eq,
    ExistsIndex, ExistsPort, Formula, Neq, Not, Or, PortConst, PortFun,
    PortVar, Pred, Star, Term, Wand, in_rule_body,
)
from .parser import parse_formula, print_formula
from .semantics import EnumBudget, Valuation, check, eval_bterm, is_minimal_model


@dataclass(frozen=True)
class Rule:
    head: str
    params: tuple[str, ...]
    body: Formula


@dataclass(frozen=True)
class DefinitionSystem:
    rules: tuple[Rule, ...]

    @property
    def predicates(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rules:
            out.setdefault(r.head, len(r.params))
        return out

    def bodies(self, name: str) -> list[Rule]:
        return [r for r in self.rules if r.head == name]

    def port_functions(self) -> frozenset[str]:
        out: set[str] = set()
        for r in self.rules:
            for f in _walk(r.body):
                if isinstance(f, Atom):
                    for t in _atom_terms(f):
                        if isinstance(t, PortFun):
                            out.add(t.fun)
        return frozenset(out)

    def recursive_predicates(self) -> frozenset[str]:
        """Predicates on a cycle of the call graph (SCC with an edge)."""
        calls: dict[str, set[str]] = {name: set() for name in self.predicates}
        for r in self.rules:
            for f in _walk(r.body):
                if isinstance(f, Pred):
                    calls[r.head].add(f.name)

        recursive = set()
        for name in calls:
            # reachable-from-self search
            seen, stack = set(), [c for c in calls[name]]
            while stack:
                cur = stack.pop()
                if cur == name:
                    recursive.add(name)
                    break
                if cur in seen:
                    continue
                seen.add(cur)
                stack.extend(calls.get(cur, ()))
        return frozenset(recursive)


def _walk(phi: Formula) -> Iterator[Formula]:
    from .formula import subformulas

    return subformulas(phi)


def _atom_terms(f: Atom) -> Iterator[Term]:
    yield f.term
    stack = [f.bterm]
    while stack:
        b = stack.pop()
        if isinstance(b, BTerm):
            yield b.term
        elif isinstance(b, BNot):
            stack.append(b.sub)
        else:
            stack.extend([b.left, b.right])


# ---------------------------------------------------------------------------
# Parsing:  pred Name(i,j) := body | body | ... ;


def _split_top(text: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "(<":
            depth += 1
        elif ch in ")>":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


_PRED_RE = re.compile(
    r"pred\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(([^)]*)\)\s*:=(.*?);", re.DOTALL
)


def parse_system(text: str) -> DefinitionSystem:
    text = re.sub(r"//[^\n]*", "", text)  # '#' belongs to the atom syntax
    rules: list[Rule] = []
    consumed = 0
    for m in _PRED_RE.finditer(text):
        if text[consumed:m.start()].strip():
            raise ParseError("unexpected text before a predicate definition")
        consumed = m.end()
        name = m.group(1)
        params = tuple(p.strip() for p in m.group(2).split(",") if p.strip())
        for body_text in _split_top(m.group(3), "|"):
            body = parse_formula(body_text)
            rules.append(Rule(name, params, body))
    if text[consumed:].strip():
        raise ParseError("trailing text after the last definition")
    if not rules:
        raise ParseError("no predicate definitions found")
    sys = DefinitionSystem(tuple(rules))
    _validate(sys)
    return sys


def _validate(sys: DefinitionSystem) -> None:
    arities = sys.predicates
    for r in sys.rules:
        if not in_rule_body(r.body):
            for f in _walk(r.body):
                if isinstance(f, (Not, Wand, Or)):
                    raise NegativePolarity(
                        "rule for %s uses a connective outside the positive "
                        "rule fragment" % r.head
                    )
            raise NegativePolarity(
                "rule body for %s is outside the rule fragment" % r.head
            )
        for f in _walk(r.body):
            if isinstance(f, Pred):
                if f.name not in arities:
                    raise UnknownPredicate("undefined predicate %s" % f.name)
                if len(f.args) != arities[f.name]:
                    raise ArityMismatch(
                        "%s expects %d arguments, got %d"
                        % (f.name, arities[f.name], len(f.args))
                    )


# ---------------------------------------------------------------------------
# Ground heaps


@dataclass(frozen=True)
class GroundHeap:
    """Canonical star-composition: sorted atoms and pending closures."""

    atoms: tuple[Formula, ...]
    closures: tuple["GroundHeap", ...] = ()
    pure_top: bool = False  # a top conjunct from a pure-equality reading

    @staticmethod
    def make(atoms: Iterable[Formula], closures: Iterable["GroundHeap"] = (),
             pure_top: bool = False) -> "GroundHeap":
        return GroundHeap(
            tuple(sorted(atoms, key=print_formula)),
            tuple(sorted(closures, key=lambda h: h.sort_key())),
            pure_top,
        )

    def sort_key(self):
        return (
            tuple(print_formula(a) for a in self.atoms),
            tuple(c.sort_key() for c in self.closures),
            self.pure_top,
        )

    def merge(self, other: "GroundHeap") -> "GroundHeap":
        return GroundHeap.make(
            self.atoms + other.atoms,
            self.closures + other.closures,
            self.pure_top or other.pure_top,
        )

    def to_formula(self) -> Formula:
        from .formula import TOP

        parts: list[Formula] = list(self.atoms)
        parts += [CloseMod(c.to_formula()) for c in self.closures]
        if self.pure_top:
            parts.append(TOP)
        if not parts:
            return Emp()
        out = parts[0]
        for p in parts[1:]:
            out = Star(out, p)
        return out

    def ports(self) -> frozenset[str]:
        from .formula import ports_of

        return ports_of(self.to_formula())

    def __str__(self) -> str:
        return print_formula(self.to_formula())


EMPTY_HEAP = GroundHeap.make(())


def _resolve_index(term: str, env: dict[str, str], ids: frozenset[str]) -> Optional[str]:
    if term in env:
        return env[term]
    if term in ids:
        return term
    return None


def _ground_term(t: Term, env: dict[str, str], ids: frozenset[str]) -> Optional[Term]:
    if isinstance(t, PortFun):
        ident = _resolve_index(t.index, env, ids)
        if ident is None:
            return None
        return PortConst("%s@%s" % (t.fun, ident))
    return t


def _ground_bterm(b: BoolTerm, env, ids) -> Optional[BoolTerm]:
    if isinstance(b, BTerm):
        t = _ground_term(b.term, env, ids)
        return None if t is None else BTerm(t)
    if isinstance(b, BNot):
        s = _ground_bterm(b.sub, env, ids)
        return None if s is None else BNot(s)
    l = _ground_bterm(b.left, env, ids)
    r = _ground_bterm(b.right, env, ids)
    return None if l is None or r is None else BAnd(l, r)


def unfold(
    sys: DefinitionSystem,
    atom: Pred,
    depth: int,
    ids: Iterable[str],
    pure_eq: bool = False,
) -> set[GroundHeap]:
    """All ground heaps derivable with at most ``depth`` applications of
    recursive-predicate rules per branch; pending predicates are pruned."""
    universe = frozenset(str(i) for i in ids)
    arities = sys.predicates
    if atom.name not in arities:
        raise UnknownPredicate("undefined predicate %s" % atom.name)
    if len(atom.args) != arities[atom.name]:
        raise ArityMismatch(
            "%s expects %d arguments, got %d"
            % (atom.name, arities[atom.name], len(atom.args))
        )
    for a in atom.args:
        if str(a) not in universe:
            raise BudgetUnsupported("atom identifier %r outside the universe" % (a,))
    recursive = sys.recursive_predicates()
    memo: dict = {}

    def expand(phi: Formula, env: dict[str, str], budget: int) -> set[GroundHeap]:
        if isinstance(phi, Emp):
            return {EMPTY_HEAP}
        if isinstance(phi, (Eq, Neq)):
            l = _resolve_index(_index_name(phi.left), env, universe)
            r = _resolve_index(_index_name(phi.right), env, universe)
            if l is None or r is None:
                return set()
            holds = (l == r) if isinstance(phi, Eq) else (l != r)
            if not holds:
                return set()
            return {GroundHeap.make((), pure_top=pure_eq)} if pure_eq else {EMPTY_HEAP}
        if isinstance(phi, Atom):
            t = _ground_term(phi.term, env, universe)
            b = _ground_bterm(phi.bterm, env, universe)
            if t is None or b is None:
                return set()
            return {GroundHeap.make([Atom(phi.kind, t, b)])}
        if isinstance(phi, Star):
            out = set()
            for h1 in expand(phi.left, env, budget):
                for h2 in expand(phi.right, env, budget):
                    out.add(h1.merge(h2))
            return out
        if isinstance(phi, CloseMod):
            return {
                GroundHeap.make((), closures=[h])
                for h in expand(phi.sub, env, budget)
            }
        if isinstance(phi, ExistsIndex):
            out = set()
            for ident in sorted(universe):
                env2 = dict(env)
                env2[phi.var] = ident
                out |= expand(phi.sub, env2, budget)
            return out
        if isinstance(phi, Pred):
            args = tuple(_resolve_index(a, env, universe) for a in phi.args)
            if any(a is None for a in args):
                return set()
            cost = 1 if phi.name in recursive else 0
            if depth <= 0 or budget - cost < 0:
                return set()
            key = (phi.name, args, budget - cost)
            hit = memo.get(key)
            if hit is None:
                hit = set()
                for rule in sys.bodies(phi.name):
                    env2 = dict(zip(rule.params, args))
                    hit |= expand(rule.body, env2, budget - cost)
                memo[key] = hit
            return hit
        raise NegativePolarity("connective outside the rule fragment: %r" % (phi,))

    env0 = {}
    return expand(atom, env0, depth)


def _index_name(t: Term) -> str:
    # rule-level (dis)equalities compare index terms written as identifiers
    if isinstance(t, PortConst):
        return t.name
    if isinstance(t, PortVar):
        return t.name
    raise NegativePolarity("equality over non-index terms in a rule body")


# ---------------------------------------------------------------------------
# Models of ground heaps


def _atom_models(
    atom: Atom, heap_ports: tuple[str, ...], cap: int
) -> list[Architecture]:
    """Canonical single-port architectures constrained by one ground atom:
    interactions range over atom-satisfying candidates built from the
    heap's ports plus one open remainder."""
    port = atom.term.name
    others = [p for p in heap_ports if p != port]
    tb = BAnd(BTerm(PortConst(port)), atom.bterm)
    candidates = []
    for r in range(len(others) + 1):
        for rest in itertools.combinations(others, r):
            base = frozenset(rest) | {port}
            for flagged in (False, True):
                i = base | {"@o"} if flagged else base
                ok = (
                    is_minimal_model(i, tb)
                    if atom.kind in (AtomKind.ALL_MIN, AtomKind.SOME_MIN)
                    else eval_bterm(i, tb)
                )
                if ok:
                    candidates.append(i)
    out = []
    lo = 0 if atom.kind in (AtomKind.ALL_INTER, AtomKind.ALL_MIN) else 1
    for r in range(lo, cap + 1):
        for chosen in itertools.combinations(candidates, r):
            out.append(Architecture.make({port}, chosen))
    return out


def models_of(
    heap: GroundHeap, budget: EnumBudget | None = None, per_atom_cap: int = 2
) -> Iterator[Architecture]:
    """Canonical models of a ground heap: per-atom architectures composed
    left to right with deduplication; closure wrappers apply the closure to
    the inner models."""
    if heap.pure_top:
        raise BudgetUnsupported(
            "pure-equality heaps have unconstrained conjuncts; use the "
            "model checker instead"
        )
    heap_ports = tuple(sorted(heap.ports()))
    parts: list[list[Architecture]] = []
    for atom in heap.atoms:
        parts.append(_atom_models(atom, heap_ports, per_atom_cap))
    for inner in heap.closures:
        inner_models = set()
        for m in models_of(inner, budget, per_atom_cap):
            inner_models.add(closure_of(m))
        parts.append(sorted(inner_models, key=Architecture.sort_key))
    current: set[Architecture] = {EMPTY}
    for block in parts:
        nxt = set()
        for left in current:
            for right in block:
                if left.dom_mask & right.dom_mask:
                    continue
                nxt.add(compose(left, right))
        current = nxt
        if not current:
            return
    yield from sorted(current, key=Architecture.sort_key)


def check_param(
    a: Architecture,
    atom: Pred,
    sys: DefinitionSystem,
    depth: int,
    ids: Iterable[str],
    budget: EnumBudget | None = None,
    pure_eq: bool = False,
) -> bool:
    """Some unfolding of the atom is satisfied by the architecture."""
    for heap in sorted(unfold(sys, atom, depth, ids, pure_eq), key=GroundHeap.sort_key):
        phi = heap.to_formula()
        b = budget
        if b is None:
            from .formula import ports_of

            b = EnumBudget.for_ports(ports_of(phi) | a.domain)
        if check(a, phi, budget=b):
            return True
    return False


SEMAPHORE_TASKS = """
pred Semaphore(i) := E j . p(i) -# t(j) * v(i) -# l(j) ;
pred Task(i,j) := t(i) -oE p(j) * l(i) -oE v(j) ;
pred Sys(i,j,k) := i = k * Semaphore(j) | E l . Task(i,j) * Sys(l,j,k) ;
"""

CONTROLLER_SLAVES = """
pred Controller(i,j) := p(i) -o q(j) ;
pred Slave(i,j) := q(i) -o p(j) ;
pred SysRec(i,j,k) := i = k * Slave(k,j) * Controller(j,k)
                    | E l . Slave(i,j) * SysRec(l,j,k) ;
pred Sys() := E i . E j . E k . < SysRec(i,j,k) > ;
"""
