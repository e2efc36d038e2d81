"""Concrete syntax for formulas: tokenizer, parser and printer.

Grammar (ASCII), precedence from loosest to tightest:

    -*   <   |   <   &   <   *   <   unary ! / <...> / E binder

Atoms:   emp | t = t | t != t | t -o b | t -oE b | t -# b | t -#E b
         | Name(i, ...)
Terms:   IDENT (port constant) | ?IDENT (port variable) | IDENT(i) (port
         function applied to an index variable or identifier literal)
Bool:    ~b | b.b | b+b | parentheses;  b+b is parsed into its derived form.
Binders: `E ?x . phi` (port) and `E i . phi` (index) extend maximally right;
         `E x . phi` binds a port variable when ?x occurs free in phi.
"""

from __future__ import annotations

import re

from .errors import ParseError
from .formula import (
    And, Atom, AtomKind, BAnd, BNot, BTerm, BoolTerm, CloseMod, Emp, Eq,
    ExistsIndex, ExistsPort, Formula, Neq, Not, Or, PortConst, PortFun,
    PortVar, Pred, Star, Term, Wand, bor, free_port_vars,
)

_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<op>-oE(?![A-Za-z0-9_@])|-\#E(?![A-Za-z0-9_@])|-o(?![A-Za-z0-9_@])
            |-\#|-\*|!=|=|~|\.|\+|\*|&|\||!|<|>|\(|\)|,)
      | (?P<pvar>\?[A-Za-z_@][A-Za-z0-9_@]*)
      | (?P<ident>[A-Za-z_@][A-Za-z0-9_@]*)
      | (?P<num>[0-9]+)
    )""",
    re.VERBOSE,
)

_ATOM_OPS = {
    "-o": AtomKind.ALL_INTER,
    "-#": AtomKind.ALL_MIN,
    "-#E": AtomKind.SOME_MIN,
    "-oE": AtomKind.SOME_INTER,
}


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                if text[pos:].strip() == "":
                    break
                raise ParseError("unexpected character %r" % text[pos], *_linecol(text, pos))
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.pos = 0

    def peek(self, ahead: int = 0):
        i = self.pos + ahead
        return self.toks[i] if i < len(self.toks) else (None, None, len(self.text))

    def next(self):
        tok = self.peek()
        if tok[0] is None:
            raise ParseError("unexpected end of input", *_linecol(self.text, len(self.text)))
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, val, where = self.next()
        if val != value:
            raise ParseError("expected %r, found %r" % (value, val), *_linecol(self.text, where))
        return val

    def error(self, message: str):
        _, val, where = self.peek()
        raise ParseError(message + (", found %r" % val if val else ""), *_linecol(self.text, where))


def _linecol(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def parse_formula(text: str) -> Formula:
    toks = _Tokens(text)
    phi = _formula(toks)
    if toks.peek()[0] is not None:
        toks.error("trailing input after formula")
    return phi


def _formula(t: _Tokens) -> Formula:
    return _wand(t)


def _wand(t: _Tokens) -> Formula:
    left = _or(t)
    if t.peek()[1] == "-*":
        t.next()
        return Wand(left, _wand(t))  # right associative
    return left


def _or(t: _Tokens) -> Formula:
    f = _and(t)
    while t.peek()[1] == "|":
        t.next()
        f = Or(f, _and(t))
    return f


def _and(t: _Tokens) -> Formula:
    f = _star(t)
    while t.peek()[1] == "&":
        t.next()
        f = And(f, _star(t))
    return f


def _star(t: _Tokens) -> Formula:
    f = _unary(t)
    while t.peek()[1] == "*":
        t.next()
        f = Star(f, _unary(t))
    return f


def _unary(t: _Tokens) -> Formula:
    kind, val, _ = t.peek()
    if val == "!":
        t.next()
        return Not(_unary(t))
    if val == "<":
        t.next()
        body = _formula(t)
        t.expect(">")
        return CloseMod(body)
    if val == "(":
        t.next()
        body = _formula(t)
        t.expect(")")
        return body
    if kind == "ident" and val == "E":
        t.next()
        bkind, bval, _ = t.next()
        if bkind == "pvar":
            var, is_port = bval[1:], True
        elif bkind in ("ident", "num"):
            var, is_port = bval, None  # sort decided from the body
        else:
            t.error("expected a bound variable after E")
        t.expect(".")
        body = _formula(t)
        if is_port is None:
            is_port = var in free_port_vars(body)
        return ExistsPort(var, body) if is_port else ExistsIndex(var, body)
    return _atom(t)


def _atom(t: _Tokens) -> Formula:
    kind, val, _ = t.peek()
    if kind == "ident" and val == "emp":
        t.next()
        return Emp()
    if kind == "ident" and t.peek(1)[1] == "(":
        # Either a port-function term followed by an atom operator, or a
        # predicate atom; decide after the closing parenthesis.
        save = t.pos
        name = t.next()[1]
        t.next()  # (
        args = []
        if t.peek()[1] != ")":
            args.append(_index_arg(t))
            while t.peek()[1] == ",":
                t.next()
                args.append(_index_arg(t))
        t.expect(")")
        if len(args) == 1 and t.peek()[1] in ("=", "!=", "-o", "-oE", "-#", "-#E"):
            t.pos = save
            return _term_atom(t)
        return Pred(name, tuple(args))
    if kind in ("ident", "pvar", "num"):
        return _term_atom(t)
    t.error("expected a formula")


def _index_arg(t: _Tokens) -> str:
    kind, val, _ = t.next()
    if kind not in ("ident", "num"):
        t.error("expected an index variable or identifier")
    return val


def _term(t: _Tokens) -> Term:
    kind, val, _ = t.next()
    if kind == "pvar":
        return PortVar(val[1:])
    if kind == "ident":
        if t.peek()[1] == "(":
            t.next()
            idx = _index_arg(t)
            t.expect(")")
            return PortFun(val, idx)
        return PortConst(val)
    if kind == "num":
        return PortConst(val)
    t.error("expected a port term")


def _term_atom(t: _Tokens) -> Formula:
    left = _term(t)
    _, op, _ = t.peek()
    if op == "=":
        t.next()
        return Eq(left, _term(t))
    if op == "!=":
        t.next()
        return Neq(left, _term(t))
    if op in _ATOM_OPS:
        t.next()
        return Atom(_ATOM_OPS[op], left, _bool(t))
    t.error("expected an atom operator after the term")


def _bool(t: _Tokens) -> BoolTerm:
    b = _band(t)
    while t.peek()[1] == "+":
        t.next()
        b = bor(b, _band(t))
    return b


def _band(t: _Tokens) -> BoolTerm:
    b = _bunary(t)
    while t.peek()[1] == ".":
        t.next()
        b = BAnd(b, _bunary(t))
    return b


def _bunary(t: _Tokens) -> BoolTerm:
    kind, val, _ = t.peek()
    if val == "~":
        t.next()
        return BNot(_bunary(t))
    if val == "(":
        t.next()
        b = _bool(t)
        t.expect(")")
        return b
    if kind in ("ident", "pvar", "num"):
        return BTerm(_term(t))
    t.error("expected a boolean term")


# ---------------------------------------------------------------------------
# Printer (canonical form; parse(print(phi)) == phi)

_PREC = {Wand: 1, Or: 2, And: 3, Star: 4, Not: 5}


def print_term(term: Term) -> str:
    if isinstance(term, PortConst):
        return term.name
    if isinstance(term, PortVar):
        return "?" + term.name
    return "%s(%s)" % (term.fun, term.index)


def print_bool(b: BoolTerm, prec: int = 0) -> str:
    if isinstance(b, BTerm):
        return print_term(b.term)
    if isinstance(b, BNot):
        return "~" + print_bool(b.sub, 3)
    body = "%s.%s" % (print_bool(b.left, 2), print_bool(b.right, 3))
    return "(" + body + ")" if prec > 2 else body


def print_formula(phi: Formula, prec: int = 0) -> str:
    if isinstance(phi, Emp):
        return "emp"
    if isinstance(phi, Eq):
        return "%s = %s" % (print_term(phi.left), print_term(phi.right))
    if isinstance(phi, Neq):
        return "%s != %s" % (print_term(phi.left), print_term(phi.right))
    if isinstance(phi, Atom):
        return "%s %s %s" % (print_term(phi.term), phi.kind.value, print_bool(phi.bterm))
    if isinstance(phi, Pred):
        return "%s(%s)" % (phi.name, ",".join(phi.args))
    if isinstance(phi, CloseMod):
        return "< %s >" % print_formula(phi.sub)
    if isinstance(phi, Not):
        return "!" + print_formula(phi.sub, 5)
    if isinstance(phi, (ExistsPort, ExistsIndex)):
        var = "?" + phi.var if isinstance(phi, ExistsPort) else phi.var
        body = "E %s . %s" % (var, print_formula(phi.sub, 1))
        return "(" + body + ")" if prec > 1 else body
    for cls, op in ((Wand, "-*"), (Or, "|"), (And, "&"), (Star, "*")):
        if isinstance(phi, cls):
            level = _PREC[cls]
            if cls is Wand:  # right associative
                body = "%s %s %s" % (
                    print_formula(phi.left, level + 1), op, print_formula(phi.right, level))
            else:
                body = "%s %s %s" % (
                    print_formula(phi.left, level), op, print_formula(phi.right, level + 1))
            return "(" + body + ")" if prec > level else body
    raise TypeError("unknown formula node %r" % (phi,))


# Atoms sit above every binary operator, so they never need parentheses;
# any level >= 5 expression is self-delimiting except plain negation.
