"""Quantified boolean formulas.

A small QBF layer: a structural AST (non-prenex, sharing allowed), direct
evaluation, an expansion-based complete solver with memoization, QDIMACS
export via prenexing plus structural clausification, a QDIMACS parser, an
internal prenex-CNF solver used to double-check exported files, and a hook
for piping QDIMACS to an external solver executable.
"""

from __future__ import annotations

import itertools
import subprocess
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .errors import ParseError, ResourceLimit, UnassignedFree


@dataclass(frozen=True)
class QVar:
    name: str


@dataclass(frozen=True)
class QConst:
    value: bool


@dataclass(frozen=True)
class QNot:
    sub: "Qbf"


@dataclass(frozen=True)
class QAnd:
    args: tuple


@dataclass(frozen=True)
class QOr:
    args: tuple


@dataclass(frozen=True)
class QImplies:
    left: "Qbf"
    right: "Qbf"


@dataclass(frozen=True)
class QIff:
    left: "Qbf"
    right: "Qbf"


@dataclass(frozen=True)
class QExists:
    var: str
    sub: "Qbf"


@dataclass(frozen=True)
class QForall:
    var: str
    sub: "Qbf"


Qbf = Union[QVar, QConst, QNot, QAnd, QOr, QImplies, QIff, QExists, QForall]

TRUE = QConst(True)
FALSE = QConst(False)


def qand(*args: Qbf) -> Qbf:
    flat = []
    for a in args:
        if isinstance(a, QConst):
            if not a.value:
                return FALSE
            continue
        if isinstance(a, QAnd):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else QAnd(tuple(flat))


def qor(*args: Qbf) -> Qbf:
    flat = []
    for a in args:
        if isinstance(a, QConst):
            if a.value:
                return TRUE
            continue
        if isinstance(a, QOr):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else QOr(tuple(flat))


def qnot(a: Qbf) -> Qbf:
    if isinstance(a, QConst):
        return QConst(not a.value)
    if isinstance(a, QNot):
        return a.sub
    return QNot(a)


def qimplies(a: Qbf, b: Qbf) -> Qbf:
    if isinstance(a, QConst):
        return b if a.value else TRUE
    if isinstance(b, QConst):
        return TRUE if b.value else qnot(a)
    return QImplies(a, b)


def qexists(variables: Iterable[str], body: Qbf) -> Qbf:
    for v in reversed(list(variables)):
        body = QExists(v, body)
    return body


def qforall(variables: Iterable[str], body: Qbf) -> Qbf:
    for v in reversed(list(variables)):
        body = QForall(v, body)
    return body


def free_vars(f: Qbf, _cache: Optional[dict] = None) -> frozenset:
    if _cache is None:
        _cache = {}
    hit = _cache.get(id(f))
    if hit is not None:
        return hit
    if isinstance(f, QVar):
        out = frozenset([f.name])
    elif isinstance(f, QConst):
        out = frozenset()
    elif isinstance(f, QNot):
        out = free_vars(f.sub, _cache)
    elif isinstance(f, (QAnd, QOr)):
        out = frozenset().union(*(free_vars(a, _cache) for a in f.args)) if f.args else frozenset()
    elif isinstance(f, (QImplies, QIff)):
        out = free_vars(f.left, _cache) | free_vars(f.right, _cache)
    else:
        out = free_vars(f.sub, _cache) - {f.var}
    _cache[id(f)] = out
    return out


# ---------------------------------------------------------------------------
# Direct evaluation


def qbf_eval(f: Qbf, asg: dict) -> bool:
    """Truth value under a total assignment of the free variables."""
    missing = free_vars(f) - set(asg)
    if missing:
        raise UnassignedFree("unassigned free variables: %s" % sorted(missing))
    return _eval(f, dict(asg))


def _eval(f: Qbf, asg: dict) -> bool:
    if isinstance(f, QVar):
        return asg[f.name]
    if isinstance(f, QConst):
        return f.value
    if isinstance(f, QNot):
        return not _eval(f.sub, asg)
    if isinstance(f, QAnd):
        return all(_eval(a, asg) for a in f.args)
    if isinstance(f, QOr):
        return any(_eval(a, asg) for a in f.args)
    if isinstance(f, QImplies):
        return (not _eval(f.left, asg)) or _eval(f.right, asg)
    if isinstance(f, QIff):
        return _eval(f.left, asg) == _eval(f.right, asg)
    if isinstance(f, (QExists, QForall)):
        want = isinstance(f, QExists)
        prev = asg.get(f.var, _MISSING)
        out = not want
        for v in (True, False):
            asg[f.var] = v
            if _eval(f.sub, asg) == want:
                out = want
                break
        if prev is _MISSING:
            del asg[f.var]
        else:
            asg[f.var] = prev
        return out
    raise TypeError("unknown QBF node %r" % (f,))


_MISSING = object()


# ---------------------------------------------------------------------------
# Expansion-based solver


class _Solver:
    def __init__(self, node_cap: int):
        self.node_cap = node_cap
        self.visited = 0
        self.memo: dict = {}
        self.fv_cache: dict = {}

    def solve(self, f: Qbf, asg: dict) -> bool:
        self.visited += 1
        if self.visited > self.node_cap:
            raise ResourceLimit("QBF solver exceeded %d nodes" % self.node_cap)
        if isinstance(f, QVar):
            return asg[f.name]
        if isinstance(f, QConst):
            return f.value
        fv = free_vars(f, self.fv_cache)
        key = (id(f), tuple(asg[v] for v in sorted(fv)))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if isinstance(f, QNot):
            out = not self.solve(f.sub, asg)
        elif isinstance(f, QAnd):
            out = all(self.solve(a, asg) for a in f.args)
        elif isinstance(f, QOr):
            out = any(self.solve(a, asg) for a in f.args)
        elif isinstance(f, QImplies):
            out = (not self.solve(f.left, asg)) or self.solve(f.right, asg)
        elif isinstance(f, QIff):
            out = self.solve(f.left, asg) == self.solve(f.right, asg)
        elif isinstance(f, (QExists, QForall)):
            want = isinstance(f, QExists)
            out = not want
            for v in (True, False):
                asg2 = dict(asg)
                asg2[f.var] = v
                if self.solve(f.sub, asg2) == want:
                    out = want
                    break
        else:
            raise TypeError("unknown QBF node %r" % (f,))
        self.memo[key] = out
        return out


def qbf_solve(f: Qbf, node_cap: int = 2_000_000) -> tuple[bool, Optional[dict]]:
    """Truth of the existential closure over the free variables.

    When satisfiable and the formula is closed after that closure, returns a
    witness assignment for the free variables plus any leading existential
    block; the witness passes the substitution check by construction.
    """
    solver = _Solver(node_cap)
    # search the outer existential assignment (free variables plus any
    # leading existential block) depth-first
    free = sorted(free_vars(f))
    lead = _leading_exists(f)
    names = free + [v for v in lead if v not in free]
    body = _strip_exists(f, len(lead))

    def search(i: int, asg: dict) -> Optional[dict]:
        if i == len(names):
            return dict(asg) if solver.solve(body, asg) else None
        for v in (True, False):
            asg[names[i]] = v
            got = search(i + 1, asg)
            if got is not None:
                return got
        del asg[names[i]]
        return None

    witness = search(0, {})
    return (witness is not None), witness


def _leading_exists(f: Qbf) -> list[str]:
    out = []
    while isinstance(f, QExists):
        out.append(f.var)
        f = f.sub
    return out


def _strip_exists(f: Qbf, n: int) -> Qbf:
    for _ in range(n):
        f = f.sub
    return f


# ---------------------------------------------------------------------------
# Prenexing and QDIMACS export


def _rewrite_arrows(f: Qbf) -> Qbf:
    if isinstance(f, (QVar, QConst)):
        return f
    if isinstance(f, QNot):
        return qnot(_rewrite_arrows(f.sub))
    if isinstance(f, QAnd):
        return qand(*(_rewrite_arrows(a) for a in f.args))
    if isinstance(f, QOr):
        return qor(*(_rewrite_arrows(a) for a in f.args))
    if isinstance(f, QImplies):
        return qor(qnot(_rewrite_arrows(f.left)), _rewrite_arrows(f.right))
    if isinstance(f, QIff):
        l, r = _rewrite_arrows(f.left), _rewrite_arrows(f.right)
        return qand(qor(qnot(l), r), qor(qnot(r), l))
    if isinstance(f, QExists):
        return QExists(f.var, _rewrite_arrows(f.sub))
    return QForall(f.var, _rewrite_arrows(f.sub))


def _prenex(f: Qbf, rename: dict, counter: itertools.count, positive: bool):
    """Returns (prefix, matrix) with bound variables renamed apart.

    prefix entries are ('e'|'a', fresh-name); negation flips quantifiers.
    """
    if isinstance(f, QVar):
        return [], QVar(rename.get(f.name, f.name))
    if isinstance(f, QConst):
        return [], f
    if isinstance(f, QNot):
        prefix, matrix = _prenex(f.sub, rename, counter, not positive)
        return prefix, qnot(matrix)
    if isinstance(f, (QAnd, QOr)):
        prefix, parts = [], []
        for a in f.args:
            p, m = _prenex(a, rename, counter, positive)
            prefix.extend(p)
            parts.append(m)
        return prefix, (qand(*parts) if isinstance(f, QAnd) else qor(*parts))
    if isinstance(f, (QExists, QForall)):
        fresh = "%s#%d" % (f.var, next(counter))
        inner_rename = dict(rename)
        inner_rename[f.var] = fresh
        kind = "e" if isinstance(f, QExists) else "a"
        if not positive:
            kind = "a" if kind == "e" else "e"
        prefix, matrix = _prenex(f.sub, inner_rename, counter, positive)
        return [(kind, fresh)] + prefix, matrix
    raise TypeError("arrows must be rewritten before prenexing")


def _tseitin(matrix: Qbf, numbering: dict, next_var: list) -> tuple[int, list]:
    """Structural clausification; returns (root literal, clauses)."""
    clauses: list = []

    def lit_of(g: Qbf) -> int:
        if isinstance(g, QVar):
            return numbering[g.name]
        if isinstance(g, QNot):
            return -lit_of(g.sub)
        if isinstance(g, QConst):
            aux = next_var[0]
            next_var[0] += 1
            clauses.append([aux] if g.value else [-aux])
            return aux
        args = [lit_of(a) for a in g.args]
        aux = next_var[0]
        next_var[0] += 1
        if isinstance(g, QAnd):
            for a in args:
                clauses.append([-aux, a])
            clauses.append([aux] + [-a for a in args])
        else:
            for a in args:
                clauses.append([-a, aux])
            clauses.append([-aux] + args)
        return aux

    return lit_of(matrix), clauses


def to_qdimacs(f: Qbf) -> str:
    """Prenex + clausify; truth-equivalent to the existential closure of f
    over the auxiliary variables, with deterministic numbering."""
    g = _rewrite_arrows(f)
    prefix, matrix = _prenex(g, {}, itertools.count(), True)

    numbering: dict = {}
    order: list = []

    def visit(h: Qbf):
        if isinstance(h, QVar):
            if h.name not in numbering:
                numbering[h.name] = 0
                order.append(h.name)
        elif isinstance(h, QNot):
            visit(h.sub)
        elif isinstance(h, (QAnd, QOr)):
            for a in h.args:
                visit(a)

    # free variables in first-use order, then the prefix variables
    bound = {v for _, v in prefix}
    visit(matrix)
    free = [v for v in order if v not in bound]
    numbering = {}
    n = 1
    for v in free:
        numbering[v] = n
        n += 1
    for _, v in prefix:
        numbering[v] = n
        n += 1

    if isinstance(matrix, QConst):
        if matrix.value:
            return "p cnf 1 0\n"
        return "p cnf 1 1\n0\n"

    next_var = [n]
    root, clauses = _tseitin(matrix, numbering, next_var)
    clauses.append([root])
    total = next_var[0] - 1

    blocks: list[tuple[str, list[int]]] = []
    if free:
        blocks.append(("e", [numbering[v] for v in free]))
    for kind, v in prefix:
        if blocks and blocks[-1][0] == kind:
            blocks[-1][1].append(numbering[v])
        else:
            blocks.append((kind, [numbering[v]]))
    aux = list(range(n, next_var[0]))
    if aux:
        if blocks and blocks[-1][0] == "e":
            blocks[-1][1].extend(aux)
        else:
            blocks.append(("e", aux))

    lines = ["p cnf %d %d" % (total, len(clauses))]
    for kind, vs in blocks:
        lines.append("%s %s 0" % (kind, " ".join(map(str, vs))))
    for c in clauses:
        lines.append(" ".join(map(str, c)) + " 0")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# QDIMACS parsing and a small prenex-CNF solver


def parse_qdimacs(text: str) -> tuple[list[tuple[str, list[int]]], list[list[int]], int]:
    """Returns (prefix blocks, clauses, variable count)."""
    prefix: list = []
    clauses: list = []
    nvars = 0
    seen_clause = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError("malformed problem line: %r" % line)
            nvars = int(parts[2])
            continue
        if line[0] in "ae":
            if seen_clause:
                raise ParseError("quantifier line after clauses")
            nums = [int(x) for x in line[1:].split()]
            if nums and nums[-1] == 0:
                nums = nums[:-1]
            prefix.append((line[0], nums))
            continue
        nums = [int(x) for x in line.split()]
        if nums and nums[-1] == 0:
            nums = nums[:-1]
        clauses.append(nums)
        seen_clause = True
    return prefix, clauses, nvars


def qdimacs_to_qbf(text: str) -> Qbf:
    prefix, clauses, nvars = parse_qdimacs(text)
    matrix = qand(*(qor(*(QVar("v%d" % abs(l)) if l > 0 else qnot(QVar("v%d" % abs(l)))
                          for l in c)) for c in clauses))
    quantified = set()
    for kind, vs in reversed(prefix):
        quantified.update(vs)
        names = ["v%d" % v for v in vs]
        matrix = qexists(names, matrix) if kind == "e" else qforall(names, matrix)
    return matrix


def solve_qdimacs(text: str) -> bool:
    """Internal decision for prenex CNF: recursive expansion over the prefix.

    Unit propagation applies to existential literals only; a unit clause on
    a universal literal falsifies the branch (universal reduction to the
    empty clause).  Unquantified variables are treated as an outermost
    existential block.
    """
    prefix, clauses, nvars = parse_qdimacs(text)
    quantified = {v for _, vs in prefix for v in vs}
    free = [v for v in range(1, nvars + 1) if v not in quantified]
    order: list[tuple[str, int]] = [("e", v) for v in free]
    for kind, vs in prefix:
        order.extend((kind, v) for v in vs)
    kind_of = {v: k for k, v in order}

    def simplify(cls: list[list[int]], lit: int):
        out = []
        for c in cls:
            if lit in c:
                continue
            out.append([l for l in c if l != -lit])
        return out

    def propagate(cls):
        while True:
            cls = [c for c in cls if not any(-l in c for l in c)]
            if any(not c for c in cls):
                return None
            units = {c[0] for c in cls if len(c) == 1}
            if any(kind_of.get(abs(u), "e") == "a" for u in units):
                return None
            e_units = [u for u in units if kind_of.get(abs(u), "e") == "e"]
            if not e_units:
                return cls
            cls = simplify(cls, e_units[0])

    def rec(i: int, cls) -> bool:
        cls = propagate(cls)
        if cls is None:
            return False
        if not cls:
            return True
        if i == len(order):
            return False  # leftover clauses over no remaining variables
        kind, v = order[i]
        remaining = {abs(l) for c in cls for l in c}
        if v not in remaining:
            return rec(i + 1, cls)
        a = rec(i + 1, simplify(cls, v))
        if kind == "e" and a:
            return True
        if kind == "a" and not a:
            return False
        return rec(i + 1, simplify(cls, -v))

    return rec(0, clauses)


def run_external_qbf(executable: str, qdimacs: str) -> bool:
    """Pipe QDIMACS to an external solver; understands `s cnf 1/0` output
    and the 10/20 exit-code convention."""
    proc = subprocess.run(
        [executable], input=qdimacs, capture_output=True, text=True
    )
    for line in proc.stdout.splitlines():
        line = line.strip().lower()
        if line.startswith("s cnf"):
            return line.split()[2] == "1"
        if line in ("s sat", "s true"):
            return True
        if line in ("s unsat", "s false"):
            return False
    if proc.returncode == 10:
        return True
    if proc.returncode == 20:
        return False
    raise ParseError("could not interpret external solver output")
