"""Dynamic reconfiguration: map layer, operational steps, local reasoning.

State is a triple of a store (node variables to nodes), a finite
deployment (component identifiers to map nodes), and a map assigning each
allocated node a k-tuple of successor nodes, with a distinguished ``nil``
outside the map.  Reconfiguration actions update the state operationally;
their axiomatic counterpart is a set of local Hoare axioms over a
separation logic of maps, extended to arbitrary frames by the frame rule.
Triples are validated operationally over budgeted state universes, and
deployment/synchronization rules connect the map layer with an interaction
architecture.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .arch import Architecture
from .errors import (
    BudgetUnsupported, ModifiedVarInFrame, Stuck, UnknownPredicate,
)
from .formula import Formula, PortFun
from .semantics import EnumBudget, check

NIL = "nil"


@dataclass(frozen=True)
class MapState:
    arity: int
    cells: tuple[tuple[str, tuple[str, ...]], ...]  # sorted (node, image)

    @staticmethod
    def make(arity: int, cells: dict[str, tuple[str, ...]] | None = None) -> "MapState":
        cells = cells or {}
        for node, image in cells.items():
            if node == NIL:
                raise ValueError("nil cannot be allocated")
            if len(image) != arity:
                raise ValueError("image of %s has arity %d, expected %d"
                                 % (node, len(image), arity))
        return MapState(arity, tuple(sorted(cells.items())))

    def as_dict(self) -> dict[str, tuple[str, ...]]:
        return dict(self.cells)

    @property
    def domain(self) -> frozenset[str]:
        return frozenset(n for n, _ in self.cells)

    def nodes(self) -> frozenset[str]:
        out = {n for n, _ in self.cells}
        for _, image in self.cells:
            out.update(image)
        return frozenset(out) | {NIL}


@dataclass(frozen=True)
class ReconfigState:
    store: tuple[tuple[str, str], ...]
    deploy: tuple[tuple[str, str], ...]
    mapstate: MapState

    @staticmethod
    def make(store: dict | None = None, deploy: dict | None = None,
             mapstate: MapState | None = None, arity: int = 1) -> "ReconfigState":
        return ReconfigState(
            tuple(sorted((store or {}).items())),
            tuple(sorted((deploy or {}).items())),
            mapstate if mapstate is not None else MapState.make(arity),
        )

    @property
    def sigma(self) -> dict[str, str]:
        return dict(self.store)

    @property
    def delta(self) -> dict[str, str]:
        return dict(self.deploy)

    def nodes(self) -> frozenset[str]:
        out = set(self.mapstate.nodes())
        out.update(v for _, v in self.store)
        out.update(v for _, v in self.deploy)
        return frozenset(out)


# ---------------------------------------------------------------------------
# Actions and operational steps


@dataclass(frozen=True)
class SetField:
    var: str
    index: int  # 1-based field
    term: str  # node variable or nil


@dataclass(frozen=True)
class Deploy:
    ident: str
    var: str


@dataclass(frozen=True)
class Free:
    var: str


@dataclass(frozen=True)
class New:
    var: str


@dataclass(frozen=True)
class Assign:
    var: str
    term: str


@dataclass(frozen=True)
class Lookup:
    var: str
    src: str
    index: int


Action = Union[SetField, Deploy, Free, New, Assign, Lookup]


def _eval_term(sigma: dict[str, str], t: str, rule: str) -> str:
    if t == NIL:
        return NIL
    if t not in sigma:
        raise Stuck(rule, "variable %s has no value in the store" % t)
    return sigma[t]


def fresh_node(m: MapState) -> str:
    i = 1
    used = m.domain
    while "v%d" % i in used:
        i += 1
    return "v%d" % i


def step(s: ReconfigState, act: Action) -> ReconfigState:
    sigma = s.sigma
    delta = s.delta
    cells = s.mapstate.as_dict()
    k = s.mapstate.arity
    if isinstance(act, SetField):
        node = _eval_term(sigma, act.var, "n.l = t")
        if node not in cells:
            raise Stuck("n.l = t", "node %s is not in the map domain" % node)
        value = _eval_term(sigma, act.term, "n.l = t")
        image = list(cells[node])
        image[act.index - 1] = value
        cells[node] = tuple(image)
        return ReconfigState.make(sigma, delta, MapState.make(k, cells))
    if isinstance(act, Deploy):
        node = _eval_term(sigma, act.var, "deploy(i,n)")
        delta[act.ident] = node
        return ReconfigState.make(sigma, delta, s.mapstate)
    if isinstance(act, Free):
        node = _eval_term(sigma, act.var, "free(n)")
        if node not in cells:
            raise Stuck("free(n)", "node %s is not in the map domain" % node)
        del cells[node]
        return ReconfigState.make(sigma, delta, MapState.make(k, cells))
    if isinstance(act, New):
        v = fresh_node(s.mapstate)
        cells[v] = tuple([NIL] * k)
        sigma[act.var] = v
        return ReconfigState.make(sigma, delta, MapState.make(k, cells))
    if isinstance(act, Assign):
        sigma[act.var] = _eval_term(sigma, act.term, "n = t")
        return ReconfigState.make(sigma, delta, s.mapstate)
    if isinstance(act, Lookup):
        node = _eval_term(sigma, act.src, "n = m.l")
        if node not in cells:
            raise Stuck("n = m.l", "node %s is not in the map domain" % node)
        sigma[act.var] = cells[node][act.index - 1]
        return ReconfigState.make(sigma, delta, s.mapstate)
    raise TypeError("unknown action %r" % (act,))


def run(s: ReconfigState, script: Iterable[Action]) -> tuple[ReconfigState, list[ReconfigState]]:
    trace = [s]
    for i, act in enumerate(script):
        try:
            s = step(s, act)
        except Stuck as e:
            e.index = i
            e.trace = trace
            raise
        trace.append(s)
    return s, trace


# ---------------------------------------------------------------------------
# Map formulas


@dataclass(frozen=True)
class MEq:
    left: str
    right: str


@dataclass(frozen=True)
class MNeq:
    left: str
    right: str


@dataclass(frozen=True)
class EmpM:
    pass


@dataclass(frozen=True)
class Leads:
    ident: str  # identifier variable or literal
    term: str


@dataclass(frozen=True)
class MapsTo:
    source: str
    image: tuple[str, ...]


@dataclass(frozen=True)
class MPred:
    name: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class MAnd:
    left: "MapFormula"
    right: "MapFormula"


@dataclass(frozen=True)
class MOr:
    left: "MapFormula"
    right: "MapFormula"


@dataclass(frozen=True)
class MNot:
    sub: "MapFormula"


@dataclass(frozen=True)
class MStar:
    left: "MapFormula"
    right: "MapFormula"


@dataclass(frozen=True)
class MWand:
    left: "MapFormula"
    right: "MapFormula"


@dataclass(frozen=True)
class MExistsNode:
    var: str
    sub: "MapFormula"


@dataclass(frozen=True)
class MExistsId:
    var: str
    sub: "MapFormula"


MapFormula = Union[
    MEq, MNeq, EmpM, Leads, MapsTo, MPred, MAnd, MOr, MNot, MStar, MWand,
    MExistsNode, MExistsId,
]

TOP_M = MEq("nil", "nil")


@dataclass(frozen=True)
class MapRule:
    head: str
    params: tuple[str, ...]
    body: MapFormula


@dataclass(frozen=True)
class MapDefs:
    rules: tuple[MapRule, ...] = ()

    def bodies(self, name: str) -> list[MapRule]:
        out = [r for r in self.rules if r.head == name]
        if not out:
            raise UnknownPredicate("undefined map predicate %s" % name)
        return out


@dataclass(frozen=True)
class MapBudget:
    fresh_nodes: int = 1
    fresh_ids: int = 1
    max_wand_cells: int = 2
    unfold_depth: int = 6


def _mf_vars(phi: MapFormula) -> frozenset[str]:
    if isinstance(phi, (MEq, MNeq)):
        return frozenset(t for t in (phi.left, phi.right) if t != NIL)
    if isinstance(phi, EmpM):
        return frozenset()
    if isinstance(phi, Leads):
        out = {phi.ident}
        if phi.term != NIL:
            out.add(phi.term)
        return frozenset(out)
    if isinstance(phi, MapsTo):
        return frozenset(t for t in (phi.source,) + phi.image if t != NIL)
    if isinstance(phi, MPred):
        return frozenset(t for t in phi.args if t != NIL)
    if isinstance(phi, (MAnd, MOr, MStar, MWand)):
        return _mf_vars(phi.left) | _mf_vars(phi.right)
    if isinstance(phi, MNot):
        return _mf_vars(phi.sub)
    return _mf_vars(phi.sub) - {phi.var}


def check_map_formula(
    s: ReconfigState,
    phi: MapFormula,
    nu: dict[str, str] | None = None,
    defs: MapDefs = MapDefs(),
    budget: MapBudget = MapBudget(),
) -> bool:
    """The satisfaction relation between (deployment, map) pairs and map
    formulas; the separating connectives split and extend the map domain,
    recursive predicates unfold to a bounded depth."""
    nu = dict(nu or {})
    delta = s.delta
    k = s.mapstate.arity

    node_universe = sorted(s.nodes()) + ["w%d" % i for i in range(budget.fresh_nodes)]
    id_universe = sorted(set(delta)) + ["f%d" % i for i in range(budget.fresh_ids)]

    def sat(cells: dict, phi: MapFormula, nu_local: dict, depth: int) -> bool:
        def term(t: str) -> str:
            if t == NIL:
                return NIL
            if t in nu_local:
                return nu_local[t]
            raise BudgetUnsupported("unbound map-formula variable %s" % t)

        if isinstance(phi, MEq):
            return term(phi.left) == term(phi.right)
        if isinstance(phi, MNeq):
            return term(phi.left) != term(phi.right)
        if isinstance(phi, EmpM):
            return not cells
        if isinstance(phi, Leads):
            ident = nu_local.get(phi.ident, phi.ident)
            return delta.get(ident) == term(phi.term)
        if isinstance(phi, MapsTo):
            src = term(phi.source)
            return set(cells) == {src} and tuple(term(t) for t in phi.image) == cells[src]
        if isinstance(phi, MPred):
            if depth <= 0:
                return False
            args = tuple(term(t) for t in phi.args)
            for rule in defs.bodies(phi.name):
                env = dict(zip(rule.params, args))
                if sat(cells, rule.body, env, depth - 1):
                    return True
            return False
        if isinstance(phi, MAnd):
            return sat(cells, phi.left, nu_local, depth) and sat(cells, phi.right, nu_local, depth)
        if isinstance(phi, MOr):
            return sat(cells, phi.left, nu_local, depth) or sat(cells, phi.right, nu_local, depth)
        if isinstance(phi, MNot):
            return not sat(cells, phi.sub, nu_local, depth)
        if isinstance(phi, MStar):
            nodes = sorted(cells)
            for r in range(len(nodes) + 1):
                for part in itertools.combinations(nodes, r):
                    left = {n: cells[n] for n in part}
                    right = {n: cells[n] for n in nodes if n not in part}
                    if sat(left, phi.left, nu_local, depth) and sat(
                        right, phi.right, nu_local, depth
                    ):
                        return True
            return False
        if isinstance(phi, MWand):
            free_nodes = [n for n in node_universe if n not in cells and n != NIL]
            image_pool = node_universe
            for r in range(min(len(free_nodes), budget.max_wand_cells) + 1):
                for doms in itertools.combinations(free_nodes, r):
                    for images in itertools.product(
                        itertools.product(image_pool, repeat=k), repeat=r
                    ):
                        extension = dict(zip(doms, images))
                        if not sat(extension, phi.left, nu_local, depth):
                            continue
                        merged = dict(cells)
                        merged.update(extension)
                        if not sat(merged, phi.right, nu_local, depth):
                            return False
            return True
        if isinstance(phi, MExistsNode):
            for v in node_universe:
                nu2 = dict(nu_local)
                nu2[phi.var] = v
                if sat(cells, phi.sub, nu2, depth):
                    return True
            return False
        if isinstance(phi, MExistsId):
            for v in id_universe:
                nu2 = dict(nu_local)
                nu2[phi.var] = v
                if sat(cells, phi.sub, nu2, depth):
                    return True
            return False
        raise TypeError("unknown map formula %r" % (phi,))

    return sat(s.mapstate.as_dict(), phi, nu, budget.unfold_depth)


# ---------------------------------------------------------------------------
# Local axioms, frame rule, triple checking


@dataclass(frozen=True)
class Triple:
    pre: MapFormula
    action: Action
    post: MapFormula
    ghosts: tuple[str, ...] = ()  # universally quantified auxiliary variables


def modif(act: Action) -> frozenset[str]:
    if isinstance(act, (New, Assign, Lookup)):
        return frozenset([act.var])
    if isinstance(act, Deploy):
        return frozenset([act.ident])
    return frozenset()


def axiom_triple(act: Action, arity: int = 1) -> Triple:
    ghosts = tuple("g%d" % i for i in range(1, arity + 1))
    if isinstance(act, SetField):
        pre = MapsTo(act.var, ghosts)
        image = tuple(
            act.term if i == act.index - 1 else ghosts[i] for i in range(arity)
        )
        return Triple(pre, act, MapsTo(act.var, image), ghosts)
    if isinstance(act, Deploy):
        return Triple(EmpM(), act, MAnd(Leads(act.ident, act.var), EmpM()), ())
    if isinstance(act, Free):
        return Triple(MapsTo(act.var, ghosts), act, EmpM(), ghosts)
    if isinstance(act, New):
        return Triple(EmpM(), act, MapsTo(act.var, tuple([NIL] * arity)), ())
    if isinstance(act, Assign):
        g = ("g0",)
        old = g[0] if act.term == act.var else act.term
        return Triple(
            MAnd(MEq(act.var, g[0]), EmpM()), act, MAnd(MEq(act.var, old), EmpM()), g
        )
    if isinstance(act, Lookup):
        pre = MapsTo(act.src, ghosts)
        post = MAnd(MEq(act.var, ghosts[act.index - 1]), MapsTo(act.src, ghosts))
        return Triple(pre, act, post, ghosts)
    raise TypeError("unknown action %r" % (act,))


def frame(t: Triple, f: MapFormula) -> Triple:
    clash = modif(t.action) & _mf_vars(f)
    if clash:
        raise ModifiedVarInFrame(
            "frame mentions modified variables: %s" % sorted(clash)
        )
    return Triple(MStar(t.pre, f), t.action, MStar(t.post, f), t.ghosts)


@dataclass(frozen=True)
class TripleReport:
    valid: bool
    counterexample: Optional[ReconfigState] = None
    reason: str = ""


def check_triple(
    t: Triple,
    arity: int = 1,
    nodes: int = 3,
    defs: MapDefs = MapDefs(),
    budget: MapBudget = MapBudget(),
) -> TripleReport:
    """Operational validation: for every budgeted state whose map satisfies
    the precondition (under every ghost assignment), the action must not be
    stuck and the result must satisfy the postcondition."""
    universe = ["v%d" % i for i in range(1, nodes + 1)]
    pool = universe + [NIL]
    act = t.action
    variables = sorted(
        (_mf_vars(t.pre) | _mf_vars(t.post) | _action_vars(act)) - set(t.ghosts)
    )
    idents = sorted(_action_ids(act) | _formula_ids(t.pre) | _formula_ids(t.post))
    node_vars = [v for v in variables if v not in idents]

    for sigma_vals in itertools.product(pool, repeat=len(node_vars)):
        sigma = dict(zip(node_vars, sigma_vals))
        for ghost_vals in itertools.product(pool, repeat=len(t.ghosts)):
            nu = dict(zip(t.ghosts, ghost_vals))
            for cells in _maps_over(universe, pool, arity, nodes):
                for delta_vals in itertools.product(pool, repeat=len(idents)):
                    delta = dict(zip(idents, delta_vals))
                    state = ReconfigState.make(sigma, delta, MapState.make(arity, cells))
                    env = dict(nu)
                    env.update(sigma)
                    if not check_map_formula(state, t.pre, env, defs, budget):
                        continue
                    try:
                        after = step(state, act)
                    except Stuck as e:
                        return TripleReport(False, state, "stuck: %s" % e)
                    env2 = dict(nu)
                    env2.update(after.sigma)
                    if not check_map_formula(after, t.post, env2, defs, budget):
                        return TripleReport(False, state, "postcondition fails")
    return TripleReport(True)


def _action_vars(act: Action) -> frozenset[str]:
    if isinstance(act, SetField):
        return frozenset(v for v in (act.var, act.term) if v != NIL)
    if isinstance(act, Deploy):
        return frozenset([act.var])
    if isinstance(act, (Free, New)):
        return frozenset([act.var])
    if isinstance(act, Assign):
        return frozenset(v for v in (act.var, act.term) if v != NIL)
    return frozenset([act.var, act.src])


def _action_ids(act: Action) -> frozenset[str]:
    return frozenset([act.ident]) if isinstance(act, Deploy) else frozenset()


def _formula_ids(phi: MapFormula) -> frozenset[str]:
    if isinstance(phi, Leads):
        return frozenset([phi.ident])
    if isinstance(phi, (MAnd, MOr, MStar, MWand)):
        return _formula_ids(phi.left) | _formula_ids(phi.right)
    if isinstance(phi, MNot):
        return _formula_ids(phi.sub)
    if isinstance(phi, (MExistsNode, MExistsId)):
        return _formula_ids(phi.sub) - {phi.var}
    return frozenset()


def _maps_over(universe, pool, arity, max_cells):
    for r in range(min(len(universe), max_cells) + 1):
        for doms in itertools.combinations(universe, r):
            for images in itertools.product(
                itertools.product(pool, repeat=arity), repeat=r
            ):
                yield dict(zip(doms, images))


# ---------------------------------------------------------------------------
# Deployment and synchronization rules


@dataclass(frozen=True)
class DeploymentReport:
    every_component_deployed: bool
    every_node_occupied: bool
    at_most_one_per_node: bool
    witness: Optional[tuple] = None

    @property
    def all_pass(self) -> bool:
        return (
            self.every_component_deployed
            and self.every_node_occupied
            and self.at_most_one_per_node
        )


def _arch_ids(a: Architecture) -> frozenset[str]:
    out = set()
    for p in a.domain:
        if "@" in p:
            out.add(p.split("@", 1)[1])
    return frozenset(out)


def allocated(a: Architecture, ident: str, pfuns: Iterable[str], mode: str = "all") -> bool:
    """alloc over the architecture layer: the component's declared ports
    are in the domain (all of them by the literal reading, any with
    mode="any")."""
    ports = ["%s@%s" % (f, ident) for f in sorted(pfuns)]
    dom = a.domain
    hits = [p in dom for p in ports]
    return all(hits) if mode == "all" else any(hits)


def check_deployment(
    a: Architecture,
    s: ReconfigState,
    pfuns: Iterable[str],
    alloc: str = "all",
) -> DeploymentReport:
    delta = s.delta
    dom_m = s.mapstate.domain
    ids = sorted(_arch_ids(a) | set(delta))
    alloc_ids = [i for i in ids if allocated(a, i, pfuns, alloc)]
    deployed = all(delta.get(i) in dom_m for i in alloc_ids)
    occupied = all(
        any(delta.get(i) == n for i in alloc_ids) for n in sorted(dom_m)
    )
    exclusive = True
    witness = None
    for n in sorted(dom_m):
        on_node = [i for i in alloc_ids if delta.get(i) == n]
        if len(on_node) > 1:
            exclusive = False
            witness = (n, tuple(on_node[:2]))
            break
    if not deployed and witness is None:
        bad = [i for i in alloc_ids if delta.get(i) not in dom_m]
        witness = ("undeployed", tuple(bad[:2]))
    return DeploymentReport(deployed, occupied, exclusive, witness)


@dataclass(frozen=True)
class SyncRule:
    variables: tuple[str, ...]  # universally quantified identifier variables
    premise: MapFormula
    conclusion: Formula  # architecture formula over port functions of the variables


def check_sync_rule(
    a: Architecture,
    s: ReconfigState,
    rule: SyncRule,
    defs: MapDefs = MapDefs(),
    budget: MapBudget = MapBudget(),
    arch_budget: EnumBudget | None = None,
) -> tuple[bool, Optional[dict]]:
    """Instantiate the quantified identifiers over the deployment domain
    and check premise (map layer) implies conclusion (architecture layer)."""
    ids = sorted(set(s.delta) | _arch_ids(a))
    from .formula import ports_of

    for values in itertools.product(ids, repeat=len(rule.variables)):
        env = dict(zip(rule.variables, values))
        if not check_map_formula(s, rule.premise, env, defs, budget):
            continue
        ground = _ground_arch_formula(rule.conclusion, env)
        b = arch_budget
        if b is None:
            b = EnumBudget.for_ports(ports_of(ground) | a.domain)
        if not check(a, ground, budget=b):
            return False, env
    return True, None


def _ground_arch_formula(phi: Formula, env: dict[str, str]) -> Formula:
    from .formula import (
        And, Atom, BAnd, BNot, BTerm, CloseMod, Emp, Eq, ExistsIndex,
        ExistsPort, Neq, Not, Or, PortConst, Pred, Star, Wand,
    )

    def term(t):
        if isinstance(t, PortFun):
            ident = env.get(t.index, t.index)
            return PortConst("%s@%s" % (t.fun, ident))
        return t

    def bterm(b):
        if isinstance(b, BTerm):
            return BTerm(term(b.term))
        if isinstance(b, BNot):
            return BNot(bterm(b.sub))
        return BAnd(bterm(b.left), bterm(b.right))

    def go(f):
        if isinstance(f, Atom):
            return Atom(f.kind, term(f.term), bterm(f.bterm))
        if isinstance(f, (Eq, Neq)):
            return type(f)(term(f.left), term(f.right))
        if isinstance(f, (And, Or, Star, Wand)):
            return type(f)(go(f.left), go(f.right))
        if isinstance(f, (Not, CloseMod)):
            return type(f)(go(f.sub))
        if isinstance(f, (ExistsPort, ExistsIndex)):
            return type(f)(f.var, go(f.sub))
        return f

    return go(phi)
