"""Static checks: name resolution, event scoping and stratification."""

from __future__ import annotations

from typing import Iterable, Iterator

from ..errors import Diagnostic, ResolveError, StratificationError
from . import ast as A
from .schema import Schema, build_schema

BUILTIN_FUNCS = {
    "print", "branch", "choice", "backtrack", "commit", "world?", "world=",
    "size", "max", "min", "abs", "contradiction", "sum",
}
INST_PREFIX = "::"


def inst_rel(cls: str) -> str:
    """Name of the pseudo relation carrying instantiation events of a class."""
    return INST_PREFIX + cls


# -- tree walking ----------------------------------------------------------------


def children(node) -> Iterator:
    """Direct sub-nodes (expressions and assertions) of a node."""
    if isinstance(node, (A.Name, A.Lit, A.AInst)):
        return
    if isinstance(node, A.Dot):
        yield node.obj
    elif isinstance(node, (A.Index, A.Call)):
        yield from node.args
    elif isinstance(node, A.BinOp):
        yield node.left
        yield node.right
    elif isinstance(node, (A.Neg, A.NotE)):
        yield node.operand
    elif isinstance(node, A.Interval):
        yield node.lo
        yield node.hi
    elif isinstance(node, (A.SetFormer, A.Quant)):
        yield node.src
        yield node.cond
    elif isinstance(node, A.Image):
        yield node.expr
        yield node.src
    elif isinstance(node, A.SetLit):
        yield from node.items
    elif isinstance(node, A.If):
        yield node.cond
        yield node.then
        if node.else_ is not None:
            yield node.else_
    elif isinstance(node, A.Let):
        for _, v in node.bindings:
            yield v
        yield node.body
    elif isinstance(node, A.When):
        yield node.value
        yield node.body
        if node.else_ is not None:
            yield node.else_
    elif isinstance(node, A.For):
        yield node.src
        yield node.body
    elif isinstance(node, A.While):
        yield node.cond
        yield node.body
    elif isinstance(node, A.Seq):
        yield from node.items
    elif isinstance(node, A.Assign):
        yield node.target
        yield node.value
    elif isinstance(node, A.New):
        for _, v in node.inits:
            yield v
    elif isinstance(node, A.ACmp):
        yield node.left
        yield node.right
    elif isinstance(node, A.AEvent):
        yield node.target
        yield node.value
    elif isinstance(node, (A.AExists, A.ANot)):
        yield node.body
    elif isinstance(node, A.AIf):
        yield node.cond
        yield node.then
        yield node.else_
    elif isinstance(node, (A.AAnd, A.AOr)):
        yield node.left
        yield node.right
    elif isinstance(node, A.ARel):
        yield node.left
        yield node.right
    elif isinstance(node, A.AMember):
        yield node.elem
        yield node.coll
    elif isinstance(node, A.ATruth):
        yield node.expr


def walk(node) -> Iterator:
    yield node
    for c in children(node):
        yield from walk(c)


def free_vars(node, bound: frozenset = frozenset()) -> set[str]:
    """Names used but not bound inside ``node`` (globals included)."""
    out: set[str] = set()
    _free(node, bound, out)
    return out


def _free(node, bound, out) -> None:
    if isinstance(node, A.Name):
        if node.id not in bound:
            out.add(node.id)
        return
    if isinstance(node, (A.SetFormer, A.Quant)):
        _free(node.src, bound, out)
        _free(node.cond, bound | {node.var}, out)
        return
    if isinstance(node, A.Image):
        _free(node.src, bound, out)
        _free(node.expr, bound | {node.var}, out)
        return
    if isinstance(node, A.For):
        _free(node.src, bound, out)
        _free(node.body, bound | {node.var}, out)
        return
    if isinstance(node, A.Let):
        b = bound
        for v, e in node.bindings:
            _free(e, b, out)
            b = b | {v}
        _free(node.body, b, out)
        return
    if isinstance(node, A.When):
        _free(node.value, bound, out)
        _free(node.body, bound | {node.var}, out)
        if node.else_ is not None:
            _free(node.else_, bound, out)
        return
    if isinstance(node, A.AExists):
        _free(node.body, bound | {node.var}, out)
        return
    if isinstance(node, A.AEvent):
        _free(node.target, bound, out)
        _free(node.value, bound, out)
        if node.prev is not None and node.prev not in bound:
            out.add(node.prev)
        return
    if isinstance(node, A.AInst):
        if node.var not in bound:
            out.add(node.var)
        return
    for c in children(node):
        _free(c, bound, out)


def relations_used(node, sc: Schema) -> list[str]:
    """Relations read by a rule condition, in first-occurrence order."""
    seen: dict[str, None] = {}
    for n in walk(node):
        if isinstance(n, A.Dot) and n.attr in sc.relations:
            seen[n.attr] = None
        elif isinstance(n, A.Index) and n.name in sc.relations:
            seen[n.name] = None
        elif isinstance(n, A.Call) and n.fn in sc.relations:
            seen[n.fn] = None
        elif isinstance(n, A.ARel):
            seen[n.rel] = None
        elif isinstance(n, A.AInst):
            seen[inst_rel(n.cls)] = None
    return list(seen)


def negated_relations(node, sc: Schema, neg: bool = False) -> Iterator[tuple[str, bool]]:
    """(relation, occurs-negatively) for every relation read by an assertion."""
    if isinstance(node, A.ANot):
        yield from negated_relations(node.body, sc, True)
        return
    if isinstance(node, A.AIf):
        # the else branch is guarded by the complemented test
        yield from negated_relations(node.cond, sc, True)
        yield from negated_relations(node.then, sc, neg)
        yield from negated_relations(node.else_, sc, neg)
        return
    if isinstance(node, (A.AAnd, A.AOr, A.AExists)):
        for c in children(node):
            yield from negated_relations(c, sc, neg)
        return
    if isinstance(node, A.NotE):
        for r in relations_used(node.operand, sc):
            yield r, True
        return
    for r in relations_used(node, sc):
        yield r, neg


# -- name resolution --------------------------------------------------------------


class _Resolver:
    def __init__(self, sc: Schema):
        self.sc = sc

    def known_global(self, name: str) -> bool:
        sc = self.sc
        return (
            name in sc.consts
            or name in sc.runtime_globals
            or name in sc.classes
            or name in sc.aliases
        )

    def check(self, node, scope: frozenset) -> None:
        sc = self.sc
        if isinstance(node, A.Name):
            if node.id not in scope and not self.known_global(node.id):
                raise ResolveError(f"unresolved name '{node.id}'", node.loc)
            return
        if isinstance(node, A.Dot):
            if node.attr not in sc.relations:
                raise ResolveError(f"unknown relation '{node.attr}'", node.loc)
        elif isinstance(node, A.Index):
            rel = sc.relations.get(node.name)
            if rel is None:
                raise ResolveError(f"unknown table '{node.name}'", node.loc)
            if len(node.args) != rel.arity:
                raise ResolveError(
                    f"'{node.name}' takes {rel.arity} key(s), got {len(node.args)}", node.loc
                )
        elif isinstance(node, A.Call):
            self.check_call(node)
        elif isinstance(node, A.ARel):
            if node.rel not in sc.relations:
                raise ResolveError(f"unknown relation '{node.rel}'", node.loc)
        elif isinstance(node, A.New):
            info = sc.classes.get(node.cls)
            if info is None:
                raise ResolveError(f"unknown class '{node.cls}'", node.loc)
            for slot, _ in node.inits:
                if not any(slot in c.slots for c in info.ancestors()):
                    raise ResolveError(f"class '{node.cls}' has no slot '{slot}'", node.loc)
        elif isinstance(node, A.AInst):
            if node.var not in scope:
                raise ResolveError(f"unresolved name '{node.var}'", node.loc)
            if node.cls not in sc.classes:
                raise ResolveError(f"unknown class '{node.cls}'", node.loc)
            return
        elif isinstance(node, A.AEvent):
            if not isinstance(node.target, (A.Dot, A.Index)):
                raise ResolveError("an update event must target a slot or a table entry", node.loc)
            if node.prev is not None and node.prev not in scope:
                raise ResolveError(f"unresolved name '{node.prev}'", node.loc)
        # binders
        if isinstance(node, (A.SetFormer, A.Quant)):
            self.check(node.src, scope)
            self.check(node.cond, scope | {node.var})
            return
        if isinstance(node, A.Image):
            self.check(node.src, scope)
            self.check(node.expr, scope | {node.var})
            return
        if isinstance(node, A.For):
            self.check(node.src, scope)
            self.check(node.body, scope | {node.var})
            return
        if isinstance(node, A.Let):
            s = scope
            for v, e in node.bindings:
                self.check(e, s)
                s = s | {v}
            self.check(node.body, s)
            return
        if isinstance(node, A.When):
            self.check(node.value, scope)
            self.check(node.body, scope | {node.var})
            if node.else_ is not None:
                self.check(node.else_, scope)
            return
        if isinstance(node, A.AExists):
            if node.type is not None:
                sc.resolve_type(node.type)
            self.check(node.body, scope | {node.var})
            return
        for c in children(node):
            self.check(c, scope)

    def check_call(self, node: A.Call) -> None:
        sc = self.sc
        if node.fn in sc.procs:
            want = len(sc.procs[node.fn].params)
            if len(node.args) != want:
                raise ResolveError(f"'{node.fn}' takes {want} argument(s), got {len(node.args)}", node.loc)
        elif node.fn in sc.relations:
            if len(node.args) not in (1, 2):
                raise ResolveError(f"relation '{node.fn}' applied to {len(node.args)} arguments", node.loc)
        elif node.fn not in BUILTIN_FUNCS:
            raise ResolveError(f"unknown function '{node.fn}'", node.loc)


def _exists_vars(a) -> list[str]:
    """Variables introduced by existentials reachable through conjunctions."""
    out: list[str] = []
    stack = [a]
    while stack:
        n = stack.pop()
        if isinstance(n, A.AExists):
            out.append(n.var)
            stack.append(n.body)
        elif isinstance(n, (A.AAnd, A.AOr)):
            stack.extend([n.right, n.left])
    return out


def conclusion_scope(rule: A.RuleDecl) -> frozenset:
    return frozenset(v for v, _ in rule.params) | frozenset(_exists_vars(rule.cond))


def resolve_names(p: A.Program, sc: Schema) -> None:
    r = _Resolver(sc)
    for item in p.items:
        if isinstance(item, A.RuleDecl):
            params = frozenset(v for v, _ in item.params)
            r.check(item.cond, params)
            extra = free_vars(item.cond) - params
            extra = {v for v in extra if not r.known_global(v)}
            if extra:
                raise ResolveError(
                    f"rule '{item.name}': condition uses undeclared variable(s) {', '.join(sorted(extra))}",
                    item.loc,
                )
            r.check(item.conclusion, conclusion_scope(item))
        elif isinstance(item, A.ProcDecl):
            r.check(item.body, frozenset(v for v, _ in item.params))
        elif isinstance(item, A.ClassDecl):
            for s in item.slots:
                if s.default is not None:
                    r.check(s.default, frozenset())
        elif isinstance(item, A.GlobalDecl):
            r.check(item.value, frozenset())
        elif isinstance(item, A.EventDecl):
            for n in item.names:
                if n not in sc.relations and n not in sc.classes:
                    raise ResolveError(f"event declaration names unknown relation '{n}'", item.loc)
        elif not isinstance(item, A.DECL_TYPES):
            r.check(item, frozenset())


# -- events ---------------------------------------------------------------------------


def check_events(p: A.Program, sc: Schema | None = None) -> dict[A.RuleDecl, set[str]]:
    """Triggering relations of each rule under order-sensitive event scoping.

    A relation triggers a rule when the rule reads it, it was declared with
    ``event`` before the rule, and no ``noevent`` masked it in between.
    Instantiation atoms ``x :: C`` map to the pseudo relation ``::C``, which
    is active when ``C`` itself was event-declared.
    """
    sc = sc or p.schema or build_schema(p)
    active: set[str] = set()
    out: dict[A.RuleDecl, set[str]] = {}
    for item in p.events:
        if isinstance(item, A.EventDecl):
            for n in item.names:
                key = inst_rel(n) if n in sc.classes else n
                if item.kind == "event":
                    active.add(key)
                else:
                    active.discard(key)
        else:
            out[item] = {r for r in relations_used(item.cond, sc) if r in active}
    return out


def trigger_warnings(triggers: dict[A.RuleDecl, set[str]]) -> list[Diagnostic]:
    return [
        Diagnostic(f"rule '{r.name}' has no triggering relation and can never fire", r.loc)
        for r, rels in triggers.items()
        if not rels
    ]


# -- stratification ------------------------------------------------------------------------


def _written(node, sc: Schema, seen_procs: set[str]) -> set[str]:
    out: set[str] = set()
    for n in walk(node):
        if isinstance(n, A.Assign):
            t = n.target
            if isinstance(t, A.Dot):
                out.add(t.attr)
            elif isinstance(t, A.Index):
                out.add(t.name)
        elif isinstance(n, A.New):
            out.add(inst_rel(n.cls))
            out.update(s for s, _ in n.inits)
        elif isinstance(n, A.Call) and n.fn in sc.procs and n.fn not in seen_procs:
            seen_procs.add(n.fn)
            out |= _written(sc.procs[n.fn].body, sc, seen_procs)
    return out


def check_stratification(p: A.Program, sc: Schema) -> None:
    """Reject a cycle of the rule dependency graph that goes through negation."""
    edges: dict[str, set[tuple[str, bool, A.RuleDecl]]] = {}
    for rule in p.rules:
        writes = _written(rule.conclusion, sc, set())
        for rel, neg in negated_relations(rule.cond, sc):
            for w in writes:
                edges.setdefault(rel, set()).add((w, neg, rule))
    # a negative edge u -> v lies on a cycle iff u is reachable from v
    for u, outs in edges.items():
        for v, neg, rule in outs:
            if neg and _reaches(edges, v, u):
                raise StratificationError(
                    f"rule '{rule.name}' negates '{u}', which its own conclusion "
                    f"(transitively) defines",
                    rule.loc,
                )


def _reaches(edges, start: str, goal: str) -> bool:
    stack, seen = [start], set()
    while stack:
        n = stack.pop()
        if n == goal:
            return True
        if n in seen:
            continue
        seen.add(n)
        stack.extend(v for v, _, _ in edges.get(n, ()))
    return False


def validate(p: A.Program) -> Schema:
    sc = build_schema(p)
    resolve_names(p, sc)
    check_stratification(p, sc)
    p.schema = sc
    return sc


def names_in(items: Iterable) -> set[str]:
    return {n.id for i in items for n in walk(i) if isinstance(n, A.Name)}
