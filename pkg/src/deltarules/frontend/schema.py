"""Declarations resolved into runtime structures: classes, relations, types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import Loc, ResolveError
from ..values import (
    ANY,
    BOOLEAN,
    INTEGER,
    STRING,
    UNKNOWN,
    ClassInfo,
    ClassType,
    IntervalType,
    OrderedSet,
    PrimType,
    SetOfType,
    TupleKeyType,
    Type,
)
from . import ast as A

PRIM_TYPES = {
    "integer": INTEGER,
    "boolean": BOOLEAN,
    "string": STRING,
    "any": ANY,
    "float": PrimType("float"),
    "list": PrimType("list"),
    "set": PrimType("set"),
}
ROOT_CLASS = "object"


class NotConstant(Exception):
    pass


def const_eval(e: A.Expr, consts: dict[str, Any]) -> Any:
    """Evaluate a compile-time constant expression."""
    if isinstance(e, A.Lit):
        return e.value
    if isinstance(e, A.Name):
        if e.id in consts:
            return consts[e.id]
        raise NotConstant(e.id)
    if isinstance(e, A.Neg):
        return -const_eval(e.operand, consts)
    if isinstance(e, A.Interval):
        lo, hi = const_eval(e.lo, consts), const_eval(e.hi, consts)
        if not (isinstance(lo, int) and isinstance(hi, int)):
            raise NotConstant("interval bounds")
        return IntervalType(lo, hi)
    if isinstance(e, A.BinOp) and e.op in ("+", "-", "*", "div", "mod"):
        a, b = const_eval(e.left, consts), const_eval(e.right, consts)
        if not (isinstance(a, int) and isinstance(b, int)):
            raise NotConstant(e.op)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "div":
            return a // b
        return a % b
    if isinstance(e, A.SetLit):
        return OrderedSet(const_eval(i, consts) for i in e.items)
    raise NotConstant(type(e).__name__)


@dataclass
class Schema:
    classes: dict[str, ClassInfo] = field(default_factory=dict)
    relations: dict[str, A.RelDecl] = field(default_factory=dict)
    consts: dict[str, Any] = field(default_factory=dict)
    aliases: dict[str, Type] = field(default_factory=dict)
    runtime_globals: dict[str, A.GlobalDecl] = field(default_factory=dict)
    procs: dict[str, A.ProcDecl] = field(default_factory=dict)
    rules: dict[str, A.RuleDecl] = field(default_factory=dict)
    class_decls: dict[str, A.ClassDecl] = field(default_factory=dict)

    def resolve_type(self, t: A.TypeExpr | None) -> Type:
        if t is None:
            return ANY
        if isinstance(t, A.TName):
            if t.name in self.classes:
                return ClassType(self.classes[t.name])
            if t.name in self.aliases:
                return self.aliases[t.name]
            if t.name in PRIM_TYPES:
                return PRIM_TYPES[t.name]
            raise ResolveError(f"unknown type '{t.name}'", t.loc)
        if isinstance(t, A.TInterval):
            try:
                lo = const_eval(t.lo, self.consts)
                hi = const_eval(t.hi, self.consts)
            except NotConstant as exc:
                raise ResolveError(f"interval bound is not a constant ({exc})", t.loc) from None
            return IntervalType(lo, hi)
        return SetOfType(self.resolve_type(t.elem))

    def relation(self, name: str, loc: Loc | None = None) -> A.RelDecl:
        try:
            return self.relations[name]
        except KeyError:
            raise ResolveError(f"unknown relation '{name}'", loc) from None

    def class_type(self, name: str) -> ClassType:
        return ClassType(self.classes[name])


def _add_relation(sc: Schema, rel: A.RelDecl, loc: Loc | None) -> None:
    if rel.name in sc.relations:
        raise ResolveError(f"relation '{rel.name}' is declared twice", loc)
    if rel.name in sc.classes or rel.name in sc.consts or rel.name in sc.procs:
        raise ResolveError(f"'{rel.name}' is already declared", loc)
    sc.relations[rel.name] = rel


def _default(sc: Schema, e: A.Expr | None, multi: bool, loc) -> Any:
    if multi:
        if e is not None:
            raise ResolveError("multi-valued relations cannot have a default", loc)
        return OrderedSet()
    if e is None:
        return UNKNOWN
    try:
        return const_eval(e, sc.consts)
    except NotConstant as exc:
        raise ResolveError(f"default value is not a constant ({exc})", loc) from None


def build_schema(p: A.Program) -> Schema:
    sc = Schema()
    sc.classes[ROOT_CLASS] = ClassInfo(ROOT_CLASS, None)
    for item in p.items:
        if isinstance(item, A.ClassDecl):
            if item.name in sc.classes or item.name in PRIM_TYPES:
                raise ResolveError(f"class '{item.name}' is declared twice", item.loc)
            if item.parent not in sc.classes:
                raise ResolveError(f"unknown parent class '{item.parent}'", item.loc)
            info = ClassInfo(item.name, sc.classes[item.parent])
            sc.classes[item.name] = info
            sc.class_decls[item.name] = item
            for slot in item.slots:
                multi = isinstance(slot.type, A.TSet) and slot.type.multi
                set_valued = isinstance(slot.type, A.TSet) and not slot.type.multi
                rng = sc.resolve_type(slot.type.elem if multi else slot.type)  # type: ignore[union-attr]
                rel = A.RelDecl(
                    slot.name, "slot", ClassType(info), rng, multi,
                    _default(sc, slot.default, multi, slot.loc), set_valued=set_valued,
                )
                _add_relation(sc, rel, slot.loc)
                info.slots[slot.name] = rel
        elif isinstance(item, A.TableDecl):
            if not 1 <= len(item.params) <= 2:
                raise ResolveError("tables take one or two keys", item.loc)
            parts = [sc.resolve_type(t) for _, t in item.params]
            for part, (v, t) in zip(parts, item.params):
                if not part.finite:
                    raise ResolveError(
                        f"table key '{v}' must range over a class or a finite interval", t.loc
                    )
            dom = parts[0] if len(parts) == 1 else TupleKeyType(parts)
            multi = isinstance(item.range, A.TSet) and item.range.multi
            set_valued = isinstance(item.range, A.TSet) and not item.range.multi
            rng = sc.resolve_type(item.range.elem if multi else item.range)  # type: ignore[union-attr]
            rel = A.RelDecl(
                item.name, "table", dom, rng, multi,
                _default(sc, item.default, multi, item.loc),
                set_valued=set_valued, arity=len(parts),
            )
            _add_relation(sc, rel, item.loc)
        elif isinstance(item, A.GlobalDecl):
            if item.name in sc.consts or item.name in sc.runtime_globals or item.name in sc.relations:
                raise ResolveError(f"global '{item.name}' is declared twice", item.loc)
            try:
                value = const_eval(item.value, sc.consts)
            except NotConstant:
                sc.runtime_globals[item.name] = item
                continue
            if isinstance(value, IntervalType):
                value = IntervalType(value.lo, value.hi, alias=item.name)
                sc.aliases[item.name] = value
            sc.consts[item.name] = value
        elif isinstance(item, A.StoreDecl):
            for n in item.names:
                sc.relation(n, item.loc).defeasible = True
        elif isinstance(item, A.InverseDecl):
            a = sc.relation(item.left, item.loc)
            b = sc.relation(item.right, item.loc)
            for r in (a, b):
                if r.arity != 1:
                    raise ResolveError(f"'{r.name}' has a paired key and cannot have an inverse", item.loc)
                if r.set_valued:
                    raise ResolveError(f"set-valued '{r.name}' cannot have an inverse", item.loc)
            if a.inverse or b.inverse:
                raise ResolveError("relation already has an inverse", item.loc)
            a.inverse, b.inverse = b.name, a.name
        elif isinstance(item, A.ProcDecl):
            if item.name in sc.procs or item.name in sc.relations:
                raise ResolveError(f"'{item.name}' is declared twice", item.loc)
            sc.procs[item.name] = item
        elif isinstance(item, A.RuleDecl):
            if item.name in sc.rules:
                raise ResolveError(f"rule '{item.name}' is declared twice", item.loc)
            for _, t in item.params:
                sc.resolve_type(t)
            sc.rules[item.name] = item
    # parameter types of procedures are checked once every class is known
    for proc in sc.procs.values():
        for _, t in proc.params:
            sc.resolve_type(t)
    return sc
