"""Denotational evaluator for terms, by plain structural recursion.

This is the reference semantics the engine and the differentiated terms
are tested against, so it does no optimization at all. Evaluating a term
at x gives a list of (value, env) pairs: env carries the lambda bindings
made on the way, and duplicates are kept (unions are multisets).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from ..errors import InfiniteDomain
from ..values import UNKNOWN, Entity, OrderedSet, Type
from .knowledge import KNOWLEDGE, apply_op, compare
from .terms import (
    CartesianConst, Chi, Compose, Const, Empty, Identity, IfTest, Intersection, Inverse,
    InverseUnit, LambdaBind, Not, Phi, PrevLambda, Projection, Psi, RelVar, SetExpansion,
    SetFormer, Term, Union, Unit, Var,
)

Env = dict


@dataclass
class Delta:
    """An atomic update R(a) := b; ``last`` is the value a had under R before."""

    rel: str
    a: Any
    b: Any
    last: Any = UNKNOWN


@dataclass
class EvalContext:
    store: Any
    prev: Any = None  # store holding the pre-update valuation, for PrevLambda
    delta: Delta | None = None
    bases: list | None = None  # candidate inputs for generic inversion

    def universe(self) -> list:
        return self.bases if self.bases is not None else self.store.universe()


def complement(t: Term) -> Term:
    """The test that holds where a comparison test fails, argument by argument."""
    if isinstance(t, Phi):
        return Phi(KNOWLEDGE.complement[t.cmp], t.a, t.b)
    if isinstance(t, Union):
        return Union(complement(t.a), complement(t.b))
    if isinstance(t, Empty):
        return t
    if isinstance(t, LambdaBind):
        return LambdaBind(t.z, t.t1, complement(t.t2))
    if isinstance(t, PrevLambda):
        return PrevLambda(t.z, t.rel, complement(t.body))
    raise TypeError(f"cannot complement {type(t).__name__}")


def members(v: Any, store) -> Iterable[Any]:
    if isinstance(v, (OrderedSet, list, tuple, set, frozenset)):
        return v
    if isinstance(v, Type):
        return v.enumerate(store)
    return ()


def _is_instance(ctx: EvalContext, name: str, x: Any) -> bool:
    cls = ctx.store.schema.classes[name[2:]]
    return isinstance(x, Entity) and x.cls.is_subclass(cls)


def _rel_values(ctx: EvalContext, name: str, x: Any) -> list:
    if name.startswith("::"):
        return [x] if _is_instance(ctx, name, x) else []
    rel = ctx.store.relations[name]
    if not rel.domain.contains(x):
        return []
    if rel.multi:
        return list(ctx.store.members(rel, x))
    v = ctx.store.get(rel, x)
    return [] if v is UNKNOWN else [v]


def _rel_keys(ctx: EvalContext, name: str, y: Any) -> list:
    if name.startswith("::"):
        return [y] if _is_instance(ctx, name, y) else []
    rel = ctx.store.relations[name]
    try:
        hash(y)
    except TypeError:
        return []
    return ctx.store.keys_with(rel, y)


def pairs(t: Term, ctx: EvalContext, x: Any, env: Env) -> list[tuple[Any, Env]]:
    if isinstance(t, (RelVar, Chi)):
        name = t.name if isinstance(t, RelVar) else t.rel
        return [(v, env) for v in _rel_values(ctx, name, x)]
    if isinstance(t, Identity):
        return [(x, env)]
    if isinstance(t, Empty):
        return []
    if isinstance(t, Var):
        v = env.get(t.z, UNKNOWN)
        return [] if v is UNKNOWN else [(v, env)]
    if isinstance(t, Const):
        v = ctx.store.globals.get(t.ref, UNKNOWN) if t.ref is not None else t.value
        return [] if v is UNKNOWN else [(v, env)]
    if isinstance(t, Unit):
        d = ctx.delta
        return [(d.b, env)] if d is not None and x == d.a else []
    if isinstance(t, InverseUnit):
        d = ctx.delta
        return [(d.a, env)] if d is not None and x == d.b else []
    if isinstance(t, Union):
        return pairs(t.a, ctx, x, env) + pairs(t.b, ctx, x, env)
    if isinstance(t, Intersection):
        right = [v for v, _ in pairs(t.b, ctx, x, env)]
        return [(v, e) for v, e in pairs(t.a, ctx, x, env) if v in right]
    if isinstance(t, Compose):
        out = []
        for z, e1 in pairs(t.b, ctx, x, env):
            out.extend(pairs(t.a, ctx, z, e1))
        return out
    if isinstance(t, Inverse):
        return _inverse(t.t, ctx, x, env)
    if isinstance(t, CartesianConst):
        if not t.dom.contains(x):
            return []
        return [(v, env) for v in t.rng.enumerate(ctx.store)]
    if isinstance(t, Psi):
        out = []
        for va, e1 in pairs(t.a, ctx, x, env):
            if t.b is None:
                v = apply_op(t.op, va)
                if v is not UNKNOWN:
                    out.append((v, e1))
                continue
            for vb, e2 in pairs(t.b, ctx, x, e1):
                v = apply_op(t.op, va, vb)
                if v is not UNKNOWN:
                    out.append((v, e2))
        return out
    if isinstance(t, Phi):
        for va, e1 in pairs(t.a, ctx, x, env):
            for vb, _ in pairs(t.b, ctx, x, e1):
                if compare(t.cmp, va, vb):
                    return [(x, env)]
        return []
    if isinstance(t, Not):
        return [] if pairs(t.t, ctx, x, env) else [(x, env)]
    if isinstance(t, Projection):
        return [(x, env)] if pairs(t.t, ctx, x, env) else []
    if isinstance(t, IfTest):
        out = []
        if pairs(t.phi, ctx, x, env):
            out.extend(pairs(t.then, ctx, x, env))
        if pairs(complement(t.phi), ctx, x, env):
            out.extend(pairs(t.else_, ctx, x, env))
        return out
    if isinstance(t, SetFormer):
        chosen: dict = {}
        for zv, e1 in pairs(t.t1, ctx, x, env):
            if zv not in chosen and pairs(t.t2, ctx, zv, {**e1, t.z: zv}):
                chosen[zv] = None
        return [(OrderedSet(chosen), env)]
    if isinstance(t, SetExpansion):
        return [(m, e) for v, e in pairs(t.t, ctx, x, env) for m in members(v, ctx.store)]
    if isinstance(t, LambdaBind):
        out = []
        for v, e1 in pairs(t.t1, ctx, x, env):
            out.extend(pairs(t.t2, ctx, x, {**e1, t.z: v}))
        return out
    if isinstance(t, PrevLambda):
        return pairs(t.body, ctx, x, {**env, t.z: previous_value(ctx, t.rel, x)})
    raise TypeError(f"cannot evaluate {type(t).__name__}")


def previous_value(ctx: EvalContext, rel_name: str, x: Any) -> Any:
    d = ctx.delta
    if d is not None and d.rel == rel_name and x == d.a:
        return d.last
    src = ctx.prev if ctx.prev is not None else ctx.store
    rel = src.relations[rel_name]
    if not rel.domain.contains(x):
        return UNKNOWN
    return src.get(rel, x)


def _inverse(t: Term, ctx: EvalContext, y: Any, env: Env) -> list[tuple[Any, Env]]:
    if isinstance(t, (RelVar, Chi)):
        name = t.name if isinstance(t, RelVar) else t.rel
        return [(k, env) for k in _rel_keys(ctx, name, y)]
    if isinstance(t, Identity):
        return [(y, env)]
    if isinstance(t, Unit):
        return pairs(InverseUnit(), ctx, y, env)
    if isinstance(t, InverseUnit):
        return pairs(Unit(), ctx, y, env)
    if isinstance(t, Inverse):
        return pairs(t.t, ctx, y, env)
    # generic case: every w of the universe with y among t(w)
    out = []
    for w in ctx.universe():
        for v, e in pairs(t, ctx, w, env):
            if v == y:
                out.append((w, e))
                break
    return out


def eval_term(
    t: Term, store, x: Any, env: Env | None = None, prev=None, bases: list | None = None
) -> OrderedSet:
    """The set { y | (x, y) in t } over the given store."""
    ctx = EvalContext(store, prev, None, bases)
    return OrderedSet(v for v, _ in pairs(t, ctx, x, dict(env or {})))


def eval_relation(t: Term, store, bases: Iterable[Any], prev=None) -> set[tuple[Any, Any]]:
    """All pairs (x, y) of t with x drawn from ``bases``."""
    bases = list(bases)
    ctx = EvalContext(store, prev, None, bases)
    return {(x, v) for x in bases for v, _ in pairs(t, ctx, x, {})}


__all__ = [
    "Delta", "EvalContext", "complement", "eval_relation", "eval_term", "members", "pairs",
    "previous_value",
]
