"""Symbolic differentiation of terms with respect to one relation.

The derivative of t by R is a term over the update pair (a, b) of an
atomic update R(a) := b: evaluated after the update, it covers every pair
the update added to t and nothing outside t. Unit stands for the pair
(a, b) and InverseUnit for (b, a).
"""

from __future__ import annotations

from typing import Any, Iterable

from .algebra.evaluate import Delta, EvalContext, complement, pairs
from .algebra.simplify import prune
from .algebra.terms import (
    EMPTY, INVERSE_UNIT, UNIT, CartesianConst, Chi, Compose, Const, Empty, Identity, IfTest,
    Intersection, Inverse, LambdaBind, Not, Phi, PrevLambda, Projection, Psi, RelVar,
    SetExpansion, SetFormer, Term, Union, Var, rebuild, union_all,
)
from .values import UNKNOWN


def _d(t: Term, r: str) -> Term:
    if isinstance(t, RelVar):
        return UNIT if t.name == r else EMPTY
    if isinstance(t, Chi):
        return UNIT if t.rel == r else EMPTY
    if isinstance(t, Inverse):
        if isinstance(t.t, (RelVar, Chi)):
            name = t.t.name if isinstance(t.t, RelVar) else t.t.rel
            return INVERSE_UNIT if name == r else EMPTY
        return Inverse(_d(t.t, r))
    if isinstance(t, (CartesianConst, Identity, Var, Const, Empty, Not)):
        return EMPTY
    if isinstance(t, Union):
        return Union(_d(t.a, r), _d(t.b, r))
    if isinstance(t, Compose):
        return Union(Compose(_d(t.a, r), t.b), Compose(t.a, _d(t.b, r)))
    if isinstance(t, Intersection):
        return Union(Intersection(_d(t.a, r), t.b), Intersection(t.a, _d(t.b, r)))
    if isinstance(t, Psi):
        if t.b is None:
            return Psi(t.op, _d(t.a, r))
        return Union(Psi(t.op, _d(t.a, r), t.b), Psi(t.op, t.a, _d(t.b, r)))
    if isinstance(t, Phi):
        return Union(Phi(t.cmp, _d(t.a, r), t.b), Phi(t.cmp, t.a, _d(t.b, r)))
    if isinstance(t, LambdaBind):
        return Union(LambdaBind(t.z, _d(t.t1, r), t.t2), LambdaBind(t.z, t.t1, _d(t.t2, r)))
    if isinstance(t, IfTest):
        return union_all([
            IfTest(_d(t.phi, r), t.then, t.else_),
            Compose(_d(t.then, r), t.phi),
            Compose(_d(t.else_, r), complement(t.phi)),
        ])
    if isinstance(t, SetFormer):
        # the filter's derivative is taken at members, so it is brought back through t1
        return Compose(t, Projection(Union(_d(t.t1, r), Compose(_d(t.t2, r), t.t1))))
    if isinstance(t, SetExpansion):
        return Compose(t, Projection(_d(t.t, r)))
    if isinstance(t, PrevLambda):
        return PrevLambda(t.z, t.rel, _d(t.body, r)) if t.rel == r else EMPTY
    raise TypeError(f"cannot differentiate {type(t).__name__}")


def _drop_chi(t: Term) -> Term:
    # an event filter that was not differentiated contributes nothing
    if isinstance(t, Chi):
        return EMPTY
    kids = t.children()
    if not kids:
        return t
    return rebuild(t, [_drop_chi(c) for c in kids])


def differentiate(t: Term, rel: Any) -> Term:
    """The derivative of t with respect to ``rel`` (a name or a declaration)."""
    name = rel if isinstance(rel, str) else rel.name
    return prune(_drop_chi(prune(_d(t, name))))


def eval_deriv_pairs(
    d: Term,
    store,
    a: Any,
    b: Any,
    last: Any = UNKNOWN,
    rel: str = "",
    bases: Iterable[Any] | None = None,
    prev=None,
) -> list[tuple[Any, Any, dict]]:
    """Every (x, y, env) produced by d at the update pair (a, b), evaluated on ``store``.

    ``store`` holds the valuation after the update; ``last`` is the value
    R(a) had before it.
    """
    if bases is None:
        bases = list(dict.fromkeys([a, b] + list(store.universe())))
    else:
        bases = list(bases)
    ctx = EvalContext(store, prev, Delta(rel, a, b, last), bases)
    out = []
    for x in bases:
        for y, env in pairs(d, ctx, x, {}):
            out.append((x, y, env))
    return out


def eval_deriv(
    d: Term,
    store,
    a: Any,
    b: Any,
    last: Any = UNKNOWN,
    rel: str = "",
    bases: Iterable[Any] | None = None,
    prev=None,
) -> set[tuple[Any, Any]]:
    return {(x, y) for x, y, _ in eval_deriv_pairs(d, store, a, b, last, rel, bases, prev)}


__all__ = ["differentiate", "eval_deriv", "eval_deriv_pairs"]
