"""Staged evaluation of terms: each term is turned once into a closure.

A compiled term is called as ``f(x, env, k)`` and calls ``k(y, env)`` for
every y related to x, in the style of a continuation: composition
``a o b`` becomes "run b, and for each result run a". The update pair of
the event being propagated lives in a shared ``DeltaCell``.
"""

from __future__ import annotations

from typing import Any, Callable, Iterable

from ..algebra.evaluate import complement
from ..algebra.invert import superset_inverse
from ..algebra.knowledge import KNOWLEDGE, apply_op
from ..algebra.terms import (
    CartesianConst, Chi, Compose, Const, Empty, Identity, IfTest, Intersection, Inverse,
    InverseUnit, LambdaBind, Not, Phi, PrevLambda, Projection, Psi, RelVar, SetExpansion,
    SetFormer, Term, Union, Unit, Var, has_delta,
)
from ..errors import NotInvertible
from ..values import UNKNOWN, Entity, OrderedSet, Type

Fn = Callable[[Any, dict, Callable[[Any, dict], None]], None]
_MISS = object()


class DeltaCell:
    __slots__ = ("rel", "a", "b", "last")

    def __init__(self) -> None:
        self.rel = ""
        self.a = self.b = self.last = UNKNOWN


class _Found(Exception):
    pass


def _found(v, e):
    raise _Found


def nonempty(f: Fn, x: Any, env: dict) -> bool:
    try:
        f(x, env, _found)
    except _Found:
        return True
    return False


def collect(f: Fn, x: Any, env: dict) -> list[tuple[Any, dict]]:
    out: list = []
    f(x, env, lambda v, e: out.append((v, e)))
    return out


def _members(v: Any, store) -> Iterable[Any]:
    if isinstance(v, (OrderedSet, list, tuple)):
        return v
    if isinstance(v, Type):
        return list(v.enumerate(store))
    return ()


class Stager:
    def __init__(self, store, cell: DeltaCell):
        self.store = store
        self.cell = cell

    # -- forward evaluation -------------------------------------------------------

    def compile(self, t: Term) -> Fn:
        m = getattr(self, "_" + type(t).__name__)
        return m(t)

    def _RelVar(self, t: RelVar) -> Fn:
        return self._relation(t.name)

    def _Chi(self, t: Chi) -> Fn:
        return self._relation(t.rel)

    def _relation(self, name: str) -> Fn:
        store = self.store
        if name.startswith("::"):
            cls = store.schema.classes[name[2:]]

            def inst(x, env, k):
                if isinstance(x, Entity) and x.cls.is_subclass(cls):
                    k(x, env)
            return inst
        rel = store.relations[name]
        ext = store.extents[name]
        if rel.multi:
            def multi(x, env, k):
                s = ext.get(x)
                if s:
                    for v in tuple(s):
                        k(v, env)
            return multi
        default, dom = rel.default, rel.domain

        def mono(x, env, k):
            v = ext.get(x, _MISS)
            if v is _MISS:
                if default is UNKNOWN or not dom.contains(x):
                    return
                v = default
            if v is not UNKNOWN:
                k(v, env)
        return mono

    def _Inverse(self, t: Inverse) -> Fn:
        inner = t.t
        if isinstance(inner, (RelVar, Chi)):
            name = inner.name if isinstance(inner, RelVar) else inner.rel
            if name.startswith("::"):
                return self._relation(name)
            store = self.store
            rel = store.relations[name]

            def inv(y, env, k):
                try:
                    keys = store.keys_with(rel, y)
                except TypeError:
                    return
                for w in keys:
                    k(w, env)
            return inv
        if isinstance(inner, Unit):
            return self._InverseUnit(InverseUnit())
        if isinstance(inner, InverseUnit):
            return self._Unit(Unit())
        if isinstance(inner, Inverse):
            return self.compile(inner.t)
        # no formula: scan the store for inputs reaching y
        f = self.compile(inner)
        store = self.store

        def scan(y, env, k):
            for w in store.universe():
                if any(v == y for v, _ in collect(f, w, env)):
                    k(w, env)
        return scan

    def _Identity(self, t) -> Fn:
        def ident(x, env, k):
            k(x, env)
        return ident

    def _Empty(self, t) -> Fn:
        def empty(x, env, k):
            return None
        return empty

    def _Var(self, t: Var) -> Fn:
        z = t.z

        def var(x, env, k):
            v = env.get(z, UNKNOWN)
            if v is not UNKNOWN:
                k(v, env)
        return var

    def _Const(self, t: Const) -> Fn:
        if t.ref is not None:
            globs, ref = self.store.globals, t.ref

            def glob(x, env, k):
                v = globs.get(ref, UNKNOWN)
                if v is not UNKNOWN:
                    k(v, env)
            return glob
        value = t.value

        def const(x, env, k):
            if value is not UNKNOWN:
                k(value, env)
        return const

    def _Unit(self, t) -> Fn:
        cell = self.cell

        def unit(x, env, k):
            if x == cell.a:
                k(cell.b, env)
        return unit

    def _InverseUnit(self, t) -> Fn:
        cell = self.cell

        def inv_unit(x, env, k):
            if x == cell.b:
                k(cell.a, env)
        return inv_unit

    def _Union(self, t: Union) -> Fn:
        fa, fb = self.compile(t.a), self.compile(t.b)

        def union(x, env, k):
            fa(x, env, k)
            fb(x, env, k)
        return union

    def _Intersection(self, t: Intersection) -> Fn:
        fa, fb = self.compile(t.a), self.compile(t.b)

        def inter(x, env, k):
            right = [v for v, _ in collect(fb, x, env)]
            for v, e in collect(fa, x, env):
                if v in right:
                    k(v, e)
        return inter

    def _Compose(self, t: Compose) -> Fn:
        fa, fb = self.compile(t.a), self.compile(t.b)

        def compose(x, env, k):
            fb(x, env, lambda z, e: fa(z, e, k))
        return compose

    def _CartesianConst(self, t: CartesianConst) -> Fn:
        dom, rng, store = t.dom, t.rng, self.store

        def cart(x, env, k):
            if dom.contains(x):
                for v in list(rng.enumerate(store)):
                    k(v, env)
        return cart

    def _Psi(self, t: Psi) -> Fn:
        op = t.op
        fa = self.compile(t.a)
        if t.b is None:
            def unary(x, env, k):
                for va, e in collect(fa, x, env):
                    v = apply_op(op, va)
                    if v is not UNKNOWN:
                        k(v, e)
            return unary
        fb = self.compile(t.b)

        def binary(x, env, k):
            for va, e1 in collect(fa, x, env):
                for vb, e2 in collect(fb, x, e1):
                    v = apply_op(op, va, vb)
                    if v is not UNKNOWN:
                        k(v, e2)
        return binary

    def _Phi(self, t: Phi) -> Fn:
        cmp = KNOWLEDGE.cmps[t.cmp]
        fa, fb = self.compile(t.a), self.compile(t.b)

        def phi(x, env, k):
            for va, e1 in collect(fa, x, env):
                for vb, _ in collect(fb, x, e1):
                    if va is not UNKNOWN and vb is not UNKNOWN and cmp(va, vb):
                        k(x, env)
                        return
        return phi

    def _Not(self, t: Not) -> Fn:
        f = self.compile(t.t)

        def neg(x, env, k):
            if not nonempty(f, x, env):
                k(x, env)
        return neg

    def _Projection(self, t: Projection) -> Fn:
        f = self.compile(t.t)

        def proj(x, env, k):
            if nonempty(f, x, env):
                k(x, env)
        return proj

    def _IfTest(self, t: IfTest) -> Fn:
        fp, fn = self.compile(t.phi), self.compile(complement(t.phi))
        f3, f4 = self.compile(t.then), self.compile(t.else_)

        def if_test(x, env, k):
            if nonempty(fp, x, env):
                f3(x, env, k)
            if nonempty(fn, x, env):
                f4(x, env, k)
        return if_test

    def _SetFormer(self, t: SetFormer) -> Fn:
        f1, f2, z = self.compile(t.t1), self.compile(t.t2), t.z

        def set_former(x, env, k):
            chosen: dict = {}
            for zv, e1 in collect(f1, x, env):
                if zv not in chosen and nonempty(f2, zv, {**e1, z: zv}):
                    chosen[zv] = None
            k(OrderedSet(chosen), env)
        return set_former

    def _SetExpansion(self, t: SetExpansion) -> Fn:
        f, store = self.compile(t.t), self.store

        def expand(x, env, k):
            for v, e in collect(f, x, env):
                for m in _members(v, store):
                    k(m, e)
        return expand

    def _LambdaBind(self, t: LambdaBind) -> Fn:
        f1, f2, z = self.compile(t.t1), self.compile(t.t2), t.z

        def lam(x, env, k):
            for v, e in collect(f1, x, env):
                e2 = dict(e)
                e2[z] = v
                f2(x, e2, k)
        return lam

    def _PrevLambda(self, t: PrevLambda) -> Fn:
        body, z, cell, store = self.compile(t.body), t.z, self.cell, self.store
        rel = store.relations[t.rel]
        ext, default = store.extents[t.rel], rel.default

        def prev(x, env, k):
            if cell.rel == rel.name and x == cell.a:
                v = cell.last
            else:
                v = ext.get(x, default)
            e2 = dict(env)
            e2[z] = v
            body(x, e2, k)
        return prev

    # -- candidate inputs ------------------------------------------------------------

    def candidates(self, t: Term) -> Callable[[], Iterable[Any]] | None:
        """Inputs at which t can yield anything for the current update.

        None means the analysis gives up and every input must be tried.
        """
        cell = self.cell
        if isinstance(t, Unit):
            return lambda: (cell.a,)
        if isinstance(t, InverseUnit):
            return lambda: (cell.b,)
        if isinstance(t, Compose):
            if has_delta(t.b):
                return self.candidates(t.b)
            inner = self.candidates(t.a)
            if inner is None:
                return None
            try:
                inv = self.compile(superset_inverse(t.b))
            except NotInvertible:
                return None

            def through(inner=inner, inv=inv):
                out: dict = {}
                for z in inner():
                    inv(z, {}, lambda w, e: out.setdefault(w))
                return out
            return through
        if isinstance(t, LambdaBind):
            return self.candidates(t.t1 if has_delta(t.t1) else t.t2)
        if isinstance(t, (PrevLambda, Projection)):
            return self.candidates(t.children()[0])
        if isinstance(t, (Union, Intersection, Psi, Phi, IfTest)):
            kids = [c for c in t.children() if has_delta(c)]
            if isinstance(t, Intersection):
                kids = kids[:1]
            plans = [self.candidates(c) for c in kids]
            if any(p is None for p in plans):
                return None
            if len(plans) == 1:
                return plans[0]

            def merged(plans=plans):
                out: dict = {}
                for p in plans:
                    for x in p():
                        out.setdefault(x)
                return out
            return merged
        if isinstance(t, Empty):
            return lambda: ()
        return None


__all__ = ["DeltaCell", "Stager", "collect", "nonempty"]
