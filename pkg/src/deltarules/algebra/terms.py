"""Terms of the relational algebra and of its differentiated (functional) form.

A term denotes a binary relation over values. Evaluated at an input x it
yields the values y with (x, y) in the relation. Terms are immutable and
compare structurally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator

from ..values import IntervalType, Type, render


class Term:
    __slots__ = ()

    def children(self) -> tuple["Term", ...]:
        return ()

    def __str__(self) -> str:
        return dump(self)


@dataclass(frozen=True)
class RelVar(Term):
    name: str


@dataclass(frozen=True)
class Inverse(Term):
    t: Term

    def children(self):
        return (self.t,)


@dataclass(frozen=True)
class CartesianConst(Term):
    """Every pair of (domain x range); maps any x in the domain to the whole range."""

    dom: Type
    rng: Type


@dataclass(frozen=True)
class Union(Term):
    a: Term
    b: Term

    def children(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class Intersection(Term):
    a: Term
    b: Term

    def children(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class Compose(Term):
    """``a o b``: apply b first, then a."""

    a: Term
    b: Term

    def children(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class Psi(Term):
    """Pointwise operation on the values of a and (optionally) b."""

    op: str
    a: Term
    b: Term | None = None

    def children(self):
        return (self.a,) if self.b is None else (self.a, self.b)


@dataclass(frozen=True)
class Phi(Term):
    """Sub-identity test: x is kept if some values of a and b compare."""

    cmp: str
    a: Term
    b: Term

    def children(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class Not(Term):
    """Sub-identity: x is kept if t yields nothing at x."""

    t: Term

    def children(self):
        return (self.t,)


@dataclass(frozen=True)
class IfTest(Term):
    phi: Term
    then: Term
    else_: Term

    def children(self):
        return (self.phi, self.then, self.else_)


@dataclass(frozen=True)
class SetFormer(Term):
    """One set value: the members z of t1(x) that pass the filter t2."""

    z: str
    t1: Term
    t2: Term

    def children(self):
        return (self.t1, self.t2)


@dataclass(frozen=True)
class SetExpansion(Term):
    """Flattens set values into their members."""

    t: Term

    def children(self):
        return (self.t,)


@dataclass(frozen=True)
class LambdaBind(Term):
    z: str
    t1: Term
    t2: Term

    def children(self):
        return (self.t1, self.t2)


@dataclass(frozen=True)
class Chi(Term):
    """Event filter on relation R; denotes R itself."""

    rel: str


@dataclass(frozen=True)
class PrevLambda(Term):
    """Binds z to the value R had at x before the current update."""

    z: str
    rel: str
    body: Term

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Var(Term):
    """Constant function returning the value bound to z."""

    z: str


@dataclass(frozen=True)
class Const(Term):
    """Constant function; ``ref`` names the global it was read from, if any."""

    value: Any
    ref: str | None = None


@dataclass(frozen=True)
class Empty(Term):
    pass


@dataclass(frozen=True)
class Identity(Term):
    pass


# -- differentiated terms only -------------------------------------------------


@dataclass(frozen=True)
class Unit(Term):
    """The update pair (a, b) itself."""


@dataclass(frozen=True)
class InverseUnit(Term):
    """The update pair reversed, (b, a)."""


@dataclass(frozen=True)
class Projection(Term):
    """First projection: x to x whenever t yields something at x."""

    t: Term

    def children(self):
        return (self.t,)


EMPTY = Empty()
IDENTITY = Identity()
UNIT = Unit()
INVERSE_UNIT = InverseUnit()


def rebuild(t: Term, kids: list[Term]) -> Term:
    """Copy of ``t`` with new children, in ``children()`` order."""
    if isinstance(t, Inverse):
        return Inverse(kids[0])
    if isinstance(t, (Union, Intersection, Compose)):
        return type(t)(kids[0], kids[1])
    if isinstance(t, Psi):
        return Psi(t.op, kids[0], kids[1] if len(kids) > 1 else None)
    if isinstance(t, Phi):
        return Phi(t.cmp, kids[0], kids[1])
    if isinstance(t, Not):
        return Not(kids[0])
    if isinstance(t, IfTest):
        return IfTest(kids[0], kids[1], kids[2])
    if isinstance(t, SetFormer):
        return SetFormer(t.z, kids[0], kids[1])
    if isinstance(t, SetExpansion):
        return SetExpansion(kids[0])
    if isinstance(t, LambdaBind):
        return LambdaBind(t.z, kids[0], kids[1])
    if isinstance(t, PrevLambda):
        return PrevLambda(t.z, t.rel, kids[0])
    if isinstance(t, Projection):
        return Projection(kids[0])
    return t


def walk(t: Term) -> Iterator[Term]:
    yield t
    for c in t.children():
        yield from walk(c)


def relations_in(t: Term) -> set[str]:
    out = set()
    for n in walk(t):
        if isinstance(n, (RelVar, Chi)):
            out.add(n.rel if isinstance(n, Chi) else n.name)
        elif isinstance(n, PrevLambda):
            out.add(n.rel)
    return out


def has_delta(t: Term) -> bool:
    return any(isinstance(n, (Unit, InverseUnit)) for n in walk(t))


def size(t: Term) -> int:
    return sum(1 for _ in walk(t))


def compose_chain(ts: list[Term]) -> Term:
    """Right-nested composition of a chain (first element applied last)."""
    if not ts:
        return IDENTITY
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Compose(t, out)
    return out


def union_all(ts: list[Term]) -> Term:
    if not ts:
        return EMPTY
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Union(t, out)
    return out


# -- ASCII dump ----------------------------------------------------------------------


def _type_name(t: Type) -> str:
    if isinstance(t, IntervalType):
        return t.alias or f"({t.lo} .. {t.hi})"
    return t.name


def _flat(t: Term, cls) -> list[Term]:
    if isinstance(t, cls):
        return _flat(t.a, cls) + _flat(t.b, cls)
    return [t]


def _operand(t: Term) -> str:
    """Dump of t as an operand of a binary operator."""
    s = dump(t)
    if isinstance(t, (Union, Intersection, Compose, LambdaBind, PrevLambda)):
        return f"({s})"
    return s


def _body(t: Term) -> str:
    s = dump(t)
    return f"({s})" if isinstance(t, (Union, Intersection)) else s


def dump(t: Term) -> str:
    if isinstance(t, RelVar):
        return t.name
    if isinstance(t, Var):
        return t.z
    if isinstance(t, Const):
        if t.ref is not None:
            return t.ref
        if isinstance(t.value, IntervalType):
            return _type_name(t.value)
        if isinstance(t.value, Type):
            return t.value.name
        return render(t.value)
    if isinstance(t, (Identity, Unit)):
        return "I"
    if isinstance(t, InverseUnit):
        return "I^-1"
    if isinstance(t, Empty):
        return "{}"
    if isinstance(t, Chi):
        return f"chi({t.rel})"
    if isinstance(t, Inverse):
        return f"{_operand(t.t)}^-1"
    if isinstance(t, CartesianConst):
        return f"({_type_name(t.dom)} x {_type_name(t.rng)})"
    if isinstance(t, Union):
        return " U ".join(_operand(x) for x in _flat(t, Union))
    if isinstance(t, Intersection):
        return " ^ ".join(_operand(x) for x in _flat(t, Intersection))
    if isinstance(t, Compose):
        parts = _flat(t, Compose)
        out = []
        for i, x in enumerate(parts):
            # a binder swallows everything to its right
            if isinstance(x, (LambdaBind, PrevLambda)) and i < len(parts) - 1:
                out.append(f"({dump(x)})")
            elif isinstance(x, (Union, Intersection)):
                out.append(f"({dump(x)})")
            else:
                out.append(dump(x))
        return " o ".join(out)
    if isinstance(t, Psi):
        if t.b is None:
            return f"psi[{t.op}]({dump(t.a)})"
        return f"psi[{t.op}]({dump(t.a)}, {dump(t.b)})"
    if isinstance(t, Phi):
        return f"phi[{t.cmp}]({dump(t.a)}, {dump(t.b)})"
    if isinstance(t, Not):
        return f"not({dump(t.t)})"
    if isinstance(t, IfTest):
        return f"if[{dump(t.phi)}]({dump(t.then)}, {dump(t.else_)})"
    if isinstance(t, SetFormer):
        return f"{{{t.z}:{dump(t.t1)}, {dump(t.t2)}}}"
    if isinstance(t, SetExpansion):
        return f"{_operand(t.t)}*"
    if isinstance(t, Projection):
        return f"pi({dump(t.t)})"
    if isinstance(t, LambdaBind):
        return f"lambda({t.z}:{_operand(t.t1)}).{_body(t.t2)}"
    if isinstance(t, PrevLambda):
        return f"lambda({t.z}:{t.rel}').{_body(t.body)}"
    raise TypeError(f"cannot dump {type(t).__name__}")
