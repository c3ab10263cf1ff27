"""Algebraic knowledge about binary operations and comparisons.

Translation uses the structure tags to isolate an unknown operand:
a group op has a full inverse, a monoid op only a partial one guarded
by a divisibility test.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Any, Callable

from ..values import UNKNOWN, IntervalType, OrderedSet, Type


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _divides(a: int, b: int) -> bool:
    # b divides a
    return b != 0 and a % b == 0


@dataclass(frozen=True)
class OpInfo:
    name: str
    fn: Callable[..., Any]
    structure: str = "plain"  # group | monoid | plain
    identity: Any = None
    # for x = a op b solved for a: a = inv(x, b); for b: b = inv_right(x, a)
    inv: str | None = None
    inv_right: str | None = None
    guard: str | None = None  # comparison that must hold before applying inv
    commutative: bool = False
    arity: int = 2


def _sub_rev(x, a):
    return a - x


@dataclass
class AlgebraKnowledge:
    ops: dict[str, OpInfo] = field(default_factory=dict)
    cmps: dict[str, Callable[[Any, Any], bool]] = field(default_factory=dict)
    complement: dict[str, str] = field(default_factory=dict)
    mirror: dict[str, str] = field(default_factory=dict)

    def op(self, name: str) -> OpInfo:
        return self.ops[name]

    def declare(self, info: OpInfo) -> None:
        self.ops[info.name] = info


def _equal(a: Any, b: Any) -> bool:
    # booleans only equal booleans, so true != 1
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    return a == b


def _member(v: Any, coll: Any) -> bool:
    if isinstance(coll, (OrderedSet, set, frozenset, list, tuple)):
        return v in coll
    if isinstance(coll, Type):
        return coll.contains(v)
    return False


def _safe(fn):
    def wrapped(*args):
        try:
            return fn(*args)
        except TypeError:
            return False
    return wrapped


def default_knowledge() -> AlgebraKnowledge:
    k = AlgebraKnowledge()
    for info in [
        OpInfo("+", operator.add, "group", 0, inv="-", inv_right="-", commutative=True),
        # x = a - b: a = x + b, b = a - x
        OpInfo("-", operator.sub, "group", 0, inv="+", inv_right="-rev"),
        OpInfo("-rev", _sub_rev),
        # x = a * b: a = x div b when b divides x
        OpInfo("*", operator.mul, "monoid", 1, inv="div", inv_right="div", guard="divides",
               commutative=True),
        OpInfo("div", operator.floordiv),
        OpInfo("div+", _ceil_div),
        OpInfo("mod", operator.mod),
        OpInfo("min", min, "monoid", commutative=True),
        OpInfo("max", max, "monoid", commutative=True),
        OpInfo("neg", operator.neg, arity=1),
        OpInfo("abs", abs, arity=1),
        OpInfo("size", len, arity=1),
        OpInfo("not", operator.not_, arity=1),
        OpInfo("pair", lambda a, b: (a, b)),
        OpInfo("interval", lambda a, b: IntervalType(a, b)),
    ]:
        k.declare(info)
    k.cmps = {
        "=": _equal,
        "!=": lambda a, b: not _equal(a, b),
        "<": _safe(operator.lt),
        ">": _safe(operator.gt),
        "<=": _safe(operator.le),
        ">=": _safe(operator.ge),
        "%": _member,
        "!%": lambda a, b: not _member(a, b),
        "divides": _safe(_divides),
    }
    k.complement = {"=": "!=", "!=": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">",
                    "%": "!%", "!%": "%"}
    k.mirror = {"=": "=", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}
    return k


KNOWLEDGE = default_knowledge()


def apply_op(name: str, *args: Any) -> Any:
    if any(a is UNKNOWN for a in args):
        return UNKNOWN
    try:
        return KNOWLEDGE.ops[name].fn(*args)
    except (TypeError, ZeroDivisionError):
        return UNKNOWN


def compare(cmp: str, a: Any, b: Any) -> bool:
    if a is UNKNOWN or b is UNKNOWN:
        return False
    return bool(KNOWLEDGE.cmps[cmp](a, b))
