"""Abstract syntax tree for the rule language.

Source locations are carried on every node but excluded from equality, so
two parses of pretty-printed text compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

from ..errors import Loc


def _loc():
    return field(default=None, compare=False, repr=False, kw_only=True)


# -- type expressions --------------------------------------------------------


@dataclass
class TName:
    name: str
    loc: Loc | None = _loc()


@dataclass
class TInterval:
    lo: "Expr"
    hi: "Expr"
    loc: Loc | None = _loc()


@dataclass
class TSet:
    """``set<T>`` (multi-valued) or ``set[T]`` (a mono set value)."""

    elem: "TypeExpr"
    multi: bool = True
    loc: Loc | None = _loc()


TypeExpr = Union[TName, TInterval, TSet]


# -- expressions and statements ---------------------------------------------


@dataclass
class Name:
    id: str
    loc: Loc | None = _loc()


@dataclass
class Lit:
    value: Any
    loc: Loc | None = _loc()


@dataclass
class Dot:
    obj: "Expr"
    attr: str
    loc: Loc | None = _loc()


@dataclass
class Index:
    name: str
    args: list["Expr"]
    loc: Loc | None = _loc()


@dataclass
class Call:
    fn: str
    args: list["Expr"]
    loc: Loc | None = _loc()


@dataclass
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Loc | None = _loc()


@dataclass
class Neg:
    operand: "Expr"
    loc: Loc | None = _loc()


@dataclass
class NotE:
    operand: "Expr"
    loc: Loc | None = _loc()


@dataclass
class Interval:
    lo: "Expr"
    hi: "Expr"
    loc: Loc | None = _loc()


@dataclass
class SetFormer:
    """``{v in S | P}`` selection."""

    var: str
    src: "Expr"
    cond: "Expr"
    loc: Loc | None = _loc()


@dataclass
class Image:
    """``{f(v) | v in S}`` or ``list{f(v) | v in S}``."""

    expr: "Expr"
    var: str
    src: "Expr"
    is_list: bool = False
    loc: Loc | None = _loc()


@dataclass
class SetLit:
    items: list["Expr"]
    loc: Loc | None = _loc()


@dataclass
class Quant:
    """``exists(v in S | P)`` or ``some(v in S | P)``."""

    kind: str
    var: str
    src: "Expr"
    cond: "Expr"
    loc: Loc | None = _loc()


@dataclass
class If:
    cond: "Expr"
    then: "Expr"
    else_: "Expr | None" = None
    loc: Loc | None = _loc()


@dataclass
class Let:
    bindings: list[tuple[str, "Expr"]]
    body: "Expr"
    loc: Loc | None = _loc()


@dataclass
class When:
    var: str
    value: "Expr"
    body: "Expr"
    else_: "Expr | None" = None
    loc: Loc | None = _loc()


@dataclass
class For:
    var: str
    src: "Expr"
    body: "Expr"
    loc: Loc | None = _loc()


@dataclass
class While:
    cond: "Expr"
    body: "Expr"
    loc: Loc | None = _loc()


@dataclass
class Seq:
    items: list["Expr"]
    loc: Loc | None = _loc()


@dataclass
class Assign:
    """``target op value`` with op in ``:=  :add  :delete  :=+  :=-``."""

    target: "Expr"
    op: str
    value: "Expr"
    loc: Loc | None = _loc()


@dataclass
class New:
    cls: str
    inits: list[tuple[str, "Expr"]]
    loc: Loc | None = _loc()


Expr = Union[
    Name, Lit, Dot, Index, Call, BinOp, Neg, NotE, Interval, SetFormer, Image,
    SetLit, Quant, If, Let, When, For, While, Seq, Assign, New,
]
Stmt = Expr


# -- assertions ---------------------------------------------------------------


@dataclass
class ACmp:
    op: str
    left: Expr
    right: Expr
    loc: Loc | None = _loc()


@dataclass
class AInst:
    var: str
    cls: str
    loc: Loc | None = _loc()


@dataclass
class AEvent:
    """``x.r := e`` or ``x.r := (new <- prev)``."""

    target: Expr
    value: Expr
    prev: str | None = None
    loc: Loc | None = _loc()


@dataclass
class AExists:
    var: str
    type: TypeExpr | None
    body: "Assertion"
    loc: Loc | None = _loc()


@dataclass
class ANot:
    body: "Assertion"
    loc: Loc | None = _loc()


@dataclass
class AIf:
    cond: ACmp
    then: "Assertion"
    else_: "Assertion"
    loc: Loc | None = _loc()


@dataclass
class AAnd:
    left: "Assertion"
    right: "Assertion"
    loc: Loc | None = _loc()


@dataclass
class AOr:
    left: "Assertion"
    right: "Assertion"
    loc: Loc | None = _loc()


@dataclass
class ARel:
    """``r(a, b)``: b is a value of relation r at a."""

    rel: str
    left: Expr
    right: Expr
    loc: Loc | None = _loc()


@dataclass
class AMember:
    elem: Expr
    coll: Expr
    loc: Loc | None = _loc()


@dataclass
class ATruth:
    """A boolean expression used as an assertion (``e = true``)."""

    expr: Expr
    loc: Loc | None = _loc()


Assertion = Union[ACmp, AInst, AEvent, AExists, ANot, AIf, AAnd, AOr, ARel, AMember, ATruth]


# -- declarations ---------------------------------------------------------------


@dataclass
class SlotDecl:
    name: str
    type: TypeExpr
    default: Expr | None = None
    loc: Loc | None = _loc()


@dataclass
class ClassDecl:
    name: str
    parent: str
    slots: list[SlotDecl]
    loc: Loc | None = _loc()


@dataclass
class TableDecl:
    name: str
    params: list[tuple[str, TypeExpr]]
    range: TypeExpr
    default: Expr | None = None
    loc: Loc | None = _loc()


@dataclass
class GlobalDecl:
    name: str
    value: Expr
    loc: Loc | None = _loc()


@dataclass
class EventDecl:
    kind: str  # "event" | "noevent"
    names: list[str]
    loc: Loc | None = _loc()


@dataclass
class StoreDecl:
    names: list[str]
    loc: Loc | None = _loc()


@dataclass
class InverseDecl:
    left: str
    right: str
    loc: Loc | None = _loc()


@dataclass
class RuleDecl:
    name: str
    params: list[tuple[str, TypeExpr]]
    cond: Assertion
    conclusion: Stmt
    mode: str | int = "default"
    loc: Loc | None = _loc()

    def __hash__(self) -> int:
        return hash(self.name)


@dataclass
class ProcDecl:
    name: str
    params: list[tuple[str, TypeExpr]]
    ret: TypeExpr | None
    body: Expr
    loc: Loc | None = _loc()


@dataclass
class RelDecl:
    """A binary relation: a class slot or a table."""

    name: str
    kind: str  # "slot" | "table"
    domain: Any  # values.Type
    range: Any  # values.Type; for multi relations the member type
    multi: bool
    default: Any = None
    inverse: str | None = None
    defeasible: bool = False
    set_valued: bool = False  # mono relation whose values are sets
    arity: int = 1

    def __hash__(self) -> int:
        return hash(self.name)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RelDecl) and other.name == self.name


Decl = Union[ClassDecl, TableDecl, GlobalDecl, EventDecl, StoreDecl, InverseDecl, RuleDecl, ProcDecl]


@dataclass
class Program:
    """Parsed unit. ``items`` keeps every top-level form in source order."""

    items: list[Any] = field(default_factory=list)
    schema: Any = field(default=None, compare=False, repr=False)

    @property
    def relations(self) -> list[RelDecl]:
        if self.schema is None:
            return []
        return list(self.schema.relations.values())

    @property
    def classes(self) -> list[ClassDecl]:
        return [i for i in self.items if isinstance(i, ClassDecl)]

    @property
    def tables(self) -> list[TableDecl]:
        return [i for i in self.items if isinstance(i, TableDecl)]

    @property
    def rules(self) -> list[RuleDecl]:
        return [i for i in self.items if isinstance(i, RuleDecl)]

    @property
    def events(self) -> list[EventDecl | RuleDecl]:
        """Event declarations interleaved with rules, in declaration order."""
        return [i for i in self.items if isinstance(i, (EventDecl, RuleDecl))]

    @property
    def procs(self) -> list[ProcDecl]:
        return [i for i in self.items if isinstance(i, ProcDecl)]

    @property
    def globals(self) -> list[GlobalDecl]:
        return [i for i in self.items if isinstance(i, GlobalDecl)]

    @property
    def statements(self) -> list[Expr]:
        return [i for i in self.items if not isinstance(i, DECL_TYPES)]

    def rule(self, name: str) -> RuleDecl:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


DECL_TYPES = (ClassDecl, TableDecl, GlobalDecl, EventDecl, StoreDecl, InverseDecl, RuleDecl, ProcDecl)
