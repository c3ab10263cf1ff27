"""Runtime values: entities, the ``unknown`` marker, ordered sets and types."""

from __future__ import annotations

from typing import Any, Iterable, Iterator

from .errors import InfiniteDomain


class _Unknown:
    __slots__ = ()

    def __repr__(self) -> str:
        return "unknown"

    def __reduce__(self):
        return (_unknown, ())


def _unknown():
    return UNKNOWN


UNKNOWN = object.__new__(_Unknown)


def known(v: Any) -> bool:
    return v is not UNKNOWN


class Entity:
    """An object instance. Identity is the creation number."""

    __slots__ = ("id", "cls", "name")

    def __init__(self, id: int, cls: "ClassInfo", name: str | None = None):
        self.id = id
        self.cls = cls
        self.name = name

    def __repr__(self) -> str:
        return self.name or f"{self.cls.name}{self.id}"

    def __lt__(self, other: "Entity") -> bool:
        return self.id < other.id


class OrderedSet:
    """Immutable duplicate-free collection that remembers insertion order."""

    __slots__ = ("_items", "_hash")

    def __init__(self, items: Iterable[Any] = ()):
        self._items = dict.fromkeys(items)
        self._hash = None

    def __iter__(self) -> Iterator[Any]:
        return iter(self._items)

    def __contains__(self, item: Any) -> bool:
        try:
            return item in self._items
        except TypeError:
            return False

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, OrderedSet):
            return self._items.keys() == other._items.keys()
        if isinstance(other, (set, frozenset)):
            return self._items.keys() == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._items))
        return self._hash

    def __repr__(self) -> str:
        return "{" + ", ".join(render(v) for v in self._items) + "}"


class ClassInfo:
    """Runtime view of a class declaration."""

    def __init__(self, name: str, parent: "ClassInfo | None"):
        self.name = name
        self.parent = parent
        self.children: list[ClassInfo] = []
        self.slots: dict[str, Any] = {}
        if parent is not None:
            parent.children.append(self)

    def ancestors(self) -> list["ClassInfo"]:
        """Self first, then parents up to the root."""
        out = []
        c: ClassInfo | None = self
        while c is not None:
            out.append(c)
            c = c.parent
        return out

    def is_subclass(self, other: "ClassInfo") -> bool:
        c: ClassInfo | None = self
        while c is not None:
            if c is other:
                return True
            c = c.parent
        return False

    def __repr__(self) -> str:
        return self.name


# -- types ---------------------------------------------------------------


class Type:
    name: str = "any"
    finite = False

    def contains(self, v: Any) -> bool:
        raise NotImplementedError

    def enumerate(self, store) -> Iterable[Any]:
        raise InfiniteDomain(f"cannot enumerate {self.name}")

    def subtype_of(self, other: "Type") -> bool:
        return other is ANY or self == other

    def __repr__(self) -> str:
        return self.name


class PrimType(Type):
    def __init__(self, name: str):
        self.name = name

    def contains(self, v: Any) -> bool:
        if self.name == "any":
            return v is not UNKNOWN
        if self.name == "integer":
            return isinstance(v, int) and not isinstance(v, bool)
        if self.name == "boolean":
            return isinstance(v, bool)
        if self.name == "string":
            return isinstance(v, str)
        if self.name == "float":
            return isinstance(v, (int, float)) and not isinstance(v, bool)
        if self.name == "set":
            return isinstance(v, OrderedSet)
        if self.name == "list":
            return isinstance(v, list)
        return False

    def enumerate(self, store) -> Iterable[Any]:
        if self.name == "boolean":
            return [False, True]
        raise InfiniteDomain(f"cannot enumerate {self.name}")

    @property
    def finite(self) -> bool:  # type: ignore[override]
        return self.name == "boolean"

    def subtype_of(self, other: Type) -> bool:
        if other is ANY or other == self:
            return True
        return self.name == "integer" and isinstance(other, PrimType) and other.name == "float"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrimType) and other.name == self.name

    def __hash__(self) -> int:
        return hash(("prim", self.name))


ANY = PrimType("any")
INTEGER = PrimType("integer")
BOOLEAN = PrimType("boolean")
STRING = PrimType("string")


class ClassType(Type):
    finite = True

    def __init__(self, cls: ClassInfo):
        self.cls = cls
        self.name = cls.name

    def contains(self, v: Any) -> bool:
        return isinstance(v, Entity) and v.cls.is_subclass(self.cls)

    def enumerate(self, store) -> Iterable[Any]:
        return store.instances(self.cls)

    def subtype_of(self, other: Type) -> bool:
        if other is ANY:
            return True
        return isinstance(other, ClassType) and self.cls.is_subclass(other.cls)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ClassType) and other.cls is self.cls

    def __hash__(self) -> int:
        return hash(("class", self.name))


class IntervalType(Type):
    finite = True

    def __init__(self, lo: int, hi: int, alias: str | None = None):
        self.lo = lo
        self.hi = hi
        self.alias = alias
        self.name = alias or f"({lo} .. {hi})"

    def contains(self, v: Any) -> bool:
        return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi

    def enumerate(self, store=None) -> Iterable[Any]:
        return range(self.lo, self.hi + 1)

    def subtype_of(self, other: Type) -> bool:
        if other is ANY or other == INTEGER:
            return True
        return isinstance(other, IntervalType) and other.lo <= self.lo and self.hi <= other.hi

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IntervalType) and (other.lo, other.hi) == (self.lo, self.hi)

    def __hash__(self) -> int:
        return hash(("interval", self.lo, self.hi))


class SetOfType(Type):
    """``set<T>``: members of a multi-valued relation, or a set value."""

    def __init__(self, elem: Type):
        self.elem = elem
        self.name = f"set<{elem.name}>"

    def contains(self, v: Any) -> bool:
        return isinstance(v, OrderedSet) and all(self.elem.contains(x) for x in v)

    def subtype_of(self, other: Type) -> bool:
        if other is ANY:
            return True
        if isinstance(other, PrimType) and other.name == "set":
            return True
        return isinstance(other, SetOfType) and self.elem.subtype_of(other.elem)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SetOfType) and other.elem == self.elem

    def __hash__(self) -> int:
        return hash(("setof", self.elem))


class TupleKeyType(Type):
    """Paired key of a two-argument table."""

    finite = True

    def __init__(self, parts: list[Type]):
        self.parts = parts
        self.name = "(" + " x ".join(p.name for p in parts) + ")"

    def contains(self, v: Any) -> bool:
        return (
            isinstance(v, tuple)
            and len(v) == len(self.parts)
            and all(p.contains(x) for p, x in zip(self.parts, v))
        )

    def enumerate(self, store) -> Iterable[Any]:
        import itertools

        return itertools.product(*[list(p.enumerate(store)) for p in self.parts])


# -- rendering ---------------------------------------------------------------


def render(v: Any) -> str:
    """Deterministic textual form of a value (used by dumps and traces)."""
    if v is UNKNOWN:
        return "unknown"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, OrderedSet):
        return "{" + ", ".join(render(x) for x in sorted(v, key=sort_key)) + "}"
    if isinstance(v, list):
        return "list(" + ", ".join(render(x) for x in v) + ")"
    if isinstance(v, tuple):
        return "(" + ", ".join(render(x) for x in v) + ")"
    return repr(v)


def sort_key(v: Any):
    """Total order over heterogeneous values, stable across runs."""
    if v is UNKNOWN:
        return (0, 0)
    if isinstance(v, bool):
        return (1, int(v))
    if isinstance(v, (int, float)):
        return (2, v)
    if isinstance(v, str):
        return (3, v)
    if isinstance(v, Entity):
        return (4, v.id)
    if isinstance(v, tuple):
        return (5, tuple(sort_key(x) for x in v))
    if isinstance(v, OrderedSet):
        return (6, tuple(sorted(sort_key(x) for x in v)))
    if isinstance(v, list):
        return (7, tuple(sort_key(x) for x in v))
    return (8, repr(v))
