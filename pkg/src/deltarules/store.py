"""Object store: instances, relation extents, inverses and the write trail.

Everything here is event-silent. The demon engine wraps these primitives
to decide when rules fire.
"""

from __future__ import annotations

import logging
from typing import Any, Iterable, Iterator

from .errors import RangeError, StoreError, ValuationError
from .frontend.ast import RelDecl
from .frontend.schema import Schema
from .values import UNKNOWN, ClassInfo, Entity, OrderedSet, render, sort_key
from .worlds import Trail

log = logging.getLogger(__name__)

ABSENT = object()  # trail marker: the key had no explicit entry


class Store:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.relations = schema.relations
        self.extents: dict[str, dict] = {name: {} for name in schema.relations}
        self.rev: dict[str, dict] = {name: {} for name in schema.relations}
        self.instances_of: dict[str, list[Entity]] = {name: [] for name in schema.classes}
        self.globals: dict[str, Any] = dict(schema.consts)
        self.trail = Trail()
        self.next_id = 1
        self.warnings: list[str] = []
        self._warned: set[str] = set()
        # inverse pairs share defeasibility so undo stays symmetric
        for rel in self.relations.values():
            if rel.inverse and rel.defeasible:
                self.relations[rel.inverse].defeasible = True

    # -- lookup helpers ---------------------------------------------------------

    def rel(self, r: RelDecl | str) -> RelDecl:
        if isinstance(r, RelDecl):
            return r
        try:
            return self.relations[r]
        except KeyError:
            raise StoreError(f"unknown relation '{r}'") from None

    def check_key(self, rel: RelDecl, key: Any) -> None:
        if not rel.domain.contains(key):
            raise StoreError(f"{render(key)} is not in the domain of '{rel.name}' ({rel.domain.name})")

    def check_value(self, rel: RelDecl, v: Any) -> None:
        if v is UNKNOWN:
            return
        if not rel.range.contains(v):
            raise RangeError(f"{render(v)} is not in the range of '{rel.name}' ({rel.range.name})")

    # -- instances ----------------------------------------------------------------

    def instances(self, cls: ClassInfo | str) -> list[Entity]:
        name = cls if isinstance(cls, str) else cls.name
        return self.instances_of[name]

    def create_instance(
        self, cls: ClassInfo | str, inits: dict[str, Any] | None = None, name: str | None = None
    ) -> Entity:
        info = self.schema.classes[cls] if isinstance(cls, str) else cls
        inits = inits or {}
        slots: dict[str, RelDecl] = {}
        for c in reversed(info.ancestors()):
            slots.update(c.slots)
        for s in inits:
            if s not in slots:
                raise StoreError(f"class '{info.name}' has no slot '{s}'")
        for s, v in inits.items():
            rel = slots[s]
            for x in (v if rel.multi and isinstance(v, (OrderedSet, list, set)) else [v]):
                self.check_value(rel, x)
        e = Entity(self.next_id, info, name)
        self.next_id += 1
        for c in info.ancestors():
            self.instances_of[c.name].append(e)
        for s, rel in slots.items():
            if not rel.multi and rel.default is not UNKNOWN and s not in inits:
                self.raw_put(rel, e, rel.default)
        for s, v in inits.items():
            rel = slots[s]
            if rel.multi:
                for x in (v if isinstance(v, (OrderedSet, list, set)) else [v]):
                    self.raw_add(rel, e, x)
            else:
                self.raw_put(rel, e, v)
        return e

    def entities(self) -> list[Entity]:
        return list(self.instances_of["object"])

    # -- reads -----------------------------------------------------------------------

    def raw_get(self, r: RelDecl | str, key: Any) -> Any:
        rel = self.rel(r)
        self.check_key(rel, key)
        if rel.multi:
            return OrderedSet(self.extents[rel.name].get(key, ()))
        return self.extents[rel.name].get(key, rel.default)

    def get(self, rel: RelDecl, key: Any) -> Any:
        """Unchecked mono read (hot path)."""
        return self.extents[rel.name].get(key, rel.default)

    def members(self, rel: RelDecl, key: Any) -> Iterable[Any]:
        """Unchecked multi read; the returned view must not outlive a write."""
        return self.extents[rel.name].get(key, ())

    def has_member(self, rel: RelDecl, key: Any, v: Any) -> bool:
        s = self.extents[rel.name].get(key)
        return s is not None and v in s

    def keys_with(self, rel: RelDecl, v: Any) -> list[Any]:
        """Keys x with v in rel(x), including keys that only hold the default."""
        out = list(self.rev[rel.name].get(v, ()))
        if not rel.multi and v is not UNKNOWN and v == rel.default and rel.domain.finite:
            ext = self.extents[rel.name]
            out.extend(k for k in rel.domain.enumerate(self) if k not in ext)
        return out

    def explicit_keys(self, rel: RelDecl) -> list[Any]:
        return list(self.extents[rel.name])

    # -- writes ----------------------------------------------------------------------

    def raw_put(self, r: RelDecl | str, key: Any, v: Any) -> Any:
        """Mono write; returns the previous value (equal to ``v`` when nothing changed)."""
        rel = self.rel(r)
        if rel.multi:
            raise ValuationError(f"'{rel.name}' is multi-valued; use :add")
        self.check_key(rel, key)
        self.check_value(rel, v)
        old = self.get(rel, key)
        if old is v or (old == v and type(old) is type(v)):
            return old
        if rel.inverse is None:
            self._set(rel, key, v)
            return old
        inv = self.relations[rel.inverse]
        if old is not UNKNOWN:
            self._unpair(rel, inv, key, old)
        if v is not UNKNOWN:
            self._make_room(inv, rel, v, key)
            self._pair(rel, inv, key, v)
        return old

    def raw_add(self, r: RelDecl | str, key: Any, v: Any) -> bool:
        """Multi add; returns whether ``v`` was new."""
        rel = self.rel(r)
        if not rel.multi:
            raise ValuationError(f"'{rel.name}' is mono-valued; use :=")
        self.check_key(rel, key)
        self.check_value(rel, v)
        if self.has_member(rel, key, v):
            return False
        if rel.inverse is None:
            self._add(rel, key, v)
            return True
        inv = self.relations[rel.inverse]
        self._make_room(inv, rel, v, key)
        self._pair(rel, inv, key, v)
        return True

    def delete_multi(self, r: RelDecl | str, key: Any, v: Any) -> bool:
        rel = self.rel(r)
        if not rel.multi:
            raise ValuationError(f"'{rel.name}' is mono-valued; :delete needs a multi-valued relation")
        self.check_key(rel, key)
        if not self.has_member(rel, key, v):
            return False
        if rel.inverse is None:
            self._del(rel, key, v)
        else:
            self._unpair(rel, self.relations[rel.inverse], key, v)
        return True

    # -- inverse maintenance -------------------------------------------------------------

    def _pair(self, rel: RelDecl, inv: RelDecl, x: Any, y: Any) -> None:
        self._link(rel, x, y)
        self._link(inv, y, x)

    def _unpair(self, rel: RelDecl, inv: RelDecl, x: Any, y: Any) -> None:
        self._unlink(rel, x, y)
        self._unlink(inv, y, x)

    def _make_room(self, inv: RelDecl, rel: RelDecl, y: Any, x: Any) -> None:
        # a mono inverse holds one value: linking y to x drops its old partner
        if not inv.multi:
            other = self.get(inv, y)
            if other is not UNKNOWN and other != x:
                self._unpair(inv, rel, y, other)
        if not rel.multi:
            cur = self.get(rel, x)
            if cur is not UNKNOWN and cur != y:
                self._unpair(rel, inv, x, cur)

    def _link(self, rel: RelDecl, x: Any, y: Any) -> None:
        if rel.multi:
            if not self.has_member(rel, x, y):
                self._add(rel, x, y)
        else:
            self._set(rel, x, y)

    def _unlink(self, rel: RelDecl, x: Any, y: Any) -> None:
        if rel.multi:
            if self.has_member(rel, x, y):
                self._del(rel, x, y)
        elif self.get(rel, x) == y:
            self._set(rel, x, UNKNOWN)

    # -- lowest level: extent, reverse index, trail ----------------------------------------

    def _note(self, rel: RelDecl, record: tuple) -> None:
        if self.trail.marks:
            if rel.defeasible:
                self.trail.entries.append(record)
            elif rel.name not in self._warned:
                self._warned.add(rel.name)
                msg = f"'{rel.name}' is not defeasible; its updates inside a world will not be undone"
                self.warnings.append(msg)
                log.warning(msg)

    def _set(self, rel: RelDecl, key: Any, v: Any, trail: bool = True) -> None:
        ext = self.extents[rel.name]
        rev = self.rev[rel.name]
        old = ext.get(key, ABSENT)
        if trail:
            self._note(rel, ("set", rel, key, old))
        if old is not ABSENT and old is not UNKNOWN:
            bucket = rev.get(old)
            if bucket is not None:
                bucket.pop(key, None)
                if not bucket:
                    del rev[old]
        if v is ABSENT:
            ext.pop(key, None)
            return
        ext[key] = v
        if v is not UNKNOWN:
            rev.setdefault(v, {})[key] = None

    def _add(self, rel: RelDecl, key: Any, v: Any, trail: bool = True) -> None:
        if trail:
            self._note(rel, ("add", rel, key, v))
        ext = self.extents[rel.name]
        s = ext.get(key)
        if s is None:
            s = ext[key] = {}
        s[v] = None
        self.rev[rel.name].setdefault(v, {})[key] = None

    def _del(self, rel: RelDecl, key: Any, v: Any, trail: bool = True) -> None:
        if trail:
            self._note(rel, ("del", rel, key, v))
        ext = self.extents[rel.name]
        s = ext[key]
        del s[v]
        if not s:
            del ext[key]
        bucket = self.rev[rel.name][v]
        del bucket[key]
        if not bucket:
            del self.rev[rel.name][v]

    def undo(self, record: tuple) -> None:
        kind, rel, key, v = record
        if kind == "set":
            self._set(rel, key, v, trail=False)
        elif kind == "add":
            self._del(rel, key, v, trail=False)
        else:
            self._add(rel, key, v, trail=False)

    # -- serialization ------------------------------------------------------------------------

    def snapshot(self) -> str:
        """Deterministic dump: sorted by relation name, then key."""
        lines = []
        for name in sorted(self.instances_of):
            ents = self.instances_of[name]
            if ents and name != "object":
                lines.append(f"instances {name} = [{', '.join(render(e) for e in ents)}]")
        for name in sorted(self.extents):
            rel = self.relations[name]
            ext = self.extents[name]
            for key in sorted(ext, key=sort_key):
                v = ext[key]
                if rel.multi:
                    text = "{" + ", ".join(render(m) for m in sorted(v, key=sort_key)) + "}"
                else:
                    text = render(v)
                lines.append(f"{name}[{render(key)}] = {text}")
        return "\n".join(lines) + ("\n" if lines else "")

    def universe(self) -> list[Any]:
        """Every entity plus every value and key appearing in an extent."""
        seen: dict[Any, None] = dict.fromkeys(self.entities())
        for name, ext in self.extents.items():
            rel = self.relations[name]
            for key, v in ext.items():
                for k in key if isinstance(key, tuple) else (key,):
                    seen.setdefault(k, None)
                for m in (v if rel.multi else (v,)):
                    if m is not UNKNOWN:
                        try:
                            seen.setdefault(m, None)
                        except TypeError:
                            pass
        return list(seen)


def iter_pairs(store: Store, rel: RelDecl) -> Iterator[tuple[Any, Any]]:
    """All (key, value) pairs of a relation, defaults of finite tables included."""
    ext = store.extents[rel.name]
    if rel.multi:
        for k, s in ext.items():
            for v in s:
                yield k, v
        return
    for k, v in ext.items():
        if v is not UNKNOWN:
            yield k, v
    if rel.default is not UNKNOWN and rel.domain.finite and rel.kind == "table":
        for k in rel.domain.enumerate(store):
            if k not in ext:
                yield k, rel.default
