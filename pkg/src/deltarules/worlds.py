"""Hypothetical worlds: a write trail with one mark per open world.

World 0 is the base world and is never trailed. ``choice`` opens a world,
``backtrack`` undoes every write made since the matching ``choice``, and
``commit`` keeps those writes while folding them into the enclosing world.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional

from .errors import Contradiction, WorldError

if TYPE_CHECKING:
    from .store import Store


@dataclass
class Trail:
    entries: list[tuple] = field(default_factory=list)
    marks: list[int] = field(default_factory=list)
    # called as listener(operation, new_world) by choice, backtrack and commit
    listener: Optional[Callable[[str, int], None]] = None

    @property
    def world(self) -> int:
        return len(self.marks)


def _notify(t: Trail, op: str) -> None:
    if t.listener is not None:
        t.listener(op, t.world)


def world(store: Store) -> int:
    return store.trail.world


def choice(store: Store) -> int:
    t = store.trail
    t.marks.append(len(t.entries))
    _notify(t, "choice")
    return t.world


def backtrack(store: Store) -> int:
    t = store.trail
    if not t.marks:
        raise WorldError("backtrack in world 0")
    mark = t.marks.pop()
    while len(t.entries) > mark:
        store.undo(t.entries.pop())
    if not t.marks:
        t.entries.clear()
    _notify(t, "backtrack")
    return t.world


def commit(store: Store) -> int:
    t = store.trail
    if not t.marks:
        raise WorldError("commit in world 0")
    t.marks.pop()
    if not t.marks:
        # back in the base world: nothing can be undone any more
        t.entries.clear()
    _notify(t, "commit")
    return t.world


def world_set(store: Store, n: int) -> int:
    """Backtrack until the current world is ``n`` (at most the current one)."""
    if not 0 <= n <= world(store):
        raise WorldError(f"cannot return to world {n} from world {world(store)}")
    while world(store) > n:
        backtrack(store)
    return n


def branch(store: Store, body: Callable[[], object]) -> bool:
    """Run ``body`` in a fresh world.

    A true result keeps the world (and any world opened inside it) and
    returns True. A false result or a contradiction rolls back to the world
    ``branch`` started from and returns False.
    """
    level = choice(store)
    try:
        result = body()
    except Contradiction:
        world_set(store, level - 1)
        return False
    if not result:
        world_set(store, level - 1)
        return False
    return True
