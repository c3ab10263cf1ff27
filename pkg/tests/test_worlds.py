import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deltarules import worlds
from deltarules.errors import Contradiction, WorldError
from deltarules.frontend import parse_program
from deltarules.store import Store

SCHEMA = """
cell <: object(v:integer = 0, tags:set<integer>, note:integer = 0)
store(v, tags)
"""


def make():
    s = Store(parse_program(SCHEMA).schema)
    cells = [s.create_instance("cell") for _ in range(3)]
    return s, cells


def test_backtrack_restores_writes():
    s, (a, b, _) = make()
    before = s.snapshot()
    assert worlds.choice(s) == 1
    s.raw_put("v", a, 5)
    s.raw_add("tags", b, 7)
    assert worlds.backtrack(s) == 0
    assert s.snapshot() == before


def test_commit_keeps_writes_and_lowers_world():
    s, (a, _, _) = make()
    worlds.choice(s)
    worlds.choice(s)
    s.raw_put("v", a, 9)
    assert worlds.commit(s) == 1
    assert s.raw_get("v", a) == 9
    # the committed write now belongs to world 1 and still backtracks with it
    worlds.backtrack(s)
    assert s.raw_get("v", a) == 0


def test_world_zero_cannot_backtrack_or_commit():
    s, _ = make()
    with pytest.raises(WorldError):
        worlds.backtrack(s)
    with pytest.raises(WorldError):
        worlds.commit(s)


def test_world_set_returns_to_level():
    s, (a, _, _) = make()
    for i in range(4):
        worlds.choice(s)
        s.raw_put("v", a, i + 1)
    worlds.world_set(s, 1)
    assert worlds.world(s) == 1 and s.raw_get("v", a) == 1
    with pytest.raises(WorldError):
        worlds.world_set(s, 3)


def test_branch_keeps_world_on_success_and_rolls_back_on_failure():
    s, (a, _, _) = make()

    def ok():
        s.raw_put("v", a, 1)
        return True

    def bad():
        s.raw_put("v", a, 2)
        raise Contradiction("no")

    assert worlds.branch(s, ok) is True
    assert worlds.world(s) == 1
    assert worlds.branch(s, bad) is False
    assert worlds.world(s) == 1 and s.raw_get("v", a) == 1
    assert worlds.branch(s, lambda: False) is False


def test_non_defeasible_write_warns_once():
    s, (a, _, _) = make()
    worlds.choice(s)
    s.raw_put("note", a, 1)
    s.raw_put("note", a, 2)
    worlds.backtrack(s)
    assert s.raw_get("note", a) == 2
    assert len(s.warnings) == 1 and "not defeasible" in s.warnings[0]


def test_listener_sees_transitions():
    s, _ = make()
    seen = []
    s.trail.listener = lambda op, n: seen.append((op, n))
    worlds.choice(s)
    worlds.choice(s)
    worlds.commit(s)
    worlds.backtrack(s)
    assert seen == [("choice", 1), ("choice", 2), ("commit", 1), ("backtrack", 0)]


ops = st.lists(
    st.tuples(st.sampled_from(["put", "add", "del", "choice", "backtrack", "commit"]),
              st.integers(0, 2), st.integers(0, 4)),
    max_size=40,
)


@settings(max_examples=200, deadline=None)
@given(ops)
def test_backtracking_every_world_restores_base_snapshot(script):
    s, cells = make()
    worlds.choice(s)
    snaps = [s.snapshot()]
    for op, i, v in script:
        c = cells[i]
        if op == "put":
            s.raw_put("v", c, v)
        elif op == "add":
            s.raw_add("tags", c, v)
        elif op == "del":
            s.delete_multi("tags", c, v)
        elif op == "choice":
            worlds.choice(s)
            snaps.append(s.snapshot())
        elif op == "backtrack" and worlds.world(s) > 1:
            worlds.backtrack(s)
            assert s.snapshot() == snaps.pop()
        elif op == "commit" and worlds.world(s) > 1:
            worlds.commit(s)
            snaps.pop()
    worlds.world_set(s, 0)
    assert s.snapshot() == snaps[0]
