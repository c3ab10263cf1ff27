import io

import pytest

from deltarules.bench import _set_const, corpus
from deltarules.errors import DSLError
from deltarules.frontend import parse_program
from deltarules.interp import Session
from deltarules.values import UNKNOWN

from conftest import brute_queens, program, session

COUNTER = """c <: object(v:integer = 0)
bump(k:c, n:integer) : boolean -> (k.v :=+ 1, n > 7)
"""


@pytest.fixture
def s():
    return session(COUNTER)


@pytest.mark.parametrize("expr,value", [
    ("{x in (1 .. 10) | x > 7}", {8, 9, 10}),
    ("list{x * x | x in (1 .. 3)}", [1, 4, 9]),
    ("some(x in (1 .. 10) | x > 7)", 8),
    ("size((1 .. 10) but 9)", 9),
    ("8 % ((1 .. 10) but 9)", True),
    ("9 ∈ ((1 .. 10) but 9)", False),
    ("{1, 2} U {3}", {1, 2, 3}),
    ("sum(list{x | x in (1 .. 4)})", 10),
    ("7 div+ 2", 4),
    ("-7 div+ 2", -3),
    ("let y := 3 in y + 1", 4),
    ("for x in {} print(x)", True),
])
def test_expressions(s, expr, value):
    assert s.exec(expr) == value


def test_if_without_else_is_unknown(s):
    assert s.exec("if (1 = 2) 3") is UNKNOWN


def test_exists_stops_at_first_witness(s):
    s.exec("k := c()")
    assert s.exec("exists(x in (1 .. 10) | bump(k, x))") is True
    assert s.exec("k.v") == 8


def test_but_membership_does_not_materialize(s):
    s.exec("a := c()")
    s.exec("b := c()")
    before = s.interp.counters.materialized
    assert s.exec("b % (c but a)") is True
    assert s.exec("a % (c but a)") is False
    assert s.interp.counters.materialized == before
    assert s.exec("exists(x in (c but a) | x = b)") is True
    assert s.interp.counters.materialized == before + 1


def test_print_goes_to_session_output():
    out = []
    s = Session(program(COUNTER), out=out.append)
    s.exec("print(1 + 2)")
    assert out == ["3"]


def test_unknown_name_is_an_error(s):
    with pytest.raises(DSLError):
        s.exec("nosuch + 1")


def queens(n):
    s = Session(parse_program(_set_const(corpus("queens"), "SIZE", n)))
    return s, s.exec("queens(SIZE)")


def test_queens_six_finds_a_valid_board():
    s, ok = queens(6)
    assert ok is True
    cols = s.exec("list{column[n] | n in D}")
    assert sorted(cols) == list(range(1, 7))
    assert len({r + c for r, c in enumerate(cols)}) == 6
    assert len({r - c for r, c in enumerate(cols)}) == 6


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_queens_matches_brute_force(n):
    assert queens(n)[1] == brute_queens(n)


def test_failed_search_restores_board():
    s, ok = queens(3)
    assert ok is False
    assert s.exec("list{column[n] | n in D}") == [UNKNOWN] * 3
    assert s.runtime.world() == 0


def test_zebra_has_an_assignment():
    s = Session(parse_program(corpus("zebra")))
    assert s.exec("colors(N)") is True
    colors = s.exec("list{color[h] | h in H}")
    assert sorted(colors) == [1, 2, 3, 4, 5]
    assert all(colors[i + 1] != colors[i] + 1 for i in range(4))


def test_session_run_executes_statements():
    out = io.StringIO()
    text = COUNTER + "let k := c() in (k.v := 5, print(k.v))\n"
    Session(program(text), out=lambda line: out.write(line + "\n")).run()
    assert out.getvalue() == "5\n"
