import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deltarules.algebra.terms import EMPTY, Chi, Compose, PrevLambda, RelVar, Union, Var, dump
from deltarules.algebra.translate import translate
from deltarules.differentiation import differentiate, eval_deriv
from deltarules.store import Store
from deltarules.values import UNKNOWN

import cases
from conftest import program

DERIVATIVES = {
    ("closure", "closure", "edge"): "I U (path o I)",
    ("closure", "closure", "path"): "I o edge",
    ("queens", "r1", "column"): "I o (D x D)",
    ("queens", "r2", "column"): "lambda(z:(D x D)).phi[%](I, D) o psi[-](psi[+](I o z, z), I)",
    ("queens", "r3", "column"): "lambda(z:(D x D)).phi[%](I, D) o psi[+](psi[-](I o z, z), I)",
    ("scheduling", "R1", "minstart"): "lambda(u:minstart').lambda(z:I).attached",
    ("scheduling", "R2", "duration"): "lambda(u:duration').lambda(z:I).lambda(I:(task x taskInterval))."
                                      "I o phi[>=](minstart, minstart o I) o phi[<=](maxEnd, maxEnd o I)",
    ("scheduling", "R2", "minstart"): "{}",
    ("scheduling", "R3", "minstart"): "lambda(u:minstart').lambda(I:(task x taskInterval)).I o phi[>=](I, "
                                      "minstart o I) o phi[<](u, minstart o I) o phi[<=](maxEnd, maxEnd o I)",
    ("strange", "strange1", "age"): "phi[=](I, 18) U phi[>](I, 10)",
    ("strange", "strange2", "age"): "friends o phi[=](I, 18)",
    ("units", "RS1", "location"): "lambda(y:(location^-1 o I)).y o phi[<=](strength, strength o y)",
    ("units", "RS2", "location"): "lambda(u:location').phi[=](forest? o u, true) o phi[=](forest? o I, false)",
    ("eject_up", "eject_up", "contains"): "{}",
}


@pytest.mark.parametrize("prog,rule,rel", sorted(DERIVATIVES))
def test_derivative_golden(prog, rule, rel):
    p = program(prog)
    t = translate(p.rule(rule), p.schema).term
    assert dump(differentiate(t, rel)) == DERIVATIVES[(prog, rule, rel)]


def test_unrelated_relation_gives_empty():
    assert differentiate(Compose(RelVar("path"), RelVar("edge")), "age") == EMPTY


def test_undifferentiated_event_filter_drops_out():
    t = Compose(RelVar("friends"), Chi("age"))
    assert differentiate(t, "friends") == EMPTY


def test_prev_lambda_of_another_relation_is_empty():
    t = PrevLambda("u", "age", Compose(Var("u"), RelVar("friends")))
    assert differentiate(t, "friends") == EMPTY


def test_union_derivative_is_union_of_derivatives():
    t = Union(RelVar("a"), RelVar("b"))
    assert dump(differentiate(t, "a")) == "I"


def test_closure_derivative_evaluates_to_new_paths():
    p = program("closure")
    s = Store(p.schema)
    a, b, c = (s.create_instance("point") for _ in range(3))
    s.raw_add("path", b, c)
    s.raw_add("edge", a, b)
    d = differentiate(translate(p.rule("closure"), p.schema).term, "edge")
    got = eval_deriv(d, s, a, b, UNKNOWN, "edge", [a, b, c])
    assert got == {(a, b), (a, c)}


@pytest.mark.parametrize("name", cases.SANDWICH_PROGRAMS)
def test_sandwich_per_program(name):
    rng = random.Random(name)
    done = 0
    for _ in range(400):
        msg = cases.sandwich_case(name, rng)
        if msg is cases.SKIP:
            continue
        done += 1
        assert msg is None, msg
    assert done >= 50


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(cases.SANDWICH_PROGRAMS), st.integers(0, 2**32))
def test_sandwich_property(name, seed):
    msg = cases.sandwich_case(name, random.Random(seed))
    assert msg is cases.SKIP or msg is None, msg
