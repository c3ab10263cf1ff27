import pytest

from deltarules.algebra.evaluate import eval_relation, eval_term
from deltarules.algebra.invert import invert, superset_inverse
from deltarules.algebra.knowledge import apply_op, compare
from deltarules.algebra.simplify import prune, simplify
from deltarules.algebra.terms import (
    EMPTY, IDENTITY, UNIT, Compose, Const, Inverse, Not, Phi, Psi, RelVar, SetFormer, Union, Var, dump,
)
from deltarules.algebra.translate import translate
from deltarules.errors import NotInvertible, TranslationError
from deltarules.store import Store

from conftest import program

# Translations of every corpus rule, in the ASCII spelling of the term dump.
TRANSLATIONS = {
    ("closure", "closure"): "edge U (path o edge)",
    ("queens", "r1"): "column o (D x D)",
    ("queens", "r2"): "lambda(z:(D x D)).phi[%](I, D) o psi[-](psi[+](column o z, z), I)",
    ("queens", "r3"): "lambda(z:(D x D)).phi[%](I, D) o psi[+](psi[-](column o z, z), I)",
    ("scheduling", "R1"): "lambda(u:minstart').lambda(z:chi(minstart)).attached",
    ("scheduling", "R2"): "lambda(u:duration').lambda(z:chi(duration)).lambda(I:(task x taskInterval))."
                          "I o phi[>=](minstart, minstart o I) o phi[<=](maxEnd, maxEnd o I)",
    ("scheduling", "R3"): "lambda(u:minstart').lambda(I:(task x taskInterval)).I o phi[>=](chi(minstart), "
                          "minstart o I) o phi[<](u, minstart o I) o phi[<=](maxEnd, maxEnd o I)",
    ("strange", "strange1"): "phi[=](age, 18) U phi[>](age, 10)",
    ("strange", "strange2"): "friends o phi[=](age, 18)",
    ("units", "RS1"): "lambda(y:(location^-1 o chi(location))).y o phi[<=](strength, strength o y)",
    ("units", "RS2"): "lambda(u:location').phi[=](forest? o u, true) o phi[=](forest? o chi(location), false)",
}


@pytest.mark.parametrize("prog,rule", sorted(TRANSLATIONS))
def test_translation_golden(prog, rule):
    p = program(prog)
    assert dump(translate(p.rule(rule), p.schema).term) == TRANSLATIONS[(prog, rule)]


def test_eject_up_translates_with_bound_intermediates():
    p = program("eject_up")
    tr = translate(p.rules[0], p.schema)
    text = dump(tr.term)
    assert text.startswith("lambda(r:res).lambda(S:(Res^-1 o r)).lambda(A:(earliestStart o Left o S))")
    assert "lambda(slack:" in text
    assert tr.target == "S"


def test_filter_rule_has_no_target():
    p = program("strange")
    assert translate(p.rule("strange1"), p.schema).target is None
    assert translate(p.rule("strange2"), p.schema).target == "y"


def test_untranslatable_condition_is_reported():
    p = program("""
p <: object(a:integer, b:integer)
event(a)
r(x:p, n:integer) :: rule(x.a = n * n => x.b := n)
""")
    with pytest.raises(TranslationError, match="cannot determine variable 'n'"):
        translate(p.rules[0], p.schema)


def test_dump_parenthesizes_nested_unions_and_inverses():
    t = Compose(Union(RelVar("a"), RelVar("b")), Inverse(Compose(RelVar("c"), RelVar("d"))))
    assert dump(t) == "(a U b) o (c o d)^-1"
    assert dump(EMPTY) == "{}"
    assert dump(UNIT) == "I" and dump(IDENTITY) == "I"


def test_prune_absorbs_empty():
    t = Union(Compose(RelVar("a"), EMPTY), RelVar("b"))
    assert prune(t) == RelVar("b")
    assert prune(Not(EMPTY)) == IDENTITY


def test_simplify_folds_constants_and_identity():
    assert simplify(Psi("+", Const(2), Const(3))) == Const(5)
    assert simplify(Compose(RelVar("a"), IDENTITY)) == RelVar("a")
    assert simplify(Inverse(Inverse(RelVar("a")))) == RelVar("a")
    assert simplify(Phi("<", Const(1), Const(2))) == IDENTITY


def test_invert_and_superset_inverse():
    t = Compose(RelVar("a"), Inverse(RelVar("b")))
    assert invert(t) == Compose(RelVar("b"), Inverse(RelVar("a")))
    with pytest.raises(NotInvertible):
        invert(SetFormer("z", RelVar("a"), IDENTITY))
    with_test = Compose(RelVar("a"), Phi("=", RelVar("b"), Var("v")))
    assert superset_inverse(with_test) == Compose(IDENTITY, Inverse(RelVar("a")))


def test_knowledge_operations():
    assert apply_op("div+", 7, 2) == 4
    assert apply_op("div+", 6, 3) == 2
    assert apply_op("div", 7, 2) == 3
    assert apply_op("+", 1, None) is not None
    assert compare("=", 1, True) is False
    assert compare("<", 1, 2) and not compare(">", 1, 2)


def test_evaluator_on_closure_term():
    p = program("closure")
    s = Store(p.schema)
    a, b, c = (s.create_instance("point") for _ in range(3))
    s.raw_add("edge", a, b)
    s.raw_add("path", b, c)
    t = translate(p.rules[0], p.schema).term
    assert eval_relation(t, s, [a, b, c]) == {(a, b), (a, c)}
    assert list(eval_term(RelVar("edge"), s, a)) == [b]
