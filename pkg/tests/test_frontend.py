import pytest

from deltarules.bench import corpus
from deltarules.errors import ParseError, ResolveError, StratificationError
from deltarules.frontend import ast as A
from deltarules.frontend import check_events, parse_program, parse_text, show_program, trigger_warnings

CORPUS = ["closure", "strange", "queens", "scheduling", "units", "eject_up", "zebra"]


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_round_trips_through_printer(name):
    p = parse_program(corpus(name))
    assert parse_text(show_program(p)).items == p.items


def test_closure_rule_shape():
    p = parse_program(corpus("closure"))
    (rule,) = p.rules
    assert rule.params[0][0] == "x"
    assert isinstance(rule.cond, A.AOr)
    assert isinstance(rule.conclusion, A.Assign) and rule.conclusion.op == ":add"


def test_event_with_previous_value_parses():
    p = parse_program(corpus("units"))
    rs2 = p.rule("RS2")
    events = [a for a in [rs2.cond.left.left] if isinstance(a, A.AEvent)]
    assert events and events[0].prev == "u"


def test_mode_attaches_to_next_rule():
    p = parse_program("""
p <: object(a:integer, b:integer)
event(a)
mode(once)
r1(x:p) :: rule(x.a = 1 => x.b := 1)
r2(x:p) :: rule(x.a = 2 => x.b := 2)
""")
    assert p.rule("r1").mode == "once"
    assert p.rule("r2").mode == "default"


def test_event_scoping_respects_declaration_order():
    p = parse_program("""
p <: object(a:integer, b:integer, c:integer)
r0(x:p) :: rule(x.a = 1 => x.c := 0)
event(a, b)
r1(x:p) :: rule(x.a = x.b => x.c := 1)
noevent(b)
r2(x:p) :: rule(x.a = x.b => x.c := 2)
""")
    trig = check_events(p)
    assert trig[p.rule("r0")] == set()
    assert trig[p.rule("r1")] == {"a", "b"}
    assert trig[p.rule("r2")] == {"a"}
    assert [w.message for w in trigger_warnings(trig)] == [
        "rule 'r0' has no triggering relation and can never fire"
    ]


def test_duplicate_global_is_rejected():
    with pytest.raises(ResolveError, match="declared twice"):
        parse_program("x :: 3\nx :: 4")


def test_undeclared_condition_variable():
    with pytest.raises(ResolveError, match="unresolved name 'y'"):
        parse_program("p <: object(a:integer)\nr(x:p) :: rule(x.a = y => x.a := 1)")


def test_negation_cycle_is_not_stratified():
    with pytest.raises(StratificationError):
        parse_program("""
p <: object(a:set<p>, b:set<p>)
event(a, b)
r(x:p, y:p) :: rule(not(a(x,y)) & b(x,y) => x.a :add y)
""")


def test_parse_error_has_location():
    with pytest.raises(ParseError) as exc:
        parse_program("1 +")
    assert exc.value.loc.line == 1
    assert "expected an expression" in str(exc.value)


def test_unknown_parent_class():
    with pytest.raises(ResolveError, match="unknown parent class 'foo'"):
        parse_program("p <: foo()")
