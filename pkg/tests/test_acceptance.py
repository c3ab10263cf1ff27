"""Acceptance suite: one test per criterion, each reporting a pass/fail line."""

import random
import time
import warnings

from deltarules.algebra.terms import dump
from deltarules.algebra.translate import translate
from deltarules.bench import closure_random, random_edges
from deltarules.differentiation import differentiate
from deltarules.engine.demons import run_deep
from deltarules.engine.naive import naive_fixpoint
from deltarules.interp import Session

import cases
from conftest import brute_queens, program, record, run_script, session, warshall
from test_algebra import TRANSLATIONS
from test_differentiation import DERIVATIVES
from test_engine import _strange, rs2_fires


def test_criterion_1_closure_matches_warshall():
    rng = random.Random(1)
    p = program("closure")
    t0 = time.perf_counter()
    bad = 0
    for g in range(100):
        n = rng.randint(1, 12)
        edges = random_edges(n, rng.randint(0, 2 * n), seed=g)
        s = Session(p)
        nodes = [s.runtime.create("point") for _ in range(n)]
        index = {e: i for i, e in enumerate(nodes)}
        run_deep(lambda: [s.runtime.add("edge", nodes[a], nodes[b]) for a, b in edges])
        got = {(index[x], index[y]) for x, ys in s.store.extents["path"].items() for y in ys}
        bad += got != warshall(n, edges)
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 5.0
    record(1, ok, f"100 graphs, {bad} mismatches, {dt:.2f}s (limit 5s)")
    assert ok


def test_criterion_2_goldens():
    wrong = []
    for (name, rule), want in TRANSLATIONS.items():
        p = program(name)
        if dump(translate(p.rule(rule), p.schema).term) != want:
            wrong.append(f"{rule}")
    for (name, rule, rel), want in DERIVATIVES.items():
        p = program(name)
        if dump(differentiate(translate(p.rule(rule), p.schema).term, rel)) != want:
            wrong.append(f"d{rule}/{rel}")
    total = len(TRANSLATIONS) + len(DERIVATIVES)
    record(2, not wrong, f"{total - len(wrong)}/{total} goldens match" + (f", wrong: {wrong}" if wrong else ""))
    assert not wrong


def test_criterion_3_sandwich():
    checked, violations = cases.sandwich_run(1200, seed=3)
    record(3, not violations and checked >= 1000, f"{checked} cases, {len(violations)} violations")
    assert checked >= 1000
    assert not violations, violations[:5]


def test_criterion_4_incremental_equals_naive():
    mismatches, fired = [], set()
    n = 0
    for name, p, script in cases.random_scripts(320, seed=4):
        inc = run_script(p, script)
        store, _ = run_deep(lambda: naive_fixpoint(p, script))
        fired.update(inc.log.rules())
        n += 1
        if inc.store.snapshot() != store.snapshot():
            mismatches.append((name, script))
    needed = {"closure", "R1", "R2", "R3", "RS1", "RS2", "r1", "r2", "r3"}
    ok = not mismatches and needed <= fired
    record(4, ok, f"{n} scripts, {len(mismatches)} snapshot mismatches, rules not exercised: "
                  f"{sorted(needed - fired) or 'none'}")
    assert needed <= fired
    assert not mismatches, mismatches[:3]


def test_criterion_5_selectivity():
    combos = {(a, b): rs2_fires(a, b) for a in (True, False) for b in (True, False)}
    rs2_ok = combos == {(True, False): 1, (True, True): 0, (False, True): 0, (False, False): 0}
    s = session("scheduling")
    for stmt in ("x := task()", "y := task()", "x.minstart := 10", "y.minstart := 20", "x.attached := y"):
        s.exec(stmt)
    on_attached = s.log.count("R1")
    s.exec("x.minstart := 13")
    on_minstart = s.log.count("R1") - on_attached
    r1_ok = on_attached == 0 and on_minstart == 1 and s.exec("y.minstart") == 23
    record(5, rs2_ok and r1_ok, f"RS2 firings by (from forest, to forest) {combos}; "
                                f"R1 on attached {on_attached}, on minstart {on_minstart}")
    assert rs2_ok and r1_ok


def _strange_counts():
    out = {}
    for mode in ("default", "set"):
        s = _strange(mode1=None if mode == "default" else mode)
        s.exec("p := Person()")
        s.exec("p.age := 18")
        out[f"strange1/{mode}"] = s.log.count("strange1")
    s = _strange(mode2="once")
    for stmt in ("p := Person()", "q := Person()", "r := Person()", "p.friends :add q",
                 "p.friends :add r", "p.age := 18"):
        s.exec(stmt)
    out["strange2/once"] = s.log.count("strange2")
    return out


def test_criterion_6_modes():
    got = _strange_counts()
    want = {"strange1/default": 2, "strange1/set": 1, "strange2/once": 1}
    record(6, got == want, f"firings {got}")
    assert got == want


def test_criterion_7_worlds():
    rng = random.Random(7)
    failures = [f for _ in range(1000) for f in cases.world_episode(rng)]
    q6 = Session(cases.prog("queens", SIZE=6)).exec("queens(SIZE)")
    q3 = Session(cases.prog("queens", SIZE=3)).exec("queens(SIZE)")
    ok = not failures and q6 is brute_queens(6) is True and q3 is brute_queens(3) is False
    record(7, ok, f"1000 episodes, {len(failures)} failures; queens(6) {q6}, queens(3) {q3}")
    assert not failures, failures[:3]
    assert q6 is True and q3 is False


def test_criterion_8_demon_equivalence():
    total, bad = 0, []
    for n in range(1, 5):
        checked, mismatches = run_deep(lambda: cases.demon_equivalence(n))
        total += checked
        bad += mismatches
    record(8, not bad, f"{total} transitions over graphs with up to 4 nodes, {len(bad)} mismatches")
    assert not bad, bad[:3]


def test_criterion_9_throughput():
    r = closure_random(200)
    ok = r.rate >= 100_000
    record(9, ok, f"{r.firings} firings in {r.seconds:.3f}s = {r.rate:.0f}/s (target 100000/s)", warn_only=True)
    if not ok:
        warnings.warn(f"closure throughput {r.rate:.0f}/s is below 100000/s")
