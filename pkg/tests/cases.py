"""Random stores, updates and scripts over the corpus programs."""

import functools
import random

from deltarules.algebra.evaluate import Delta, EvalContext, pairs
from deltarules.algebra.terms import Empty, relations_in, walk
from deltarules.algebra.terms import Not as TNot
from deltarules.algebra.translate import translate
from deltarules.bench import _set_const, corpus
from deltarules.differentiation import differentiate, eval_deriv
from deltarules.frontend import check_events, parse_program
from deltarules.store import Store
from deltarules.values import UNKNOWN


@functools.lru_cache(maxsize=None)
def prog(name, **consts):
    text = corpus(name)
    for k, v in consts.items():
        text = _set_const(text, k, v)
    return parse_program(text)


def small(name):
    if name == "queens":
        return prog("queens", SIZE=4)
    if name == "zebra":
        return prog("zebra", N=3)
    return prog(name)


# -- random stores --------------------------------------------------------------------


def _closure_store(p, rng):
    s = Store(p.schema)
    pts = [s.create_instance("point") for _ in range(rng.randint(2, 5))]
    for rel in ("edge", "path"):
        for _ in range(rng.randint(0, 6)):
            s.raw_add(rel, rng.choice(pts), rng.choice(pts))
    return s, lambda: (rng.choice(["edge", "path"]), rng.choice(pts), rng.choice(pts))


def _strange_store(p, rng):
    s = Store(p.schema)
    ps = [s.create_instance("Person") for _ in range(rng.randint(2, 4))]
    ages = [5, 10, 11, 17, 18, 19]
    for x in ps:
        s.raw_put("age", x, rng.choice(ages))
        for y in ps:
            if rng.random() < 0.4:
                s.raw_add("friends", x, y)
    return s, lambda: ("age", rng.choice(ps), rng.choice(ages))


def _board_store(p, rng, rels):
    s = Store(p.schema)
    dom = list(p.schema.relations[rels[0]].domain.enumerate(s))
    for rel in rels:
        for k in dom:
            if rng.random() < 0.5:
                s.raw_put(rel, k, rng.choice(dom))
    return s, lambda: (rng.choice(rels), rng.choice(dom), rng.choice(dom))


def _scheduling_store(p, rng):
    s = Store(p.schema)
    tasks = [s.create_instance("task") for _ in range(rng.randint(2, 3))]
    ivs = [s.create_instance("taskInterval") for _ in range(rng.randint(1, 2))]
    for t in tasks:
        if rng.random() < 0.7:
            s.raw_put("attached", t, rng.choice(tasks))
    for e in tasks + ivs:
        s.raw_put("minstart", e, rng.randint(0, 10))
        s.raw_put("maxEnd", e, rng.randint(10, 20))
        s.raw_put("duration", e, rng.randint(0, 5))
    return s, lambda: (rng.choice(["minstart", "duration"]), rng.choice(tasks + ivs), rng.randint(0, 12))


def _units_store(p, rng):
    s = Store(p.schema)
    pos = [s.create_instance("position") for _ in range(rng.randint(2, 3))]
    units = [s.create_instance("unit") for _ in range(rng.randint(2, 4))]
    for q in pos:
        s.raw_put("forest?", q, rng.random() < 0.5)
    for u in units:
        s.raw_put("location", u, rng.choice(pos))
        s.raw_put("strength", u, rng.randint(0, 3))
    return s, lambda: ("location", rng.choice(units), rng.choice(pos))


BUILDERS = {
    "closure": _closure_store,
    "strange": _strange_store,
    "queens": lambda p, rng: _board_store(p, rng, ["column"]),
    "zebra": lambda p, rng: _board_store(p, rng, ["color", "pet"]),
    "scheduling": _scheduling_store,
    "units": _units_store,
}


def random_store(name, rng):
    p = small(name)
    return (p, *BUILDERS[name](p, rng))


# -- sandwich -----------------------------------------------------------------------------


def _negated(t):
    return set().union(*(relations_in(n.t) for n in walk(t) if isinstance(n, TNot)))


@functools.lru_cache(maxsize=None)
def rule_info(name):
    """(rule, term, derivatives by relation, allowed update relations) per rule."""
    p = small(name)
    trig = check_events(p)
    out = []
    for r in p.rules:
        t = translate(r, p.schema).term
        events = {n.rel for n in walk(t) if type(n).__name__ == "Chi"}
        derivs = {rel: differentiate(t, rel) for rel in trig[r]}
        # an event rule only reacts to its own event; negated relations are not differentiated
        allowed = (events or set(trig[r])) - _negated(t)
        out.append((r, t, derivs, allowed, bool(events)))
    return out


def _relation_at(t, store, bases, delta=None):
    ctx = EvalContext(store, None, delta, bases)
    return {(x, v) for x in bases for v, _ in pairs(t, ctx, x, {})}


SKIP = "skip"


def sandwich_case(name, rng):
    """One random (rule, store, update) check.

    Returns SKIP when no relevant update exists, else None or a violation message.
    """
    p, s, pick = random_store(name, rng)
    for _ in range(20):
        rel, key, value = pick()
        r = s.relations[rel]
        if r.multi and not s.has_member(r, key, value):
            break
        if not r.multi and s.get(r, key) != value:
            break
    else:
        return SKIP
    infos = [i for i in rule_info(name) if rel in i[3]]
    if not infos:
        return SKIP
    rule, t, derivs, _, is_event = rng.choice(infos)
    base_type = translate(rule, p.schema).base_type
    bases = list(base_type.enumerate(s))
    before = _relation_at(t, s, bases)
    last = UNKNOWN if r.multi else s.get(r, key)
    if r.multi:
        s.raw_add(r, key, value)
    else:
        s.raw_put(r, key, value)
    after = _relation_at(t, s, bases, Delta(rel, key, value, last))
    if is_event:
        # chi(R) holds only the written pair: nothing before, subject fixed after
        before = set()
        after = {(x, v) for x, v in after if x == key}
    d = derivs.get(rel)
    got = set() if d is None or isinstance(d, Empty) else eval_deriv(d, s, key, value, last, rel, bases)
    new = after - before
    if not new <= got:
        return f"{rule.name}/{rel}: missing {new - got}"
    if not got <= after:
        return f"{rule.name}/{rel}: spurious {got - after}"
    return None


SANDWICH_PROGRAMS = ["closure", "strange", "queens", "zebra", "scheduling", "units"]


def sandwich_run(n, seed=0):
    rng = random.Random(seed)
    violations = []
    checked = i = 0
    while checked < n:
        msg = sandwich_case(SANDWICH_PROGRAMS[i % len(SANDWICH_PROGRAMS)], rng)
        i += 1
        if msg is SKIP:
            continue
        checked += 1
        if msg:
            violations.append(msg)
    return checked, violations


# -- scripts for incremental vs naive --------------------------------------------------


def closure_script(rng):
    n = rng.randint(2, 6)
    script = [f"p{i} := point()" for i in range(n)]
    for _ in range(rng.randint(1, 10)):
        rel = "edge" if rng.random() < 0.85 else "path"
        script.append(f"p{rng.randrange(n)}.{rel} :add p{rng.randrange(n)}")
    return "closure", script


def scheduling_script(rng):
    n, m = rng.randint(2, 4), rng.randint(1, 2)
    script = [f"t{i} := task()" for i in range(n)] + [f"i{j} := taskInterval()" for j in range(m)]
    for j in range(m):
        script.append(f"i{j}.minstart := {rng.randint(0, 10)}")
        script.append(f"i{j}.maxEnd := {rng.randint(20, 60)}")
    # links only point forward, so propagation terminates
    for i in range(n - 1):
        if rng.random() < 0.6:
            script.append(f"t{i}.attached := t{rng.randint(i + 1, n - 1)}")
    for _ in range(rng.randint(2, 8)):
        t = f"t{rng.randrange(n)}"
        if rng.random() < 0.5:
            script.append(f"{t}.minstart := {rng.randint(0, 15)}")
        elif rng.random() < 0.5:
            script.append(f"{t}.duration := {rng.randint(0, 5)}")
        else:
            script.append(f"{t}.maxEnd := {rng.randint(10, 40)}")
    return "scheduling", script


def units_script(rng):
    n, m = rng.randint(2, 4), rng.randint(2, 4)
    script = [f"q{j} := position()" for j in range(n)]
    script += [f"q{j}.forest? := {rng.choice(['true', 'false'])}" for j in range(n)]
    script += [f"u{i} := unit()" for i in range(m)]
    script += [f"u{i}.strength := {rng.randint(0, 3)}" for i in range(m)]
    for _ in range(rng.randint(1, 8)):
        script.append(f"u{rng.randrange(m)}.location := q{rng.randrange(n)}")
    return "units", script


def queens_script(rng):
    size = rng.randint(4, 6)
    script = [f"column[{rng.randint(1, size)}] := {rng.randint(1, size)}" for _ in range(rng.randint(1, 4))]
    return f"queens:{size}", script


SCRIPTS = [closure_script, scheduling_script, units_script, queens_script]


def script_program(name):
    if name.startswith("queens:"):
        return prog("queens", SIZE=int(name.split(":")[1]))
    return prog(name)


def random_scripts(n, seed=0):
    rng = random.Random(seed)
    for i in range(n):
        name, script = SCRIPTS[i % len(SCRIPTS)](rng)
        yield name, script_program(name), script


# -- world episodes ------------------------------------------------------------------------


def world_episode(rng, size=5):
    """Random choice / write / backtrack / commit steps on a propagating queens board.

    Returns a list of failures (empty when every backtrack restored its snapshot and
    every commit lowered the world counter by one).
    """
    from deltarules import worlds
    from deltarules.interp import Session

    s = Session(prog("queens", SIZE=size))
    store = s.store
    # snaps[k] is the store as it was when world k was entered
    snaps = [store.snapshot()]
    failures = []
    for _ in range(rng.randint(5, 30)):
        op = rng.random()
        w = worlds.world(store)
        if op < 0.3 or w == 0:
            # world 0 is permanent, so writes always happen inside a choice
            worlds.choice(store)
            snaps.append(store.snapshot())
        elif op < 0.75:
            s.exec(f"column[{rng.randint(1, size)}] := {rng.randint(1, size)}")
        elif op < 0.9:
            worlds.backtrack(store)
            if store.snapshot() != snaps.pop():
                failures.append(f"backtrack to {w - 1} did not restore the snapshot")
        else:
            worlds.commit(store)
            snaps.pop()
            if worlds.world(store) != w - 1:
                failures.append(f"commit left world {worlds.world(store)}, expected {w - 1}")
            if w == 1:
                snaps[0] = store.snapshot()
    while worlds.world(store) > 0:
        worlds.backtrack(store)
        if store.snapshot() != snaps.pop():
            failures.append("unwinding did not restore the snapshot")
    return failures


# -- closure demon versus the hand-written one ---------------------------------------------


class HandClosure:
    """Closure maintenance written directly in Python, the reference for the
    compiled demon. A new path pair is pushed back along incoming edges."""

    def __init__(self, n):
        self.n = n
        self.edge = [set() for _ in range(n)]
        self.path = [set() for _ in range(n)]

    def add_edge(self, x, y):
        if y in self.edge[x]:
            return
        self.edge[x].add(y)
        self.add_path(x, y)
        for z in list(self.path[y]):
            self.add_path(x, z)

    def add_path(self, x, y):
        if y in self.path[x]:
            return
        self.path[x].add(y)
        for w in range(self.n):
            if x in self.edge[w]:
                self.add_path(w, y)

    def state(self):
        return {(x, y) for x in range(self.n) for y in self.path[x]}

    def copy(self):
        h = HandClosure(self.n)
        h.edge = [set(s) for s in self.edge]
        h.path = [set(s) for s in self.path]
        return h


def demon_equivalence(n):
    """Compare both demons on every (edge set, new edge) transition over n nodes.

    Every insertion order of every graph is a chain of such transitions starting
    from the empty store, so agreement on all of them covers all orders. Returns
    (transitions checked, mismatches).
    """
    from deltarules import worlds
    from deltarules.interp import Session

    p = parse_program(corpus("closure") + "store(edge, path)\n")
    s = Session(p)
    rt, store = s.runtime, s.store
    nodes = [rt.create("point") for _ in range(n)]
    index = {e: i for i, e in enumerate(nodes)}
    edges = [(a, b) for a in range(n) for b in range(n)]
    checked, bad = 0, []

    def engine_state():
        return {(index[x], index[y]) for x, ys in store.extents["path"].items() for y in ys}

    def visit(hand, start, present):
        nonlocal checked
        for i, (a, b) in enumerate(edges):
            if (a, b) in present:
                continue
            worlds.choice(store)
            rt.add("edge", nodes[a], nodes[b])
            h = hand.copy()
            h.add_edge(a, b)
            checked += 1
            if engine_state() != h.state():
                bad.append((sorted(present), (a, b)))
            # each edge set is expanded once, from its largest edge
            if i >= start:
                visit(h, i + 1, present | {(a, b)})
            worlds.backtrack(store)

    visit(HandClosure(n), 0, frozenset())
    return checked, bad
