"""Reference semantics: brute-force rule evaluation, no derivatives.

Rules with an update event in their condition are evaluated against the
single write that just happened. Rules without one are saturated after
every scripted statement: all their bindings are recomputed and their
conclusions applied until the store stops changing.
"""

from __future__ import annotations

from typing import Any, Callable, Iterator

from ..errors import PropagationDepthError, RuntimeDSLError
from ..frontend import ast as A
from ..frontend.checks import check_events, free_vars, inst_rel
from ..store import Store
from ..values import UNKNOWN, ClassInfo, Entity, Type
from .demons import DEFAULT_DEPTH, FiringLog, trace_line


class _Event:
    __slots__ = ("rel", "key", "old", "new")

    def __init__(self, rel: str, key: Any, old: Any, new: Any):
        self.rel, self.key, self.old, self.new = rel, key, old, new


def _conjuncts(a: A.Assertion) -> list[A.Assertion]:
    if isinstance(a, A.AAnd):
        return _conjuncts(a.left) + _conjuncts(a.right)
    return [a]


def _exist_types(a, out: dict) -> None:
    if isinstance(a, A.AExists):
        out[a.var] = a.type
        _exist_types(a.body, out)
    elif isinstance(a, (A.AAnd, A.AOr)):
        _exist_types(a.left, out)
        _exist_types(a.right, out)
    elif isinstance(a, A.ANot):
        _exist_types(a.body, out)
    elif isinstance(a, A.AIf):
        _exist_types(a.then, out)
        _exist_types(a.else_, out)


class _Rule:
    def __init__(self, rule: A.RuleDecl, triggers: set[str], sc):
        self.rule = rule
        self.name = rule.name
        self.triggers = triggers
        self.params = [v for v, _ in rule.params]
        self.types: dict[str, Type | None] = {v: sc.resolve_type(t) for v, t in rule.params}
        ex: dict = {}
        _exist_types(rule.cond, ex)
        for v, t in ex.items():
            self.types[v] = sc.resolve_type(t) if t is not None else None
        self.vars = set(self.types)
        concl = free_vars(rule.conclusion)
        self.scope = [v for v in self.types if v in self.params or v in concl]
        self.events: set[str] = set()
        base = self.params[0]
        for n in _walk(rule.cond):
            if isinstance(n, A.AEvent):
                t = n.target
                self.events.add(t.attr if isinstance(t, A.Dot) else t.name)
            elif isinstance(n, A.AInst) and n.var == base and inst_rel(n.cls) in triggers:
                self.events.add(inst_rel(n.cls))


def _walk(a):
    from ..frontend.checks import walk

    return walk(a)


class NaiveRuntime:
    """Drop-in replacement for ``Runtime`` that re-evaluates rules from scratch."""

    def __init__(self, program: A.Program, store: Store | None = None, depth_limit: int = DEFAULT_DEPTH,
                 trace: Callable[[str], None] | None = None, max_passes: int = 10_000):
        self.program = program
        self.store = store if store is not None else Store(program.schema)
        self.depth_limit = depth_limit
        self.max_passes = max_passes
        self.trace = trace
        self.log = FiringLog()
        self.compile_stmt = None
        self.interp = None
        sc = program.schema
        triggers = check_events(program, sc)
        rules = sorted(
            enumerate(program.rules),
            key=lambda ir: (-(ir[1].mode if isinstance(ir[1].mode, int) else 0), ir[0]),
        )
        self.rules = [_Rule(r, triggers.get(r, set()), sc) for _, r in rules]
        self.rules = [r for r in self.rules if r.triggers]
        self._code: dict[int, Callable] = {}
        self._concl: dict[str, Callable] = {}
        self._residual: dict[int, A.ACmp] = {}
        self.depth = 0
        self.changes = 0

    def attach(self, interp) -> None:
        self.interp = interp

    # -- writes ------------------------------------------------------------------------

    def world(self) -> int:
        return self.store.trail.world

    def update(self, rel, key, v) -> None:
        rel = self.store.rel(rel)
        if rel.multi:
            raise RuntimeDSLError(f"'{rel.name}' is multi-valued; use :add")
        self.store.check_key(rel, key)
        old = self.store.raw_put(rel, key, v)
        if old is v or (old == v and type(old) is type(v)):
            return
        self.changes += 1
        if v is not UNKNOWN:
            self._event(_Event(rel.name, key, old, v))

    def add(self, rel, key, v) -> None:
        rel = self.store.rel(rel)
        if not rel.multi:
            raise RuntimeDSLError(f"'{rel.name}' is mono-valued; use :=")
        if self.store.raw_add(rel, key, v):
            self.changes += 1
            self._event(_Event(rel.name, key, UNKNOWN, v))

    def delete(self, rel, key, v) -> None:
        if self.store.delete_multi(rel, key, v):
            self.changes += 1

    def increment(self, rel, key, n) -> None:
        rel = self.store.rel(rel)
        old = self.store.get(rel, key)
        if old is UNKNOWN or n is UNKNOWN:
            raise RuntimeDSLError(f"cannot increment unknown value of '{rel.name}'")
        self.update(rel, key, old + n)

    def create(self, cls: ClassInfo | str, inits=None, name=None) -> Entity:
        e = self.store.create_instance(cls, inits, name)
        self.changes += 1
        for c in reversed(e.cls.ancestors()):
            self._event(_Event(inst_rel(c.name), e, UNKNOWN, e))
        return e

    def stage_all(self) -> None:
        pass

    # -- propagation ------------------------------------------------------------------------

    def _event(self, ev: _Event) -> None:
        top = self.depth == 0
        self.depth += 1
        if self.depth > self.depth_limit:
            raise PropagationDepthError(f"propagation depth limit {self.depth_limit} exceeded", [])
        try:
            for r in self.rules:
                if ev.rel in r.events:
                    for b in self.bindings(r, ev):
                        self._fire(r, b)
            if top:
                self._saturate()
        finally:
            self.depth -= 1

    def _saturate(self) -> None:
        pure = [r for r in self.rules if not r.events]
        for _ in range(self.max_passes):
            before = self.changes
            for r in pure:
                for b in self.bindings(r, None):
                    self._fire(r, b)
            if self.changes == before:
                return
        raise PropagationDepthError("saturation did not reach a fixpoint", [r.name for r in pure])

    def _fire(self, r: _Rule, b: dict) -> None:
        u = b[r.params[0]]
        v = b[r.params[1]] if len(r.params) > 1 else u
        w = self.store.trail.world
        self.log.append(r.name, u, v, w)
        if self.trace is not None:
            self.trace(trace_line(r.name, u, v, w))
        run = self._concl.get(r.name)
        if run is None:
            run = self._concl[r.name] = self.interp.compile(r.rule.conclusion)
        run(dict(b))

    # -- brute-force condition evaluation -------------------------------------------------------

    def bindings(self, r: _Rule, ev: _Event | None) -> list[dict]:
        """Distinct bindings of the conclusion's variables that satisfy the condition."""
        seen: dict = {}
        for env in self._complete(r, self._solve(r, _conjuncts(r.rule.cond), {}, ev)):
            if not all(r.types[v] is None or r.types[v].contains(env[v]) for v in r.scope if v in env):
                continue
            key = tuple((v, env.get(v, UNKNOWN)) for v in r.scope)
            seen.setdefault(key, {v: env[v] for v in r.scope if v in env})
        return list(seen.values())

    def _complete(self, r: _Rule, envs) -> Iterator[dict]:
        # parameters that only occur in the conclusion range over their whole type
        for env in envs:
            missing = [v for v in r.params if v not in env]
            if not missing:
                yield env
                continue
            t = r.types[missing[0]]
            if t is None or not t.finite:
                continue
            for x in list(t.enumerate(self.store)):
                yield from self._complete(r, [{**env, missing[0]: x}])

    def _val(self, e: A.Expr, env: dict) -> Any:
        f = self._code.get(id(e))
        if f is None:
            f = self._code[id(e)] = self.interp.compile(e)
        return f(env)

    def _unbound(self, r: _Rule, node, env: dict) -> set[str]:
        return {v for v in free_vars(node) if v in r.vars and v not in env}

    def _test(self, r: _Rule, a, env: dict, ev) -> bool:
        for _ in self._solve(r, [a], env, ev):
            return True
        return False

    def _holds(self, r: _Rule, a, env: dict, ev) -> bool:
        from ..algebra.knowledge import compare
        from ..interp import truthy

        try:
            if isinstance(a, A.ACmp):
                return compare(a.op, self._val(a.left, env), self._val(a.right, env))
            if isinstance(a, A.ATruth):
                return truthy(self._val(a.expr, env))
            if isinstance(a, A.AMember):
                return self.interp.member(self._val(a.elem, env), self._val(a.coll, env))
            if isinstance(a, A.ARel):
                rel = self.store.rel(a.rel)
                v = self.interp.read(rel, self._val(a.left, env))
                w = self._val(a.right, env)
                return self.interp.member(w, v) if rel.multi else compare("=", v, w)
            if isinstance(a, A.AInst):
                x = env[a.var]
                return isinstance(x, Entity) and x.cls.is_subclass(self.store.schema.classes[a.cls])
        except RuntimeDSLError:
            return False
        raise TypeError(type(a).__name__)

    def _solve(self, r: _Rule, atoms: list, env: dict, ev) -> Iterator[dict]:
        if not atoms:
            yield env
            return
        # 1. a fully bound test
        for i, a in enumerate(atoms):
            if isinstance(a, (A.ACmp, A.ATruth, A.AMember, A.ARel, A.AInst)) and not self._unbound(r, a, env):
                if isinstance(a, A.AInst) and a.var == r.params[0] and inst_rel(a.cls) in r.events:
                    break
                if self._holds(r, a, env, ev):
                    yield from self._solve(r, atoms[:i] + atoms[i + 1:], env, ev)
                return
            if isinstance(a, A.ANot) and not self._unbound(r, a, env):
                if not self._test(r, a.body, env, ev):
                    yield from self._solve(r, atoms[:i] + atoms[i + 1:], env, ev)
                return
        # 2. binders
        for i, a in enumerate(atoms):
            rest = atoms[:i] + atoms[i + 1:]
            for env2 in self._bind(r, a, env, ev) or ():
                yield from self._solve(r, rest, env2, ev)
            if self._bindable(r, a, env):
                return
        # 3. enumerate a variable of finite type
        for i, a in enumerate(atoms):
            for v in sorted(self._unbound(r, a, env), key=list(r.types).index):
                t = r.types[v]
                if t is not None and t.finite:
                    for x in list(t.enumerate(self.store)):
                        yield from self._solve(r, atoms, {**env, v: x}, ev)
                    return
        raise RuntimeDSLError(f"rule '{r.name}': cannot enumerate the bindings of its condition")

    def _bindable(self, r: _Rule, a, env: dict) -> bool:
        return self._bind(r, a, env, None, probe=True) is not None

    def _bind(self, r: _Rule, a, env: dict, ev, probe: bool = False):
        """Solutions of ``a`` that bind new variables; None when ``a`` cannot bind yet."""
        if isinstance(a, A.AEvent):
            return [] if probe else list(self._match_event(r, a, env, ev))
        if isinstance(a, A.AInst) and a.var == r.params[0] and inst_rel(a.cls) in r.events:
            if probe:
                return []
            if ev is None or ev.rel != inst_rel(a.cls):
                return []
            x = env.get(a.var, ev.key)
            return [{**env, a.var: x}] if x is ev.key else []
        if isinstance(a, A.ACmp) and a.op == "=":
            for side, other in ((a.left, a.right), (a.right, a.left)):
                if isinstance(side, A.Name) and side.id in r.vars and side.id not in env:
                    if not self._unbound(r, other, env):
                        if probe:
                            return []
                        try:
                            v = self._val(other, env)
                        except RuntimeDSLError:
                            return []
                        return [] if v is UNKNOWN else [{**env, side.id: v}]
            return None
        if isinstance(a, A.ARel) and isinstance(a.right, A.Name) and a.right.id in r.vars \
                and a.right.id not in env and not self._unbound(r, a.left, env):
            if probe:
                return []
            rel = self.store.rel(a.rel)
            try:
                v = self.interp.read(rel, self._val(a.left, env))
            except RuntimeDSLError:
                return []
            vals = list(v) if rel.multi else ([] if v is UNKNOWN else [v])
            return [{**env, a.right.id: x} for x in vals]
        if isinstance(a, A.AMember) and isinstance(a.elem, A.Name) and a.elem.id in r.vars \
                and a.elem.id not in env and not self._unbound(r, a.coll, env):
            if probe:
                return []
            try:
                coll = self._val(a.coll, env)
                return [{**env, a.elem.id: x} for x in list(self.interp.iterate(coll))]
            except RuntimeDSLError:
                return []
        if isinstance(a, A.AExists):
            if probe:
                return []
            inner = {k: v for k, v in env.items() if k != a.var}
            return list(self._solve(r, _conjuncts(a.body), inner, ev))
        if isinstance(a, A.AOr):
            if probe:
                return []
            return list(self._solve(r, _conjuncts(a.left), env, ev)) + \
                list(self._solve(r, _conjuncts(a.right), env, ev))
        if isinstance(a, A.AIf) and not self._unbound(r, a.cond, env):
            if probe:
                return []
            branch = a.then if self._holds(r, a.cond, env, ev) else a.else_
            return list(self._solve(r, _conjuncts(branch), env, ev))
        return None

    def _match_event(self, r: _Rule, a: A.AEvent, env: dict, ev) -> Iterator[dict]:
        if ev is None:
            return
        t = a.target
        rel = t.attr if isinstance(t, A.Dot) else t.name
        if rel != ev.rel:
            return
        env = dict(env)
        keys = [t.obj] if isinstance(t, A.Dot) else t.args
        parts = [ev.key] if len(keys) == 1 else list(ev.key)
        pairs = list(zip(keys, parts))
        pairs.append((a.value, ev.new))
        if a.prev is not None:
            pairs.append((A.Name(a.prev), ev.old))
        residual = []
        for i, (e, x) in enumerate(pairs):
            if isinstance(e, A.Name) and e.id in r.vars and e.id not in env:
                env[e.id] = x
                continue
            if self._unbound(r, e, env):
                # decided once the other variables are bound; the atom is kept
                # alive because compiled code is cached by node identity
                atom = self._residual.get(id(e))
                if atom is None:
                    atom = self._residual[id(e)] = A.ACmp("=", e, A.Name(f"$event{i}"))
                env[atom.right.id] = x
                residual.append(atom)
                continue
            try:
                v = self._val(e, env)
            except RuntimeDSLError:
                return
            if not (v is x or (type(v) is type(x) and v == x)):
                return
        yield from self._solve(r, residual, env, ev)


def naive_fixpoint(program: A.Program, script: list[str], depth_limit: int = DEFAULT_DEPTH):
    """Run ``script`` (statement texts) under the naive semantics; returns (store, log)."""
    from ..interp import Interpreter
    from ..frontend import parse_statement

    rt = NaiveRuntime(program, depth_limit=depth_limit)
    interp = Interpreter(rt)  # type: ignore[arg-type]
    rt.attach(interp)
    sc = program.schema
    for name, g in sc.runtime_globals.items():
        rt.store.globals[name] = interp.eval(g.value)
    for text in script:
        interp.eval(parse_statement(text, sc.classes, sc.relations))
        if rt.depth == 0:
            rt._saturate()
    return rt.store, rt.log


__all__ = ["NaiveRuntime", "naive_fixpoint"]
