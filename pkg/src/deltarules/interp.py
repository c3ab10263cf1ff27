"""Runtime evaluation of expressions and statements.

Every AST node is compiled once into a closure taking the lexical
environment (a dict). Writes go through the ``Runtime`` so that demons
fire; world operations go to the ``worlds`` module.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator

from . import worlds
from .algebra.knowledge import compare
from .engine.demons import Runtime
from .errors import Contradiction, RuntimeDSLError
from .frontend import ast as A
from .values import UNKNOWN, ClassType, Entity, IntervalType, OrderedSet, Type, render

Env = dict
Code = Callable[[Env], Any]


@dataclass
class Counters:
    """Test hook: how many collections were materialized while iterating."""

    materialized: int = 0


class ButSet:
    """``S but t``: S without t, never materialized."""

    __slots__ = ("src", "excluded", "interp")

    def __init__(self, src: Any, excluded: Any, interp: "Interpreter"):
        self.src = src
        self.excluded = excluded
        self.interp = interp

    def __iter__(self) -> Iterator[Any]:
        ex = self.excluded
        for v in self.interp.iterate(self.src):
            if not _same(v, ex):
                yield v

    def __contains__(self, v: Any) -> bool:
        return not _same(v, self.excluded) and self.interp.member(v, self.src)

    def __repr__(self) -> str:
        return f"({self.src!r} but {render(self.excluded)})"


def _same(a: Any, b: Any) -> bool:
    return a is b or (type(a) is type(b) and a == b)


def truthy(v: Any) -> bool:
    return not (v is False or v is UNKNOWN or v is None)


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "div": lambda a, b: a // b,
    "/": lambda a, b: a // b,
    "div+": lambda a, b: -((-a) // b),
    "mod": lambda a, b: a % b,
}


class Interpreter:
    def __init__(self, runtime: Runtime, out: Callable[[str], None] | None = None):
        self.rt = runtime
        self.store = runtime.store
        self.schema = runtime.store.schema
        self.out = out or (lambda s: sys.stdout.write(s + "\n"))
        self.counters = Counters()
        self._procs: dict[str, Code] = {}
        runtime.compile_stmt = self.compile

    # -- helpers ---------------------------------------------------------------------

    def error(self, msg: str, node=None) -> RuntimeDSLError:
        return RuntimeDSLError(msg, getattr(node, "loc", None))

    def iterate(self, v: Any) -> Iterable[Any]:
        """Canonical order: intervals ascending, class extents in creation order."""
        if isinstance(v, (OrderedSet, ButSet, list, tuple)):
            return v
        if isinstance(v, IntervalType):
            return range(v.lo, v.hi + 1)
        if isinstance(v, ClassType):
            self.counters.materialized += 1
            return tuple(self.store.instances(v.cls))
        if isinstance(v, Type):
            raise RuntimeDSLError(f"cannot enumerate the infinite type {v.name}")
        if v is UNKNOWN:
            raise RuntimeDSLError("cannot iterate over unknown")
        raise RuntimeDSLError(f"{render(v)} is not a collection")

    def member(self, v: Any, coll: Any) -> bool:
        if v is UNKNOWN or coll is UNKNOWN:
            return False
        if isinstance(coll, Type):
            return coll.contains(v)
        if isinstance(coll, (OrderedSet, ButSet)):
            return v in coll
        if isinstance(coll, (list, tuple)):
            return any(_same(v, x) for x in coll)
        raise RuntimeDSLError(f"{render(coll)} is not a collection")

    def read(self, rel: A.RelDecl, key: Any, node=None) -> Any:
        if key is UNKNOWN:
            raise self.error(f"dereference of unknown through '{rel.name}'", node)
        if not rel.domain.contains(key):
            raise self.error(f"{render(key)} is not in the domain of '{rel.name}'", node)
        if rel.multi:
            return OrderedSet(self.store.members(rel, key))
        return self.store.get(rel, key)

    def lookup(self, name: str, env: Env, node=None) -> Any:
        if name in env:
            return env[name]
        g = self.store.globals
        if name in g:
            return g[name]
        sc = self.schema
        if name in sc.classes:
            return ClassType(sc.classes[name])
        if name in sc.aliases:
            return sc.aliases[name]
        raise self.error(f"unbound name '{name}'", node)

    # -- compilation ---------------------------------------------------------------------

    def compile(self, e: A.Expr) -> Code:
        m = getattr(self, "_c_" + type(e).__name__, None)
        if m is None:
            raise self.error(f"cannot evaluate {type(e).__name__}", e)
        return m(e)

    def eval(self, e: A.Expr, env: Env | None = None) -> Any:
        return self.compile(e)({} if env is None else env)

    def _c_Lit(self, e: A.Lit) -> Code:
        v = e.value
        return lambda env: v

    def _c_Name(self, e: A.Name) -> Code:
        name, lookup = e.id, self.lookup
        return lambda env: env[name] if name in env else lookup(name, env, e)

    def _key(self, args: list[A.Expr]) -> Code:
        fs = [self.compile(a) for a in args]
        if len(fs) == 1:
            return fs[0]
        return lambda env: tuple(f(env) for f in fs)

    def _c_Dot(self, e: A.Dot) -> Code:
        rel = self.schema.relation(e.attr, e.loc)
        obj, read = self.compile(e.obj), self.read
        return lambda env: read(rel, obj(env), e)

    def _c_Index(self, e: A.Index) -> Code:
        rel = self.schema.relation(e.name, e.loc)
        key, read = self._key(e.args), self.read
        return lambda env: read(rel, key(env), e)

    def _c_BinOp(self, e: A.BinOp) -> Code:
        op = e.op
        l, r = self.compile(e.left), self.compile(e.right)
        if op == "&":
            return lambda env: truthy(l(env)) and truthy(r(env))
        if op == "|":
            return lambda env: truthy(l(env)) or truthy(r(env))
        if op == "%":
            member = self.member
            return lambda env: member(l(env), r(env))
        if op in ("=", "!=", "<", ">", "<=", ">="):
            return lambda env: compare(op, l(env), r(env))
        if op == "but":
            return lambda env: ButSet(l(env), r(env), self)
        if op == "U":
            it = self.iterate

            def union(env):
                a, b = l(env), r(env)
                return OrderedSet(list(it(a)) + list(it(b)))
            return union
        fn = _ARITH[op]

        def arith(env):
            a, b = l(env), r(env)
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            if not (isinstance(a, int) and isinstance(b, int)) or isinstance(a, bool) or isinstance(b, bool):
                raise self.error(f"'{op}' needs integers, got {render(a)} and {render(b)}", e)
            try:
                return fn(a, b)
            except ZeroDivisionError:
                raise self.error("division by zero", e) from None
        return arith

    def _c_Neg(self, e: A.Neg) -> Code:
        f = self.compile(e.operand)

        def neg(env):
            v = f(env)
            return UNKNOWN if v is UNKNOWN else -v
        return neg

    def _c_NotE(self, e: A.NotE) -> Code:
        f = self.compile(e.operand)
        return lambda env: not truthy(f(env))

    def _c_Interval(self, e: A.Interval) -> Code:
        lo, hi = self.compile(e.lo), self.compile(e.hi)
        return lambda env: IntervalType(lo(env), hi(env))

    def _c_SetLit(self, e: A.SetLit) -> Code:
        fs = [self.compile(i) for i in e.items]
        return lambda env: OrderedSet(f(env) for f in fs)

    def _c_SetFormer(self, e: A.SetFormer) -> Code:
        src, cond, var, it = self.compile(e.src), self.compile(e.cond), e.var, self.iterate

        def select(env):
            out = []
            for v in it(src(env)):
                inner = dict(env)
                inner[var] = v
                if truthy(cond(inner)):
                    out.append(v)
            return OrderedSet(out)
        return select

    def _c_Image(self, e: A.Image) -> Code:
        src, f, var, it = self.compile(e.src), self.compile(e.expr), e.var, self.iterate
        as_list = e.is_list

        def image(env):
            out = []
            for v in it(src(env)):
                inner = dict(env)
                inner[var] = v
                out.append(f(inner))
            return out if as_list else OrderedSet(out)
        return image

    def _c_Quant(self, e: A.Quant) -> Code:
        src, cond, var, it = self.compile(e.src), self.compile(e.cond), e.var, self.iterate
        want_witness = e.kind == "some"

        def quant(env):
            for v in it(src(env)):
                inner = dict(env)
                inner[var] = v
                if truthy(cond(inner)):
                    return v if want_witness else True
            return UNKNOWN if want_witness else False
        return quant

    def _c_If(self, e: A.If) -> Code:
        c, t = self.compile(e.cond), self.compile(e.then)
        f = self.compile(e.else_) if e.else_ is not None else None

        def if_(env):
            if truthy(c(env)):
                return t(env)
            return f(env) if f is not None else UNKNOWN
        return if_

    def _c_Let(self, e: A.Let) -> Code:
        binds = [(v, self.compile(x)) for v, x in e.bindings]
        body = self.compile(e.body)

        def let(env):
            inner = dict(env)
            for v, f in binds:
                inner[v] = f(inner)
            return body(inner)
        return let

    def _c_When(self, e: A.When) -> Code:
        val, body, var = self.compile(e.value), self.compile(e.body), e.var
        other = self.compile(e.else_) if e.else_ is not None else None

        def when(env):
            v = val(env)
            if v is not UNKNOWN:
                inner = dict(env)
                inner[var] = v
                return body(inner)
            return other(env) if other is not None else UNKNOWN
        return when

    def _c_For(self, e: A.For) -> Code:
        src, body, var, it = self.compile(e.src), self.compile(e.body), e.var, self.iterate

        def for_(env):
            coll = src(env)
            items = it(coll)
            if isinstance(coll, OrderedSet):
                items = tuple(items)
            for v in items:
                inner = dict(env)
                inner[var] = v
                body(inner)
            return True
        return for_

    def _c_While(self, e: A.While) -> Code:
        c, body = self.compile(e.cond), self.compile(e.body)

        def while_(env):
            while truthy(c(env)):
                body(env)
            return True
        return while_

    def _c_Seq(self, e: A.Seq) -> Code:
        fs = [self.compile(i) for i in e.items]

        def seq(env):
            v = UNKNOWN
            for f in fs:
                v = f(env)
            return v
        return seq

    def _c_New(self, e: A.New) -> Code:
        info = self.schema.classes[e.cls]
        inits = [(s, self.compile(x)) for s, x in e.inits]
        rt = self.rt
        return lambda env: rt.create(info, {s: f(env) for s, f in inits})

    def _c_Assign(self, e: A.Assign) -> Code:
        t, op = e.target, e.op
        val = self.compile(e.value)
        if isinstance(t, A.Name):
            return self._assign_global(t.id, op, val, e)
        if isinstance(t, A.Dot):
            rel = self.schema.relation(t.attr, t.loc)
            key = self.compile(t.obj)
        else:
            rel = self.schema.relation(t.name, t.loc)
            key = self._key(t.args)
        rt = self.rt

        def assign(env):
            k = key(env)
            if k is UNKNOWN:
                raise self.error(f"assignment through unknown to '{rel.name}'", e)
            v = val(env)
            if op == ":=":
                if rel.multi:
                    self._replace_members(rel, k, v, e)
                else:
                    rt.update(rel, k, v)
            elif op == ":add":
                rt.add(rel, k, v)
            elif op == ":delete":
                rt.delete(rel, k, v)
            elif op == ":=+":
                rt.increment(rel, k, v)
            else:
                if v is UNKNOWN:
                    raise self.error("cannot decrement by unknown", e)
                rt.increment(rel, k, -v)
            return True
        return assign

    def _replace_members(self, rel: A.RelDecl, key: Any, v: Any, node) -> None:
        new = list(self.iterate(v))
        for old in list(self.store.members(rel, key)):
            if not any(_same(old, x) for x in new):
                self.rt.delete(rel, key, old)
        for x in new:
            self.rt.add(rel, key, x)

    def _assign_global(self, name: str, op: str, val: Code, node) -> Code:
        g = self.store.globals
        if name in self.schema.consts:
            raise self.error(f"'{name}' is a constant", node)

        def assign(env):
            if name in env:
                raise self.error(f"cannot reassign the bound variable '{name}'", node)
            v = val(env)
            if op == ":=":
                g[name] = v
            elif op in (":=+", ":=-"):
                cur = g.get(name, UNKNOWN)
                if cur is UNKNOWN or v is UNKNOWN:
                    raise self.error(f"cannot increment unknown global '{name}'", node)
                g[name] = cur + v if op == ":=+" else cur - v
            elif op == ":add":
                g[name] = OrderedSet(list(g.get(name, OrderedSet())) + [v])
            else:
                g[name] = OrderedSet(x for x in g.get(name, OrderedSet()) if not _same(x, v))
            return True
        return assign

    # -- calls -------------------------------------------------------------------------------

    def _c_Call(self, e: A.Call) -> Code:
        fn = e.fn
        sc = self.schema
        if fn in sc.procs:
            return self._call_proc(e)
        if fn in sc.relations:
            rel = sc.relations[fn]
            args = [self.compile(a) for a in e.args]
            read, member = self.read, self.member
            if len(args) == 1:
                return lambda env: read(rel, args[0](env), e)

            def holds(env):
                v = read(rel, args[0](env), e)
                w = args[1](env)
                return member(w, v) if rel.multi else compare("=", v, w)
            return holds
        m = getattr(self, "_b_" + fn.replace("?", "_q").replace("=", "_set"), None)
        if m is None:
            raise self.error(f"unknown function '{fn}'", e)
        return m(e, [self.compile(a) for a in e.args])

    def _call_proc(self, e: A.Call) -> Code:
        proc = self.schema.procs[e.fn]
        names = [v for v, _ in proc.params]
        args = [self.compile(a) for a in e.args]
        procs = self._procs

        def call(env):
            body = procs.get(proc.name)
            if body is None:
                procs[proc.name] = body = self.compile(proc.body)
            return body({n: a(env) for n, a in zip(names, args)})
        return call

    def _b_print(self, e, args):
        def print_(env):
            vals = [a(env) for a in args]
            self.out(" ".join(v if isinstance(v, str) else render(v) for v in vals))
            return True
        return print_

    def _b_branch(self, e, args):
        store = self.store

        def branch(env):
            def body():
                v = True
                for a in args:
                    v = a(env)
                return truthy(v)
            return worlds.branch(store, body)
        return branch

    def _b_choice(self, e, args):
        return lambda env: worlds.choice(self.store)

    def _b_backtrack(self, e, args):
        return lambda env: worlds.backtrack(self.store)

    def _b_commit(self, e, args):
        return lambda env: worlds.commit(self.store)

    def _b_world_q(self, e, args):
        return lambda env: worlds.world(self.store)

    def _b_world_set(self, e, args):
        if len(args) != 1:
            raise self.error("world= takes one argument", e)
        return lambda env: worlds.world_set(self.store, args[0](env))

    def _b_contradiction(self, e, args):
        def contradiction(env):
            raise Contradiction("contradiction")
        return contradiction

    def _b_size(self, e, args):
        def size(env):
            v = args[0](env)
            if isinstance(v, IntervalType):
                return max(0, v.hi - v.lo + 1)
            return sum(1 for _ in self.iterate(v))
        return size

    def _b_abs(self, e, args):
        def abs_(env):
            v = args[0](env)
            return UNKNOWN if v is UNKNOWN else abs(v)
        return abs_

    def _b_sum(self, e, args):
        def sum_(env):
            total = 0
            for v in self.iterate(args[0](env)):
                if v is UNKNOWN:
                    return UNKNOWN
                total += v
            return total
        return sum_

    def _extremum(self, e, args, pick):
        def ext(env):
            vals = [a(env) for a in args]
            if len(vals) == 1:
                vals = list(self.iterate(vals[0]))
            if not vals:
                raise self.error(f"{e.fn} of an empty collection", e)
            if any(v is UNKNOWN for v in vals):
                return UNKNOWN
            return pick(vals)
        return ext

    def _b_max(self, e, args):
        return self._extremum(e, args, max)

    def _b_min(self, e, args):
        return self._extremum(e, args, min)


# -- whole programs -----------------------------------------------------------------------------


class Session:
    """A program loaded with its store, demons and interpreter."""

    def __init__(
        self,
        program: A.Program,
        trace: Callable[[str], None] | None = None,
        depth_limit: int | None = None,
        out: Callable[[str], None] | None = None,
        table=None,
    ):
        from .engine.demons import DEFAULT_DEPTH

        self.program = program
        self.runtime = Runtime(program, table=table, depth_limit=depth_limit or DEFAULT_DEPTH, trace=trace)
        self.store = self.runtime.store
        self.interp = Interpreter(self.runtime, out)
        self.runtime.stage_all()
        for name, g in program.schema.runtime_globals.items():
            self.store.globals[name] = self.interp.eval(g.value)

    @property
    def log(self):
        return self.runtime.log

    def run(self) -> Any:
        v = UNKNOWN
        for st in self.program.statements:
            v = self.interp.eval(st)
        return v

    def exec(self, text: str, env: Env | None = None) -> Any:
        from .frontend import parse_statement

        sc = self.program.schema
        return self.interp.eval(parse_statement(text, sc.classes, sc.relations), env)


def load(text: str, file: str = "<input>", **kw) -> Session:
    from .frontend import parse_program

    return Session(parse_program(text, file), **kw)


__all__ = ["ButSet", "Counters", "Interpreter", "Session", "load", "truthy"]
