"""If-write demons assembled from rule derivatives, and the runtime that fires them.

One demon exists per triggering relation (or per class, for instantiation
events). It performs the write and then runs one fragment per rule whose
condition has a non-empty derivative with respect to that relation.
"""

from __future__ import annotations

import logging
import sys
import threading
from dataclasses import dataclass, field
from typing import Any, Callable

from ..algebra.terms import Empty, Term, dump
from ..algebra.translate import Translation, translate
from ..differentiation import differentiate
from ..errors import CompileError, Diagnostic, PropagationDepthError, RuntimeDSLError
from ..frontend import ast as A
from ..frontend.checks import INST_PREFIX, check_events, inst_rel
from ..frontend.printer import show_expr
from ..store import Store
from ..values import UNKNOWN, ClassInfo, Entity, render
from .staged import DeltaCell, Stager

log = logging.getLogger(__name__)

DEFAULT_DEPTH = 100_000


@dataclass
class Fragment:
    rule: A.RuleDecl
    deriv: Term
    conclusion: A.Expr
    mode: str | int
    guard: bool
    translation: Translation

    @property
    def priority(self) -> int:
        return self.mode if isinstance(self.mode, int) else 0


@dataclass
class Demon:
    relation: str  # relation name, or "::C" for instantiation of class C
    kind: str  # "mono" | "multi" | "instantiation"
    fragments: list[Fragment] = field(default_factory=list)


@dataclass
class DemonTable:
    demons: dict[str, Demon] = field(default_factory=dict)
    translations: dict[str, Translation] = field(default_factory=dict)
    warnings: list[Diagnostic] = field(default_factory=list)

    def get(self, rel: str) -> Demon | None:
        return self.demons.get(rel)


@dataclass
class FiringLog:
    records: list[tuple[str, Any, Any, int]] = field(default_factory=list)

    def append(self, rule: str, u: Any, v: Any, world: int) -> None:
        self.records.append((rule, u, v, world))

    def count(self, rule: str | None = None) -> int:
        if rule is None:
            return len(self.records)
        return sum(1 for r in self.records if r[0] == rule)

    def rules(self) -> list[str]:
        return [r[0] for r in self.records]

    def __len__(self) -> int:
        return len(self.records)


def trace_line(rule: str, u: Any, v: Any, world: int) -> str:
    return f"fire {rule} ({render(u)},{render(v)}) @world {world}"


def compile_rules(p: A.Program) -> DemonTable:
    """Translate, differentiate and group every rule into per-relation demons."""
    sc = p.schema
    table = DemonTable()
    triggers = check_events(p, sc)
    if p.rules and not any(isinstance(i, A.EventDecl) and i.kind == "event" for i in p.items):
        table.warnings.append(Diagnostic("no relation is declared as an event; rules will never fire"))
    order = {r.name: i for i, r in enumerate(p.rules)}
    for rule in p.rules:
        tr = translate(rule, sc)
        table.translations[rule.name] = tr
        for rel in sorted(triggers.get(rule, ())):
            d = differentiate(tr.term, rel)
            if isinstance(d, Empty):
                continue
            demon = table.demons.get(rel)
            if demon is None:
                if rel.startswith(INST_PREFIX):
                    kind = "instantiation"
                else:
                    kind = "multi" if sc.relations[rel].multi else "mono"
                demon = table.demons[rel] = Demon(rel, kind)
            demon.fragments.append(Fragment(rule, d, rule.conclusion, rule.mode, False, tr))
    for demon in table.demons.values():
        demon.fragments.sort(key=lambda f: (-f.priority, order[f.rule.name]))
        for i, f in enumerate(demon.fragments):
            f.guard = demon.kind == "mono" and i > 0
    return table


# -- staged fragments -----------------------------------------------------------------


class _OnceDone(Exception):
    """Early exit of a ``once`` fragment; unrelated to contradictions."""


@dataclass
class _Staged:
    frag: Fragment
    fn: Callable
    cand: Callable | None
    run: Callable[[dict], Any]
    name: str
    base: str
    target: str | None
    base_type: Any
    target_type: Any


class Runtime:
    """Owns the store and dispatches update and instantiation events."""

    def __init__(
        self,
        program: A.Program,
        store: Store | None = None,
        table: DemonTable | None = None,
        depth_limit: int = DEFAULT_DEPTH,
        trace: Callable[[str], None] | None = None,
    ):
        self.program = program
        self.store = store if store is not None else Store(program.schema)
        self.table = table if table is not None else compile_rules(program)
        self.depth_limit = depth_limit
        self.trace = trace
        self.log = FiringLog()
        self.cell = DeltaCell()
        self.stager = Stager(self.store, self.cell)
        self.compile_stmt: Callable[[A.Expr], Callable[[dict], Any]] | None = None
        self._staged: dict[str, list[_Staged]] = {}
        self._stack: list[str] = []

    # -- staging -------------------------------------------------------------------

    def staged(self, rel: str) -> list[_Staged]:
        out = self._staged.get(rel)
        if out is None:
            demon = self.table.get(rel)
            out = [self._stage(f) for f in demon.fragments] if demon else []
            self._staged[rel] = out
        return out

    def _stage(self, f: Fragment) -> _Staged:
        tr = f.translation
        cand = self.stager.candidates(f.deriv)
        if cand is None and not tr.base_type.finite:
            raise CompileError(
                f"rule '{f.rule.name}': cannot bound the inputs of its derivative and "
                f"'{tr.base}' ranges over the infinite type {tr.base_type.name}",
                f.rule.loc,
            )
        if self.compile_stmt is None:
            raise RuntimeError("no statement compiler attached to the runtime")
        return _Staged(
            f, self.stager.compile(f.deriv), cand, self.compile_stmt(f.conclusion),
            f.rule.name, tr.base, tr.target, tr.base_type, tr.target_type,
        )

    def stage_all(self) -> None:
        for rel in self.table.demons:
            self.staged(rel)

    # -- events -----------------------------------------------------------------------

    def world(self) -> int:
        return self.store.trail.world

    def update(self, rel: A.RelDecl | str, key: Any, v: Any) -> None:
        store = self.store
        rel = store.rel(rel)
        if rel.multi:
            raise RuntimeDSLError(f"'{rel.name}' is multi-valued; use :add")
        store.check_key(rel, key)
        last = store.raw_put(rel, key, v)
        if last is v or (last == v and type(last) is type(v)):
            return
        if v is UNKNOWN or rel.name not in self.table.demons:
            return
        self._run(rel.name, key, v, last, guard_rel=rel)

    def add(self, rel: A.RelDecl | str, key: Any, v: Any) -> None:
        store = self.store
        rel = store.rel(rel)
        if not rel.multi:
            raise RuntimeDSLError(f"'{rel.name}' is mono-valued; use :=")
        if store.raw_add(rel, key, v) and rel.name in self.table.demons:
            self._run(rel.name, key, v, UNKNOWN)

    def delete(self, rel: A.RelDecl | str, key: Any, v: Any) -> None:
        # deletions are not propagated: derivatives only cover additions
        rel = self.store.rel(rel)
        if not rel.multi:
            raise RuntimeDSLError(f"'{rel.name}' is mono-valued; :delete needs a multi-valued relation")
        self.store.delete_multi(rel, key, v)

    def increment(self, rel: A.RelDecl | str, key: Any, n: Any) -> None:
        rel = self.store.rel(rel)
        self.store.check_key(rel, key)
        old = self.store.get(rel, key)
        if old is UNKNOWN or n is UNKNOWN:
            raise RuntimeDSLError(f"cannot increment unknown value of '{rel.name}'")
        self.update(rel, key, old + n)

    def create(self, cls: ClassInfo | str, inits: dict[str, Any] | None = None, name: str | None = None) -> Entity:
        e = self.store.create_instance(cls, inits, name)
        self.fire_instantiation(e)
        return e

    def fire_instantiation(self, e: Entity) -> None:
        for c in reversed(e.cls.ancestors()):
            rel = inst_rel(c.name)
            if rel in self.table.demons:
                self._run(rel, e, e, UNKNOWN)

    # -- propagation ------------------------------------------------------------------------

    def _run(self, rel: str, a: Any, b: Any, last: Any, guard_rel: A.RelDecl | None = None) -> None:
        frags = self.staged(rel)
        if len(self._stack) >= self.depth_limit:
            self._too_deep()
        cell = self.cell
        store = self.store
        for i, s in enumerate(frags):
            if i and guard_rel is not None and store.get(guard_rel, a) != b:
                continue
            cell.rel, cell.a, cell.b, cell.last = rel, a, b, last
            tuples = self._collect(s)
            if not tuples:
                continue
            self._stack.append(s.name)
            try:
                for u, v, env in tuples:
                    self._fire(s, u, v, env)
            except RecursionError:
                self._too_deep()
            finally:
                self._stack.pop()

    def _collect(self, s: _Staged) -> list[tuple[Any, Any, dict]]:
        out: list = []
        base_ok = s.base_type.contains
        target = s.target
        tgt_ok = s.target_type.contains
        mode = s.frag.mode
        if target is None:
            def k(v, env):
                out.append((u, u, env))
                if mode == "once":
                    raise _OnceDone
        else:
            def k(v, env):
                if tgt_ok(v):
                    out.append((u, v, env))
                    if mode == "once":
                        raise _OnceDone
        inputs = s.cand() if s.cand is not None else list(s.base_type.enumerate(self.store))
        fn = s.fn
        try:
            for u in inputs:
                if base_ok(u):
                    fn(u, {}, k)
        except _OnceDone:
            pass
        if mode == "set":
            seen: dict = {}
            for t in out:
                seen.setdefault(_tuple_key(t), t)
            out = list(seen.values())
        return out

    def _fire(self, s: _Staged, u: Any, v: Any, env: dict) -> None:
        e = dict(env)
        e[s.base] = u
        if s.target is not None:
            e[s.target] = v
        w = self.store.trail.world
        self.log.append(s.name, u, v, w)
        if self.trace is not None:
            self.trace(trace_line(s.name, u, v, w))
        s.run(e)

    def _too_deep(self):
        cycle = list(dict.fromkeys(reversed(self._stack[-50:])))
        raise PropagationDepthError(
            f"propagation depth limit {self.depth_limit} exceeded; rules involved: {', '.join(cycle)}",
            cycle,
        )


def _tuple_key(t: tuple) -> tuple:
    u, v, env = t
    try:
        items = tuple(sorted(env.items()))
        hash(items)
    except TypeError:
        items = tuple(sorted((k, repr(x)) for k, x in env.items()))
    return (u, v, items)


# -- pseudo-code dump ---------------------------------------------------------------------


def dump_demons(table: DemonTable) -> str:
    """Deterministic pseudo-code rendering of every demon."""
    lines: list[str] = []
    for rel in sorted(table.demons):
        d = table.demons[rel]
        if d.kind == "instantiation":
            lines.append(f"if_write[{rel}](x)  // instantiation of {rel[len(INST_PREFIX):]}")
        else:
            lines.append(f"if_write[{rel}](x, y)  // {d.kind}")
            if d.kind == "mono":
                lines.append(f"  LAST := x.{rel}")
                lines.append("  if (LAST = y) return")
                lines.append(f"  x.{rel} := y")
            else:
                lines.append(f"  if (y in x.{rel}) return")
                lines.append(f"  x.{rel} :add y")
        for f in d.fragments:
            tr = f.translation
            pair = f"{tr.base}, {tr.target}" if tr.target else tr.base
            indent = "  "
            lines.append(f"{indent}// {f.rule.name} mode {f.mode}")
            if f.guard:
                lines.append(f"{indent}if (x.{rel} = y)")
                indent += "  "
            lines.append(f"{indent}for ({pair}) in {dump(f.deriv)}")
            lines.append(f"{indent}  {show_expr(f.conclusion)}")
        lines.append("")
    return "\n".join(lines)


# -- deep recursion helper ------------------------------------------------------------------


def run_deep(fn: Callable[[], Any], stack_mb: int = 512, recursion: int = 1_000_000) -> Any:
    """Run fn on a thread with a large stack so depth-first propagation can nest deeply."""
    result: dict[str, Any] = {}

    def target():
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, recursion))
        try:
            result["value"] = fn()
        except BaseException as exc:  # re-raised on the calling thread
            result["error"] = exc
        finally:
            sys.setrecursionlimit(old)

    prev = threading.stack_size()
    threading.stack_size(stack_mb * 1024 * 1024)
    try:
        t = threading.Thread(target=target)
        t.start()
    finally:
        threading.stack_size(prev)
    t.join()
    if "error" in result:
        raise result["error"]
    return result.get("value")


__all__ = [
    "Demon", "DemonTable", "FiringLog", "Fragment", "Runtime", "compile_rules",
    "dump_demons", "run_deep", "trace_line",
]
