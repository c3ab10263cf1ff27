"""Translation of rule conditions into relational terms.

The condition is read as an equation system in which the base variable x
is known and the target y is sought. Every other variable is solved in
turn from an atom that determines it, using group and monoid inverses for
arithmetic. Atoms left over once everything is known become filters.

A variable is lambda-bound when the conclusion needs it, when it is used
more than once, or when it is used inside a set former (whose input is a
different base). Otherwise its defining term is inlined at its single use.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any

from ..errors import CompileError, TranslationError
from ..frontend import ast as A
from ..frontend.checks import free_vars, inst_rel
from ..frontend.schema import Schema
from ..values import ANY, BOOLEAN, INTEGER, ClassType, IntervalType, OrderedSet, SetOfType, Type
from .knowledge import KNOWLEDGE
from .simplify import simplify
from .terms import (
    IDENTITY, CartesianConst, Chi, Compose, Const, Identity, IfTest, Inverse, LambdaBind, Not,
    Phi, PrevLambda, Psi, RelVar, SetExpansion, SetFormer, Term, Union, Var, compose_chain,
    rebuild, union_all,
)

ARITH = {"+", "-", "*", "div", "div+", "mod"}
BUILTIN_PSI = {"max": "max", "min": "min", "abs": "abs", "size": "size"}


@dataclass
class Translation:
    rule: A.RuleDecl
    term: Term
    base: str
    target: str | None  # None: the term is a filter and y is x
    base_type: Type
    target_type: Type
    var_types: dict[str, Type] = field(default_factory=dict)


class _Unsolvable(Exception):
    pass


# -- term utilities ----------------------------------------------------------------


def uses(t: Term, v: str, shifted: bool = False) -> tuple[int, bool]:
    """Occurrences of Var(v) in t, and whether any sits under a set former's filter."""
    if isinstance(t, Var):
        return (1, shifted) if t.z == v else (0, False)
    n, sh = 0, False
    if isinstance(t, SetFormer):
        c1, s1 = uses(t.t1, v, shifted)
        c2, s2 = uses(t.t2, v, True)
        return c1 + c2, s1 or s2
    for c in t.children():
        k, s = uses(c, v, shifted)
        n += k
        sh = sh or s
    return n, sh


def subst(t: Term, v: str, repl: Term) -> Term:
    if isinstance(t, Var):
        return repl if t.z == v else t
    kids = t.children()
    if not kids:
        return t
    return rebuild(t, [subst(c, v, repl) for c in kids])


def _rename(a, old: str, new: str):
    """Rename free occurrences of a variable inside an assertion or expression."""
    if isinstance(a, A.Name):
        return A.Name(new, loc=a.loc) if a.id == old else a
    if isinstance(a, A.AInst):
        return A.AInst(new if a.var == old else a.var, a.cls, loc=a.loc)
    if isinstance(a, A.AEvent):
        return A.AEvent(_rename(a.target, old, new), _rename(a.value, old, new),
                        new if a.prev == old else a.prev, loc=a.loc)
    if isinstance(a, (A.AExists, A.SetFormer, A.Quant, A.Image)) and a.var == old:
        if isinstance(a, A.AExists):
            return a
        return _rebuild_dc(a, src=_rename(a.src, old, new))
    if not hasattr(a, "__dataclass_fields__"):
        return a
    changes = {}
    for name in a.__dataclass_fields__:
        if name == "loc":
            continue
        val = getattr(a, name)
        if isinstance(val, list):
            changes[name] = [
                tuple(_rename(x, old, new) for x in item) if isinstance(item, tuple)
                else _rename(item, old, new)
                for item in val
            ]
        elif hasattr(val, "__dataclass_fields__"):
            changes[name] = _rename(val, old, new)
    return _rebuild_dc(a, **changes)


def _rebuild_dc(node, **changes):
    import dataclasses

    return dataclasses.replace(node, **changes)


# -- normalization --------------------------------------------------------------------


def expr_to_assertion(e: A.Expr) -> A.Assertion:
    """A boolean expression seen as an assertion."""
    if isinstance(e, A.BinOp) and e.op == "&":
        return A.AAnd(expr_to_assertion(e.left), expr_to_assertion(e.right), loc=e.loc)
    if isinstance(e, A.BinOp) and e.op == "|":
        return A.AOr(expr_to_assertion(e.left), expr_to_assertion(e.right), loc=e.loc)
    if isinstance(e, A.BinOp) and e.op in ("=", "!=", "<", ">", "<=", ">="):
        return A.ACmp(e.op, e.left, e.right, loc=e.loc)
    if isinstance(e, A.BinOp) and e.op == "%":
        return A.AMember(e.left, e.right, loc=e.loc)
    if isinstance(e, A.NotE):
        return A.ANot(expr_to_assertion(e.operand), loc=e.loc)
    if isinstance(e, A.Quant) and e.kind == "exists":
        body = A.AAnd(A.AMember(A.Name(e.var), e.src, loc=e.loc), expr_to_assertion(e.cond))
        return A.AExists(e.var, None, body, loc=e.loc)
    return A.ACmp("=", e, A.Lit(True), loc=e.loc)


def normalize_atom(a: A.Assertion) -> A.Assertion:
    if isinstance(a, A.ATruth):
        return expr_to_assertion(a.expr)
    return a


class _Namer:
    def __init__(self, taken: set[str]):
        self.taken = set(taken)

    def fresh(self, v: str) -> str:
        if v not in self.taken:
            self.taken.add(v)
            return v
        for i in itertools.count(1):
            cand = f"{v}{i}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand
        raise AssertionError


def dnf(a: A.Assertion, split_or: Any, namer: _Namer, types: dict) -> list[list[A.Assertion]]:
    """Disjunctive normal form over atoms; existentials are lifted with unique names.

    ``split_or(or_node)`` decides whether a disjunction is distributed or
    kept whole as a filter atom.
    """
    a = normalize_atom(a)
    if isinstance(a, A.AAnd):
        left = dnf(a.left, split_or, namer, types)
        right = dnf(a.right, split_or, namer, types)
        return [l + r for l in left for r in right]
    if isinstance(a, A.AOr):
        if split_or(a):
            return dnf(a.left, split_or, namer, types) + dnf(a.right, split_or, namer, types)
        return [[a]]
    if isinstance(a, A.AExists):
        v = namer.fresh(a.var)
        body = a.body if v == a.var else _rename(a.body, a.var, v)
        types[v] = a.type
        return dnf(body, split_or, namer, types)
    return [[a]]


# -- the translator -------------------------------------------------------------------------


class Translator:
    def __init__(self, schema: Schema, rule_name: str = "?"):
        self.sc = schema
        self.rule_name = rule_name
        self.var_types: dict[str, Type] = {}

    def error(self, msg: str, loc=None) -> TranslationError:
        return TranslationError(f"rule '{self.rule_name}': {msg}", loc)

    # variables and globals

    def is_var(self, name: str) -> bool:
        return name in self.var_types

    def vars_of(self, node) -> set[str]:
        return {v for v in free_vars(node) if self.is_var(v)}

    def global_term(self, name: str) -> Term:
        sc = self.sc
        if name in sc.consts:
            v = sc.consts[name]
            return Const(v)
        if name in sc.classes:
            return Const(ClassType(sc.classes[name]))
        if name in sc.aliases:
            return Const(sc.aliases[name])
        if name in sc.runtime_globals:
            return Const(None, ref=name)
        raise self.error(f"unknown name '{name}'")

    # expressions

    def term(self, e: A.Expr, known: set[str]) -> Term:
        if isinstance(e, A.Name):
            if self.is_var(e.id):
                if e.id not in known:
                    raise _Unsolvable(e.id)
                return Var(e.id)
            return self.global_term(e.id)
        if isinstance(e, A.Lit):
            return Const(e.value)
        if isinstance(e, A.Dot):
            return Compose(RelVar(e.attr), self.term(e.obj, known))
        if isinstance(e, A.Index):
            return Compose(RelVar(e.name), self.key_term(e.args, known))
        if isinstance(e, A.Call):
            if e.fn in self.sc.relations and len(e.args) == 1:
                return Compose(RelVar(e.fn), self.term(e.args[0], known))
            if e.fn in BUILTIN_PSI:
                args = [self.term(x, known) for x in e.args]
                if len(args) == 1:
                    return Psi(BUILTIN_PSI[e.fn], args[0])
                if len(args) == 2:
                    return Psi(BUILTIN_PSI[e.fn], args[0], args[1])
            if e.fn in self.sc.procs:
                raise CompileError(
                    f"rule '{self.rule_name}': procedure '{e.fn}' cannot be used in a condition", e.loc
                )
            raise self.error(f"'{e.fn}(...)' cannot be used in a condition", e.loc)
        if isinstance(e, A.BinOp) and e.op in ARITH:
            return Psi(e.op, self.term(e.left, known), self.term(e.right, known))
        if isinstance(e, A.Neg):
            return Psi("neg", self.term(e.operand, known))
        if isinstance(e, A.Interval):
            return Psi("interval", self.term(e.lo, known), self.term(e.hi, known))
        if isinstance(e, A.SetLit):
            items = []
            for i in e.items:
                t = self.term(i, known)
                if not isinstance(t, Const) or t.ref is not None:
                    raise self.error("set literals in conditions must be constant", e.loc)
                items.append(t.value)
            return Const(OrderedSet(items))
        if isinstance(e, A.SetFormer):
            z = _Namer(set(self.var_types)).fresh(e.var)
            cond = e.cond if z == e.var else _rename(e.cond, e.var, z)
            src = self.members_term(e.src, known)
            self.var_types[z] = self.elem_type(src)
            inner = self.filter_of(expr_to_assertion(cond), base=z, known=known | {z})
            # inside the set former z is the input
            n, shifted = uses(inner, z)
            inner = LambdaBind(z, IDENTITY, inner) if shifted else subst(inner, z, IDENTITY)
            return SetFormer(z, src, inner)
        raise self.error(f"unsupported expression in a condition ({type(e).__name__})", e.loc)

    def key_term(self, args: list[A.Expr], known: set[str]) -> Term:
        if len(args) == 1:
            return self.term(args[0], known)
        return Psi("pair", self.term(args[0], known), self.term(args[1], known))

    def rel_of(self, e: A.Expr):
        if isinstance(e, A.Dot):
            return self.sc.relations.get(e.attr)
        if isinstance(e, A.Index):
            return self.sc.relations.get(e.name)
        if isinstance(e, A.Call) and len(e.args) == 1:
            return self.sc.relations.get(e.fn)
        return None

    def members_term(self, coll: A.Expr, known: set[str]) -> Term:
        """Term yielding the members of a collection expression, one per value."""
        rel = self.rel_of(coll)
        t = self.term(coll, known)
        if rel is not None and rel.multi:
            return t
        return SetExpansion(t)

    # types

    def elem_type(self, t: Term) -> Type:
        if isinstance(t, SetExpansion):
            inner = self.range_of(t.t)
            if isinstance(inner, SetOfType):
                return inner.elem
            if isinstance(t.t, Const) and isinstance(t.t.value, Type):
                return t.t.value
            return ANY
        return self.range_of(t)

    def range_of(self, t: Term) -> Type:
        if isinstance(t, RelVar):
            return self.sc.relations[t.name].range
        if isinstance(t, Chi):
            if t.rel.startswith("::"):
                return ClassType(self.sc.classes[t.rel[2:]])
            return self.sc.relations[t.rel].range
        if isinstance(t, Compose):
            return self.range_of(t.a)
        if isinstance(t, Inverse) and isinstance(t.t, (RelVar, Chi)):
            name = t.t.name if isinstance(t.t, RelVar) else t.t.rel
            return self.sc.relations[name].domain
        if isinstance(t, Psi):
            if t.op in ARITH or t.op in ("neg", "abs", "size", "max", "min"):
                return INTEGER
            return ANY
        if isinstance(t, CartesianConst):
            return t.rng
        if isinstance(t, SetExpansion):
            return self.elem_type(t)
        if isinstance(t, Var):
            return self.var_types.get(t.z, ANY)
        if isinstance(t, Const):
            v = t.value
            if isinstance(v, bool):
                return BOOLEAN
            if isinstance(v, int):
                return IntervalType(v, v)
            return ANY
        if isinstance(t, (Phi, Not, Identity)):
            return self.base_type
        return ANY

    def typed(self, v: str, d: Term) -> Term:
        want = self.var_types.get(v, ANY)
        if want is ANY or self.range_of(d).subtype_of(want):
            return d
        return Compose(Phi("%", IDENTITY, Const(want)), d)

    # solving an equation for its single unknown

    def solve(self, e: A.Expr, t: Term, known: set[str]) -> tuple[str, Term]:
        if isinstance(e, A.Name) and self.is_var(e.id):
            return e.id, t
        rel = self.rel_of(e)
        if rel is not None:
            obj = e.obj if isinstance(e, A.Dot) else e.args[0]
            if isinstance(e, A.Index) and len(e.args) != 1:
                raise _Unsolvable("paired key")
            return self.solve(obj, Compose(Inverse(RelVar(rel.name)), t), known)
        if isinstance(e, A.Neg):
            return self.solve(e.operand, Psi("neg", t), known)
        if isinstance(e, A.BinOp) and e.op in KNOWLEDGE.ops:
            info = KNOWLEDGE.op(e.op)
            if info.structure == "plain" or info.inv is None:
                raise _Unsolvable(e.op)
            left_unknown = bool(self.vars_of(e.left) - known)
            if left_unknown:
                other = self.term(e.right, known)
                sub, inv = e.left, info.inv
                solved = Psi(inv, t, other)
            else:
                other = self.term(e.left, known)
                sub, inv = e.right, info.inv_right
                solved = Psi("-", other, t) if inv == "-rev" else Psi(inv, t, other)
            if info.guard is not None:
                solved = Compose(solved, Phi(info.guard, t, other))
            return self.solve(sub, solved, known)
        raise _Unsolvable(type(e).__name__)

    # the conjunctive core

    def solve_conj(
        self,
        atoms: list[A.Assertion],
        base: str,
        target: str | None,
        known: set[str],
        keep: set[str],
        local: list[str],
    ) -> Term:
        """Term for a conjunction of atoms, as seen from ``base``.

        ``keep`` are variables that must stay lambda-bound (the conclusion's),
        ``local`` lists the variables this conjunction has to determine.
        """
        known = set(known) | {base}
        steps: list[tuple[str, str, Any]] = []
        pending = list(atoms)

        def bind(v: str, d: Term) -> None:
            steps.append(("bind", v, self.typed(v, simplify(d))))
            known.add(v)

        # update events first: they fix the new value and the previous one
        for a in list(pending):
            if not isinstance(a, A.AEvent):
                continue
            ev = self.event_term(a, known)
            if ev is None:
                continue
            pending.remove(a)
            if a.prev is not None:
                if not isinstance(ev, Compose) or not _is_base_ref(ev.b, base):
                    raise self.error("a previous-value event must update the base variable", a.loc)
                steps.append(("prev", a.prev, ev.a.rel))
                known.add(a.prev)
            unknown = self.vars_of(a.value) - known
            if not unknown:
                pending.insert(0, _EventFilter(ev, a.value, a.loc))
                continue
            try:
                v, d = self.solve(a.value, ev, known)
            except _Unsolvable:
                raise self.error("cannot solve the update event for its variables", a.loc) from None
            bind(v, d)

        needed = list(dict.fromkeys(local + ([target] if target else [])))
        while True:
            missing = [v for v in needed if v not in known]
            missing += [
                v for a in pending for v in sorted(self.atom_vars(a) - known) if v not in missing
            ]
            if not missing:
                break
            if self.step_equation(pending, known, bind):
                continue
            if self.step_membership(pending, known, bind):
                continue
            # nothing determines a variable: enumerate a finite type
            order = [v for v in missing if v in local and v != target]
            order += [v for v in missing if v == target]
            order += [v for v in missing if v not in order]
            for v in order:
                ty = self.var_types.get(v, ANY)
                if ty.finite:
                    bind(v, CartesianConst(self.base_type, ty))
                    break
            else:
                raise self.error(
                    f"cannot determine variable '{missing[0]}' from the condition"
                )

        filters = [self.filter_atom(a, known) for a in pending]
        parts: list[Term] = [Var(target)] if target and target != base else []
        body = compose_chain(parts + filters)
        for kind, v, payload in reversed(steps):
            if kind == "prev":
                body = PrevLambda(v, payload, body)
            else:
                body = LambdaBind(v, payload, body)
        return self.inline(body, keep)

    def inline(self, t: Term, keep: set[str]) -> Term:
        if isinstance(t, LambdaBind):
            body = self.inline(t.t2, keep)
            if t.z not in keep:
                n, shifted = uses(body, t.z)
                if n == 1 and not shifted:
                    return subst(body, t.z, t.t1)
            return LambdaBind(t.z, t.t1, body)
        if isinstance(t, PrevLambda):
            return PrevLambda(t.z, t.rel, self.inline(t.body, keep))
        return t

    def atom_vars(self, a) -> set[str]:
        if isinstance(a, _EventFilter):
            return self.vars_of(a.value)
        if isinstance(a, A.AInst):
            return {a.var}
        return self.vars_of(a)

    def event_term(self, a: A.AEvent, known: set[str]) -> Term | None:
        tgt = a.target
        if isinstance(tgt, A.Dot):
            if self.vars_of(tgt.obj) - known:
                return None
            return Compose(Chi(tgt.attr), self.term(tgt.obj, known))
        if isinstance(tgt, A.Index):
            if any(self.vars_of(x) - known for x in tgt.args):
                return None
            return Compose(Chi(tgt.name), self.key_term(tgt.args, known))
        raise self.error("an update event must target a slot or a table entry", a.loc)

    def step_equation(self, pending, known, bind) -> bool:
        for a in pending:
            if isinstance(a, A.ACmp) and a.op == "=":
                lu = self.vars_of(a.left) - known
                ru = self.vars_of(a.right) - known
                if len(lu | ru) != 1 or (lu and ru):
                    continue
                sought, other = (a.left, a.right) if lu else (a.right, a.left)
                v = next(iter(lu | ru))
                if _count_name(sought, v) != 1:
                    continue
                try:
                    w, d = self.solve(sought, self.term(other, known), known)
                except _Unsolvable:
                    continue
                pending.remove(a)
                bind(w, d)
                return True
            if isinstance(a, A.ARel):
                lu = self.vars_of(a.left) - known
                ru = self.vars_of(a.right) - known
                if not lu and len(ru) == 1 and isinstance(a.right, A.Name):
                    pending.remove(a)
                    bind(a.right.id, Compose(RelVar(a.rel), self.term(a.left, known)))
                    return True
                if not ru and len(lu) == 1 and isinstance(a.left, A.Name):
                    pending.remove(a)
                    bind(a.left.id, Compose(Inverse(RelVar(a.rel)), self.term(a.right, known)))
                    return True
        return False

    def step_membership(self, pending, known, bind) -> bool:
        for a in pending:
            if not isinstance(a, A.AMember):
                continue
            eu = self.vars_of(a.elem) - known
            cu = self.vars_of(a.coll) - known
            if isinstance(a.elem, A.Name) and eu == {a.elem.id} and not cu:
                pending.remove(a)
                bind(a.elem.id, self.members_term(a.coll, known))
                return True
            rel = self.rel_of(a.coll)
            if not eu and len(cu) == 1 and rel is not None and rel.multi and rel.arity == 1:
                obj = a.coll.obj if isinstance(a.coll, A.Dot) else a.coll.args[0]
                if isinstance(obj, A.Name) and obj.id in cu:
                    pending.remove(a)
                    bind(obj.id, Compose(Inverse(RelVar(rel.name)), self.term(a.elem, known)))
                    return True
        return False

    # filters

    def filter_atom(self, a, known: set[str]) -> Term:
        if isinstance(a, _EventFilter):
            return Phi("=", a.ev, self.term(a.value, known))
        if isinstance(a, A.ACmp):
            return Phi(a.op, self.term(a.left, known), self.term(a.right, known))
        if isinstance(a, A.AMember):
            rel = self.rel_of(a.coll)
            elem = self.term(a.elem, known)
            coll = self.term(a.coll, known)
            if rel is not None and rel.multi:
                return Phi("=", elem, coll)
            return Phi("%", elem, coll)
        if isinstance(a, A.ARel):
            return Phi("=", Compose(RelVar(a.rel), self.term(a.left, known)), self.term(a.right, known))
        if isinstance(a, A.AInst):
            if a.var == self.current_base:
                return Chi(inst_rel(a.cls))
            return Phi("%", self.term(A.Name(a.var), known), Const(ClassType(self.sc.classes[a.cls])))
        if isinstance(a, A.ANot):
            return Not(self.filter_of(a.body, self.current_base, known))
        if isinstance(a, A.AIf):
            test = self.filter_atom(a.cond, known)
            return IfTest(
                test,
                self.filter_of(a.then, self.current_base, known),
                self.filter_of(a.else_, self.current_base, known),
            )
        if isinstance(a, A.AOr):
            return Union(
                self.filter_of(a.left, self.current_base, known),
                self.filter_of(a.right, self.current_base, known),
            )
        if isinstance(a, A.AEvent):
            raise self.error("an update event cannot appear under negation or a disjunction", a.loc)
        raise self.error(f"unsupported assertion ({type(a).__name__})", getattr(a, "loc", None))

    def filter_of(self, a: A.Assertion, base: str, known: set[str]) -> Term:
        """A nested condition seen as a filter at ``base``; outer variables are Vars."""
        saved = self.current_base
        self.current_base = base
        try:
            types: dict = {}
            namer = _Namer(set(self.var_types) | known)
            disjuncts = dnf(a, lambda o: bool(self.vars_of(o) - known), namer, types)
            for v, te in types.items():
                self.var_types[v] = self.sc.resolve_type(te) if te is not None else ANY
            terms = []
            for d in disjuncts:
                local = [v for v in types if any(v in self.atom_vars(x) for x in d)]
                terms.append(self.solve_conj(d, base, None, known, set(), local))
            return simplify(union_all(terms))
        finally:
            self.current_base = saved

    # entry point

    def translate_rule(self, rule: A.RuleDecl) -> Translation:
        sc = self.sc
        params = [(v, sc.resolve_type(t)) for v, t in rule.params]
        self.var_types = dict(params)
        base, self.base_type = params[0]
        self.current_base = base
        concl = free_vars(rule.conclusion)
        target = None
        target_type = self.base_type
        # the second parameter is sought unless an update event binds it and
        # the conclusion ignores it; then the term is a filter on x
        if len(params) > 1 and (params[1][0] in concl or params[1][0] not in _event_vars(rule.cond)):
            target, target_type = params[1]
        keep = {v for v in concl if v not in (base, target)}
        types: dict = {}
        namer = _Namer(set(self.var_types))
        top = [True]

        def split(o) -> bool:
            # the outermost disjunction always becomes a union of rules
            if top[0]:
                return True
            return bool(self.vars_of(o) - {base})

        disjuncts = dnf(rule.cond, split, namer, types)
        top[0] = False
        for v, te in types.items():
            self.var_types[v] = sc.resolve_type(te) if te is not None else ANY
        # existentials keep their source names when the conclusion uses them
        keep |= {v for v in types if v in concl}
        terms = []
        for d in disjuncts:
            present = set().union(*(self.atom_vars(x) for x in d)) if d else set()
            local = [v for v, _ in params[1:] if v != target and (v in present or v in keep)]
            local += [v for v in types if v in present or v in keep]
            t = self.solve_conj(d, base, target, set(), keep, local)
            n, shifted = uses(t, base)
            t = LambdaBind(base, IDENTITY, t) if shifted else subst(t, base, IDENTITY)
            terms.append(simplify(t))
        term = terms[0] if len(terms) == 1 else simplify(union_all(terms))
        return Translation(rule, term, base, target, self.base_type, target_type, dict(self.var_types))


@dataclass
class _EventFilter:
    """A fully known update event: the new value must equal ``value``."""

    ev: Term
    value: A.Expr
    loc: Any = None


def _event_vars(a: A.Assertion) -> set[str]:
    from ..frontend.checks import walk

    out = set()
    for n in walk(a):
        if isinstance(n, A.AEvent):
            if n.prev is not None:
                out.add(n.prev)
            if isinstance(n.value, A.Name):
                out.add(n.value.id)
    return out


def _is_base_ref(t: Term, base: str) -> bool:
    return (isinstance(t, Var) and t.z == base) or isinstance(t, Identity)


def _count_name(e, v: str) -> int:
    from ..frontend.checks import walk

    return sum(1 for n in walk(e) if isinstance(n, A.Name) and n.id == v)


def translate(rule: A.RuleDecl, schema: Schema) -> Translation:
    return Translator(schema, rule.name).translate_rule(rule)


__all__ = ["Translation", "Translator", "expr_to_assertion", "translate", "uses", "subst"]
