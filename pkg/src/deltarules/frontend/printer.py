"""Pretty-printer whose output parses back to an equal tree.

Parentheses never create nodes in the parser, so sub-expressions are
wrapped whenever precedence could be in doubt.
"""

from __future__ import annotations

from ..values import UNKNOWN
from . import ast as A

_COMPOUND = (A.If, A.For, A.While, A.Let, A.When, A.Assign)


def show_type(t: A.TypeExpr) -> str:
    if isinstance(t, A.TName):
        return t.name
    if isinstance(t, A.TInterval):
        return f"({show_expr(t.lo)} .. {show_expr(t.hi)})"
    inner = show_type(t.elem)
    return f"set<{inner}>" if t.multi else f"set[{inner}]"


def _params(params) -> str:
    return ", ".join(f"{v}:{show_type(t)}" for v, t in params)


def _lit(v) -> str:
    if v is UNKNOWN:
        return "unknown"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return str(v)


def _atom(e: A.Expr) -> str:
    """An expression safe to use as an operand."""
    s = show_expr(e)
    if isinstance(e, (A.BinOp, A.Neg, A.Interval) + _COMPOUND):
        return f"({s})"
    if isinstance(e, A.Lit) and isinstance(e.value, int) and e.value < 0:
        return f"({s})"
    return s


def show_expr(e: A.Expr) -> str:
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.Lit):
        return _lit(e.value)
    if isinstance(e, A.Dot):
        return f"{_atom(e.obj)}.{e.attr}"
    if isinstance(e, A.Index):
        return f"{e.name}[{', '.join(show_expr(a) for a in e.args)}]"
    if isinstance(e, A.Call):
        return f"{e.fn}({', '.join(show_expr(a) for a in e.args)})"
    if isinstance(e, A.BinOp):
        return f"{_atom(e.left)} {e.op} {_atom(e.right)}"
    if isinstance(e, A.Neg):
        return f"-({show_expr(e.operand)})"
    if isinstance(e, A.NotE):
        return f"not({show_expr(e.operand)})"
    if isinstance(e, A.Interval):
        return f"{_atom(e.lo)} .. {_atom(e.hi)}"
    if isinstance(e, A.SetFormer):
        return f"{{{e.var} in {_atom(e.src)} | {show_expr(e.cond)}}}"
    if isinstance(e, A.Image):
        head = "list" if e.is_list else ""
        return f"{head}{{{_atom(e.expr)} | {e.var} in {_atom(e.src)}}}"
    if isinstance(e, A.SetLit):
        return "{" + ", ".join(_atom(i) for i in e.items) + "}"
    if isinstance(e, A.Quant):
        return f"{e.kind}({e.var} in {_atom(e.src)} | {show_expr(e.cond)})"
    if isinstance(e, A.If):
        s = f"if ({show_expr(e.cond)}) {_stmt_atom(e.then)}"
        if e.else_ is not None:
            s += f" else {_stmt_atom(e.else_)}"
        return s
    if isinstance(e, A.Let):
        binds = ", ".join(f"{v} := {_atom(x)}" for v, x in e.bindings)
        return f"let {binds} in {_stmt_atom(e.body)}"
    if isinstance(e, A.When):
        s = f"when {e.var} := {_atom(e.value)} in {_stmt_atom(e.body)}"
        if e.else_ is not None:
            s += f" else {_stmt_atom(e.else_)}"
        return s
    if isinstance(e, A.For):
        return f"for {e.var} in {_atom(e.src)} {_stmt_atom(e.body)}"
    if isinstance(e, A.While):
        return f"while ({show_expr(e.cond)}) {_stmt_atom(e.body)}"
    if isinstance(e, A.Seq):
        return "(" + ", ".join(show_expr(i) for i in e.items) + ")"
    if isinstance(e, A.Assign):
        return f"{show_expr(e.target)} {e.op} {_stmt_atom(e.value)}"
    if isinstance(e, A.New):
        inits = "".join(f", {s} = {_atom(v)}" for s, v in e.inits)
        return f"new({e.cls}{inits})"
    raise TypeError(f"cannot print {type(e).__name__}")


def _stmt_atom(e: A.Expr) -> str:
    s = show_expr(e)
    if isinstance(e, _COMPOUND):
        return f"({s})"
    return s


def _a_atom(a: A.Assertion) -> str:
    s = show_assertion(a)
    if isinstance(a, (A.AAnd, A.AOr, A.AIf)):
        return f"({s})"
    return s


def show_assertion(a: A.Assertion) -> str:
    if isinstance(a, A.ACmp):
        return f"{_atom(a.left)} {a.op} {_atom(a.right)}"
    if isinstance(a, A.AInst):
        return f"{a.var} :: {a.cls}"
    if isinstance(a, A.AEvent):
        if a.prev is not None:
            return f"{_atom(a.target)} := ({show_expr(a.value)} <- {a.prev})"
        return f"{_atom(a.target)} := {_atom(a.value)}"
    if isinstance(a, A.AExists):
        ty = f":{show_type(a.type)}" if a.type is not None else ""
        return f"exists({a.var}{ty}, {show_assertion(a.body)})"
    if isinstance(a, A.ANot):
        return f"not({show_assertion(a.body)})"
    if isinstance(a, A.AIf):
        return f"if ({show_assertion(a.cond)}) {_a_atom(a.then)} else {_a_atom(a.else_)}"
    if isinstance(a, A.AAnd):
        left = _a_atom(a.left) if isinstance(a.left, (A.AOr, A.AIf)) else show_assertion(a.left)
        return f"{left} & {_a_atom(a.right)}"
    if isinstance(a, A.AOr):
        left = _a_atom(a.left) if isinstance(a.left, A.AIf) else show_assertion(a.left)
        return f"{left} | {_a_atom(a.right)}"
    if isinstance(a, A.ARel):
        return f"{a.rel}({show_expr(a.left)}, {show_expr(a.right)})"
    if isinstance(a, A.AMember):
        return f"{_atom(a.elem)} % {_atom(a.coll)}"
    if isinstance(a, A.ATruth):
        return _atom(a.expr)
    raise TypeError(f"cannot print {type(a).__name__}")


def show_item(item) -> str:
    if isinstance(item, A.ClassDecl):
        slots = []
        for s in item.slots:
            txt = f"{s.name}:{show_type(s.type)}"
            if s.default is not None:
                txt += f" = {_atom(s.default)}"
            slots.append(txt)
        return f"{item.name} <: {item.parent}({', '.join(slots)})"
    if isinstance(item, A.TableDecl):
        s = f"{item.name}[{_params(item.params)}] : {show_type(item.range)}"
        if item.default is not None:
            s += f" := {_atom(item.default)}"
        return s
    if isinstance(item, A.GlobalDecl):
        return f"{item.name} :: {show_expr(item.value)}"
    if isinstance(item, A.EventDecl):
        return f"{item.kind}({', '.join(item.names)})"
    if isinstance(item, A.StoreDecl):
        return f"store({', '.join(item.names)})"
    if isinstance(item, A.InverseDecl):
        return f"inverse({item.left}, {item.right})"
    if isinstance(item, A.RuleDecl):
        head = f"mode({item.mode})\n" if item.mode != "default" else ""
        return (
            f"{head}{item.name}({_params(item.params)}) :: rule(\n"
            f"  {show_assertion(item.cond)}\n  => {show_expr(item.conclusion)} )"
        )
    if isinstance(item, A.ProcDecl):
        ret = f" : {show_type(item.ret)}" if item.ret is not None else ""
        return f"{item.name}({_params(item.params)}){ret}\n  -> {show_expr(item.body)}"
    return show_expr(item)


def show_program(p: A.Program) -> str:
    return "".join(show_item(i) + "\n" for i in p.items)
