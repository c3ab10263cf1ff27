"""Recursive-descent parser for programs, statements and rule conditions."""

from __future__ import annotations

from ..errors import Loc, ParseError
from ..values import UNKNOWN
from . import ast as A
from .lexer import Token, split_forms, tokenize

CMP_OPS = ("=", "!=", "<", ">", "<=", ">=")
ASSIGN_OPS = (":=", ":add", ":delete", ":=+", ":=-")
DECL_WORDS = ("event", "noevent", "store", "inverse", "mode")


class Parser:
    def __init__(self, toks: list[Token], classes: set[str], relations: set[str]):
        self.toks = toks
        self.pos = 0
        self.classes = classes
        self.relations = relations

    # -- helpers ---------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        i = min(self.pos + k, len(self.toks) - 1)
        return self.toks[i]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        found = "end of form" if t.kind == "EOF" else repr(t.value)
        return ParseError(f"{msg} (found {found})", t.loc)

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.error(f"expected '{op}'")
        return self.advance()

    def expect_name(self, *names: str) -> str:
        if not self.tok.is_name(*names):
            want = "/".join(names) if names else "identifier"
            raise self.error(f"expected {want}")
        return self.advance().value  # type: ignore[return-value]

    def at_end(self) -> bool:
        return self.tok.kind == "EOF"

    # -- top level ----------------------------------------------------------

    def parse_form(self):
        t0, t1 = self.tok, self.peek()
        if t0.kind == "NAME":
            if t1.is_op("<:"):
                return self.parse_class()
            if t1.is_op("::"):
                return self.parse_global()
            if t1.is_op("[") and self.peek(2).kind == "NAME" and self.peek(3).is_op(":"):
                return self.parse_table()
            if t0.value in DECL_WORDS and t1.is_op("("):
                return self.parse_decl()
            if t1.is_op("("):
                k = self.matching(self.pos + 1)
                after = self.toks[k + 1]
                if after.is_op("::"):
                    return self.parse_rule()
                if after.is_op(":", "->"):
                    return self.parse_proc()
        return self.parse_stmt()

    def matching(self, i: int) -> int:
        depth = 0
        while i < len(self.toks):
            t = self.toks[i]
            if t.is_op("(", "[", "{"):
                depth += 1
            elif t.is_op(")", "]", "}"):
                depth -= 1
                if depth == 0:
                    return i
            elif t.kind == "EOF":
                break
            i += 1
        raise self.error("unbalanced brackets", self.toks[i if i < len(self.toks) else -1])

    def parse_class(self) -> A.ClassDecl:
        loc = self.tok.loc
        name = self.expect_name()
        self.expect_op("<:")
        parent = self.expect_name()
        self.classes.add(name)
        slots = []
        self.expect_op("(")
        while not self.tok.is_op(")"):
            sloc = self.tok.loc
            sname = self.expect_name()
            self.expect_op(":")
            ty = self.parse_type()
            default = None
            if self.tok.is_op("="):
                self.advance()
                default = self.parse_expr()
            slots.append(A.SlotDecl(sname, ty, default, loc=sloc))
            self.relations.add(sname)
            if not self.tok.is_op(","):
                break
            self.advance()
        self.expect_op(")")
        return A.ClassDecl(name, parent, slots, loc=loc)

    def parse_global(self) -> A.GlobalDecl:
        loc = self.tok.loc
        name = self.expect_name()
        self.expect_op("::")
        return A.GlobalDecl(name, self.parse_expr(), loc=loc)

    def parse_table(self) -> A.TableDecl:
        loc = self.tok.loc
        name = self.expect_name()
        self.expect_op("[")
        params = self.parse_params("]")
        self.expect_op(":")
        ty = self.parse_type()
        default = None
        if self.tok.is_op(":="):
            self.advance()
            default = self.parse_expr()
        self.relations.add(name)
        return A.TableDecl(name, params, ty, default, loc=loc)

    def parse_params(self, close: str) -> list[tuple[str, A.TypeExpr]]:
        params = []
        while not self.tok.is_op(close):
            v = self.expect_name()
            self.expect_op(":")
            params.append((v, self.parse_type()))
            if not self.tok.is_op(","):
                break
            self.advance()
        self.expect_op(close)
        return params

    def parse_type(self) -> A.TypeExpr:
        t = self.tok
        if t.is_op("("):
            self.advance()
            lo = self.parse_add()
            self.expect_op("..")
            hi = self.parse_add()
            self.expect_op(")")
            return A.TInterval(lo, hi, loc=t.loc)
        name = self.expect_name()
        if name == "set" and self.tok.is_op("<"):
            self.advance()
            elem = self.parse_type()
            self.expect_op(">")
            return A.TSet(elem, True, loc=t.loc)
        if name == "set" and self.tok.is_op("["):
            self.advance()
            elem = self.parse_type()
            self.expect_op("]")
            return A.TSet(elem, False, loc=t.loc)
        if self.tok.is_op("[", "<"):
            raise ParseError(
                f"parameterized type '{name}{self.tok.value}...' is not supported; "
                "use a class name or an integer interval",
                self.tok.loc,
            )
        return A.TName(name, loc=t.loc)

    def parse_decl(self):
        loc = self.tok.loc
        word = self.expect_name()
        self.expect_op("(")
        if word == "mode":
            if self.tok.kind == "NUM":
                mode: str | int = self.advance().value  # type: ignore[assignment]
            elif self.tok.is_op("-") and self.peek().kind == "NUM":
                self.advance()
                mode = -self.advance().value  # type: ignore[operator]
            else:
                mode = self.expect_name("default", "once", "set")
            self.expect_op(")")
            return ("mode", mode, loc)
        names = []
        while not self.tok.is_op(")"):
            names.append(self.expect_name())
            if not self.tok.is_op(","):
                break
            self.advance()
        self.expect_op(")")
        if word in ("event", "noevent"):
            return A.EventDecl(word, names, loc=loc)
        if word == "store":
            return A.StoreDecl(names, loc=loc)
        if len(names) != 2:
            raise ParseError("inverse(r1, r2) takes exactly two relation names", loc)
        return A.InverseDecl(names[0], names[1], loc=loc)

    def parse_rule(self) -> A.RuleDecl:
        loc = self.tok.loc
        name = self.expect_name()
        self.expect_op("(")
        params = self.parse_params(")")
        self.expect_op("::")
        # "rule(A => S)", or the bare "A => S" of the bracketed form
        wrapped = self.tok.is_name("rule") and self.peek().is_op("(")
        if wrapped:
            self.advance()
            self.advance()
        cond = self.parse_assertion()
        self.expect_op("=>")
        concl = self.parse_stmt()
        while not wrapped and self.tok.is_op(","):
            self.advance()
            concl = _append_seq(concl, self.parse_stmt())
        if wrapped:
            self.expect_op(")")
        return A.RuleDecl(name, params, cond, concl, loc=loc)

    def parse_proc(self) -> A.ProcDecl:
        loc = self.tok.loc
        name = self.expect_name()
        self.expect_op("(")
        params = self.parse_params(")")
        ret = None
        if self.tok.is_op(":"):
            self.advance()
            ret = self.parse_type()
        self.expect_op("->")
        return A.ProcDecl(name, params, ret, self.parse_stmt(), loc=loc)

    # -- statements -----------------------------------------------------------

    def parse_stmt(self) -> A.Expr:
        t = self.tok
        if t.is_name("if"):
            self.advance()
            cond = self.parse_expr()
            then = self.parse_stmt()
            else_ = None
            if self.tok.is_name("else"):
                self.advance()
                else_ = self.parse_stmt()
            return A.If(cond, then, else_, loc=t.loc)
        if t.is_name("for"):
            self.advance()
            var = self.expect_name()
            self.expect_name("in")
            src = self.parse_expr()
            return A.For(var, src, self.parse_stmt(), loc=t.loc)
        if t.is_name("while"):
            self.advance()
            cond = self.parse_expr()
            return A.While(cond, self.parse_stmt(), loc=t.loc)
        if t.is_name("let"):
            self.advance()
            binds = []
            while True:
                v = self.expect_name()
                self.expect_op(":=")
                binds.append((v, self.parse_expr()))
                if not self.tok.is_op(","):
                    break
                self.advance()
            self.expect_name("in")
            return A.Let(binds, self.parse_stmt(), loc=t.loc)
        if t.is_name("when"):
            self.advance()
            v = self.expect_name()
            self.expect_op(":=")
            val = self.parse_expr()
            self.expect_name("in")
            body = self.parse_stmt()
            else_ = None
            if self.tok.is_name("else"):
                self.advance()
                else_ = self.parse_stmt()
            return A.When(v, val, body, else_, loc=t.loc)
        e = self.parse_expr()
        if self.tok.kind == "OP" and self.tok.value in ASSIGN_OPS:
            op = self.advance().value
            if not isinstance(e, (A.Dot, A.Index, A.Name)):
                raise ParseError(f"cannot assign to this expression with '{op}'", t.loc)
            value = self.parse_stmt()
            return A.Assign(e, op, value, loc=t.loc)  # type: ignore[arg-type]
        return e

    # -- expressions -----------------------------------------------------------

    def parse_expr(self) -> A.Expr:
        return self.parse_or()

    def parse_or(self) -> A.Expr:
        left = self.parse_and()
        while self.tok.is_op("|") and not self._image_bar():
            loc = self.advance().loc
            left = A.BinOp("|", left, self.parse_and(), loc=loc)
        return left

    def _image_bar(self) -> bool:
        # inside {f(x) | x in S} the bar separates; detect "| NAME in"
        return self.peek().kind == "NAME" and self.peek(2).is_name("in") and self._in_brace

    _in_brace = False

    def parse_and(self) -> A.Expr:
        left = self.parse_cmp()
        while self.tok.is_op("&"):
            loc = self.advance().loc
            left = A.BinOp("&", left, self.parse_cmp(), loc=loc)
        return left

    def parse_cmp(self) -> A.Expr:
        left = self.parse_arith()
        if self.tok.kind == "OP" and self.tok.value in CMP_OPS + ("%",):
            t = self.advance()
            left = A.BinOp(t.value, left, self.parse_arith(), loc=t.loc)  # type: ignore[arg-type]
        return left

    def parse_arith(self) -> A.Expr:
        return self.parse_but()

    def parse_but(self) -> A.Expr:
        left = self.parse_range()
        while self.tok.is_name("but", "U"):
            t = self.advance()
            left = A.BinOp(t.value, left, self.parse_range(), loc=t.loc)  # type: ignore[arg-type]
        return left

    def parse_range(self) -> A.Expr:
        left = self.parse_add()
        if self.tok.is_op(".."):
            t = self.advance()
            left = A.Interval(left, self.parse_add(), loc=t.loc)
        return left

    def parse_add(self) -> A.Expr:
        left = self.parse_mul()
        while self.tok.is_op("+", "-"):
            t = self.advance()
            left = A.BinOp(t.value, left, self.parse_mul(), loc=t.loc)  # type: ignore[arg-type]
        return left

    def parse_mul(self) -> A.Expr:
        left = self.parse_unary()
        while self.tok.is_op("*", "/") or self.tok.is_name("div", "div+", "mod"):
            t = self.advance()
            left = A.BinOp(t.value, left, self.parse_unary(), loc=t.loc)  # type: ignore[arg-type]
        return left

    def parse_unary(self) -> A.Expr:
        if self.tok.is_op("-"):
            t = self.advance()
            operand = self.parse_unary()
            if isinstance(operand, A.Lit) and isinstance(operand.value, int) and not isinstance(operand.value, bool):
                return A.Lit(-operand.value, loc=t.loc)
            return A.Neg(operand, loc=t.loc)
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        e = self.parse_primary()
        while self.tok.is_op(".") and self.peek().kind == "NAME":
            t = self.advance()
            e = A.Dot(e, self.expect_name(), loc=t.loc)
        return e

    def parse_args(self, close: str) -> list[A.Expr]:
        args = []
        while not self.tok.is_op(close):
            args.append(self.parse_stmt())
            if not self.tok.is_op(","):
                break
            self.advance()
        self.expect_op(close)
        return args

    def parse_primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            return A.Lit(t.value, loc=t.loc)
        if t.kind == "STR":
            self.advance()
            return A.Lit(t.value, loc=t.loc)
        if t.is_op("("):
            self.advance()
            first = self.parse_stmt()
            if self.tok.is_op(","):
                items = [first]
                while self.tok.is_op(","):
                    self.advance()
                    items.append(self.parse_stmt())
                self.expect_op(")")
                return A.Seq(items, loc=t.loc)
            self.expect_op(")")
            return first
        if t.is_op("{"):
            return self.parse_brace(False)
        if t.kind != "NAME":
            raise self.error("expected an expression")
        word = t.value
        if word == "true" or word == "false":
            self.advance()
            return A.Lit(word == "true", loc=t.loc)
        if word == "unknown":
            self.advance()
            return A.Lit(UNKNOWN, loc=t.loc)
        if word in ("if", "for", "while", "let", "when"):
            return self.parse_stmt()
        if word == "list" and self.peek().is_op("{"):
            self.advance()
            return self.parse_brace(True)
        if word == "not" and self.peek().is_op("("):
            self.advance()
            self.advance()
            e = self.parse_expr()
            self.expect_op(")")
            return A.NotE(e, loc=t.loc)
        if word in ("exists", "some") and self.peek().is_op("(") and self.peek(3).is_name("in"):
            self.advance()
            self.advance()
            var = self.expect_name()
            self.expect_name("in")
            src = self.parse_arith()
            if self.tok.is_op("|"):
                self.advance()
                cond = self.parse_expr()
            else:
                cond = A.Lit(True, loc=t.loc)
            self.expect_op(")")
            return A.Quant(word, var, src, cond, loc=t.loc)  # type: ignore[arg-type]
        if word == "new" and self.peek().is_op("("):
            self.advance()
            self.advance()
            cls = self.expect_name()
            inits = []
            while self.tok.is_op(","):
                self.advance()
                slot = self.expect_name()
                self.expect_op("=")
                inits.append((slot, self.parse_arith()))
            self.expect_op(")")
            return A.New(cls, inits, loc=t.loc)
        self.advance()
        if self.tok.is_op("(") and word in self.classes:
            self.advance()
            inits = []
            while not self.tok.is_op(")"):
                slot = self.expect_name()
                self.expect_op("=")
                inits.append((slot, self.parse_arith()))
                if not self.tok.is_op(","):
                    break
                self.advance()
            self.expect_op(")")
            return A.New(word, inits, loc=t.loc)  # type: ignore[arg-type]
        if self.tok.is_op("("):
            self.advance()
            return A.Call(word, self.parse_args(")"), loc=t.loc)  # type: ignore[arg-type]
        if self.tok.is_op("["):
            self.advance()
            return A.Index(word, self.parse_args("]"), loc=t.loc)  # type: ignore[arg-type]
        return A.Name(word, loc=t.loc)  # type: ignore[arg-type]

    def parse_brace(self, is_list: bool) -> A.Expr:
        t = self.expect_op("{")
        if self.tok.is_op("}"):
            self.advance()
            if is_list:
                raise ParseError("list{} needs a generator", t.loc)
            return A.SetLit([], loc=t.loc)
        if self.tok.kind == "NAME" and self.peek().is_name("in"):
            var = self.expect_name()
            self.advance()
            src = self.parse_arith()
            self.expect_op("|")
            cond = self.parse_expr()
            self.expect_op("}")
            if is_list:
                return A.Image(A.Name(var, loc=t.loc), var, A.SetFormer(var, src, cond, loc=t.loc), True, loc=t.loc)
            return A.SetFormer(var, src, cond, loc=t.loc)
        saved = self._in_brace
        self._in_brace = True
        try:
            first = self.parse_expr()
        finally:
            self._in_brace = saved
        if self.tok.is_op("|"):
            self.advance()
            var = self.expect_name()
            self.expect_name("in")
            src = self.parse_arith()
            self.expect_op("}")
            return A.Image(first, var, src, is_list, loc=t.loc)
        if is_list:
            raise self.error("expected '|' in list image")
        items = [first]
        while self.tok.is_op(","):
            self.advance()
            items.append(self.parse_expr())
        self.expect_op("}")
        return A.SetLit(items, loc=t.loc)

    # -- assertions ------------------------------------------------------------

    def parse_assertion(self) -> A.Assertion:
        left = self.parse_a_and()
        while self.tok.is_op("|"):
            loc = self.advance().loc
            left = A.AOr(left, self.parse_a_and(), loc=loc)
        return left

    def parse_a_and(self) -> A.Assertion:
        left = self.parse_a_atom()
        while self.tok.is_op("&"):
            loc = self.advance().loc
            left = A.AAnd(left, self.parse_a_atom(), loc=loc)
        return left

    def parse_a_atom(self) -> A.Assertion:
        t = self.tok
        if t.is_name("not") and self.peek().is_op("("):
            self.advance()
            self.advance()
            body = self.parse_assertion()
            self.expect_op(")")
            return A.ANot(body, loc=t.loc)
        if t.is_name("exists") and self.peek().is_op("(") and self.peek(2).kind == "NAME" and self.peek(3).is_op(",", ":"):
            self.advance()
            self.advance()
            var = self.expect_name()
            ty = None
            if self.tok.is_op(":"):
                self.advance()
                ty = self.parse_type()
            self.expect_op(",")
            body = self.parse_assertion()
            self.expect_op(")")
            return A.AExists(var, ty, body, loc=t.loc)
        if t.is_name("if"):
            self.advance()
            self.expect_op("(")
            cond = self.parse_assertion()
            self.expect_op(")")
            if not isinstance(cond, A.ACmp):
                raise ParseError("the test of a conditional assertion must be a comparison", t.loc)
            then = self.parse_a_atom()
            self.expect_name("else")
            return A.AIf(cond, then, self.parse_a_atom(), loc=t.loc)
        if t.is_op("("):
            saved = self.pos
            try:
                self.advance()
                inner = self.parse_assertion()
                self.expect_op(")")
                if not (self.tok.kind == "OP" and self.tok.value in CMP_OPS + ("%", ":=", "+", "-", "*", "/", ".")):
                    return inner
            except ParseError:
                pass
            self.pos = saved
        if t.kind == "NAME" and self.peek().is_op("::"):
            self.advance()
            self.advance()
            return A.AInst(t.value, self.expect_name(), loc=t.loc)  # type: ignore[arg-type]
        e = self.parse_arith()
        if self.tok.is_op(":="):
            self.advance()
            if self.tok.is_op("(") and self.peek().kind == "NAME" and self.peek(2).is_op("<-"):
                self.advance()
                new = self.expect_name()
                self.expect_op("<-")
                prev = self.expect_name()
                self.expect_op(")")
                return A.AEvent(e, A.Name(new, loc=t.loc), prev, loc=t.loc)
            return A.AEvent(e, self.parse_arith(), None, loc=t.loc)
        if self.tok.is_op("%"):
            self.advance()
            return A.AMember(e, self.parse_arith(), loc=t.loc)
        if self.tok.kind == "OP" and self.tok.value in CMP_OPS:
            op = self.advance().value
            return A.ACmp(op, e, self.parse_arith(), loc=t.loc)  # type: ignore[arg-type]
        if isinstance(e, A.Call) and len(e.args) == 2 and e.fn in self.relations:
            return A.ARel(e.fn, e.args[0], e.args[1], loc=t.loc)
        return A.ATruth(e, loc=t.loc)


def parse_text(text: str, file: str = "<input>") -> A.Program:
    """Syntax only: no name resolution."""
    toks = tokenize(text, file)
    prog = A.Program()
    classes: set[str] = set()
    relations: set[str] = set()
    pending_mode = None
    for form in split_forms(toks):
        if form[0].is_op("[") and form[-1].is_op("]"):
            form = form[1:-1]
        form = _merge_hyphen_name(form)
        end = Token("EOF", None, _end_loc(form), True)
        p = Parser(form + [end], classes, relations)
        item = p.parse_form()
        if not p.at_end():
            raise p.error("unexpected trailing input")
        if isinstance(item, tuple) and item[0] == "mode":
            pending_mode = item[1]
            continue
        if isinstance(item, A.RuleDecl) and pending_mode is not None:
            item.mode = pending_mode
            pending_mode = None
        elif pending_mode is not None and not isinstance(item, A.RuleDecl):
            raise ParseError("mode(...) must be followed by a rule", item_loc(item))
        prog.items.append(item)
    return prog


def _append_seq(first: A.Expr, nxt: A.Expr) -> A.Expr:
    if isinstance(first, A.Seq):
        return A.Seq(first.items + [nxt], loc=first.loc)
    return A.Seq([first, nxt], loc=first.loc)


def _merge_hyphen_name(form: list[Token]) -> list[Token]:
    # a form opening with "a-b(" names a rule or procedure; spell it a_b
    if (
        len(form) > 3
        and form[0].kind == "NAME"
        and form[1].is_op("-")
        and form[2].kind == "NAME"
        and form[3].is_op("(")
        and form[1].loc.col == form[0].loc.col + len(form[0].value)
        and form[2].loc.col == form[1].loc.col + 1
    ):
        merged = Token("NAME", f"{form[0].value}_{form[2].value}", form[0].loc, form[0].bol)
        return [merged] + form[3:]
    return form


def _end_loc(form: list[Token]) -> Loc:
    last = form[-1].loc
    return Loc(last.line, last.col + 1, last.file)


def item_loc(item) -> Loc | None:
    return getattr(item, "loc", None)


def parse_statement(text: str, classes=(), relations=()) -> A.Expr:
    toks = tokenize(text)
    p = Parser(toks, set(classes), set(relations))
    e = p.parse_stmt()
    if not p.at_end():
        raise p.error("unexpected trailing input")
    return e


def parse_assertion(text: str, relations=(), classes=()) -> A.Assertion:
    toks = tokenize(text)
    p = Parser(toks, set(classes), set(relations))
    a = p.parse_assertion()
    if not p.at_end():
        raise p.error("unexpected trailing input")
    return a
