"""Tokenizer.

Top-level forms are line oriented: a form starts on a line whose first
character is not blank and continues over indented lines and over any
line while brackets are open.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import Loc, ParseError

# longest first
OPERATORS = [
    ":delete", ":add", ":=+", ":=-", "::", ":=", "<:", "<-", "=>", "->", "..",
    "<=", ">=", "!=", "=", "<", ">", "+", "-", "*", "/", "%", "&", "|",
    "(", ")", "[", "]", "{", "}", ",", ".", ":",
]
UNICODE = {"∈": "%", "≤": "<=", "≥": ">=", "≠": "!=", "∪": "U"}
NAME_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
NAME_REST = NAME_START | set("0123456789?!")


@dataclass
class Token:
    kind: str  # NAME NUM STR OP EOF
    value: object
    loc: Loc
    bol: bool = False  # first token on its line at column 1

    def is_op(self, *ops: str) -> bool:
        return self.kind == "OP" and self.value in ops

    def is_name(self, *names: str) -> bool:
        return self.kind == "NAME" and (not names or self.value in names)

    def __repr__(self) -> str:
        return f"{self.kind}:{self.value!r}@{self.loc.line}:{self.loc.col}"


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    line_start = True

    def loc() -> Loc:
        return Loc(line, col, file)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            line_start = True
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        bol = line_start and col == 1
        line_start = False
        start = loc()
        if c in UNICODE:
            toks.append(Token("OP" if UNICODE[c] != "U" else "NAME", UNICODE[c], start, bol))
            i += 1
            col += 1
            continue
        if c == "$" and i + 1 < n and text[i + 1].isdigit():
            i += 1
            col += 1
            c = text[i]
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("NUM", int(text[i:j]), start, bol))
            col += j - i
            i = j
            continue
        if c in NAME_START:
            j = i + 1
            while j < n and text[j] in NAME_REST:
                j += 1
            word = text[i:j]
            # world=(n) and div+ are single tokens
            if word == "world" and text.startswith("=(", j):
                j += 1
                word = "world="
            elif word == "div" and j < n and text[j] == "+":
                j += 1
                word = "div+"
            toks.append(Token("NAME", word, start, bol))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    j += 1
                if text[j] == "\n":
                    raise ParseError("unterminated string literal", start)
                buf.append(text[j])
                j += 1
            if j >= n:
                raise ParseError("unterminated string literal", start)
            toks.append(Token("STR", "".join(buf), start, bol))
            col += j + 1 - i
            i = j + 1
            continue
        for op in OPERATORS:
            # ":=+" and ":=-" need a blank after them so "x := -3" still lexes
            if op in (":=+", ":=-") and not text[i + 3 : i + 4].isspace():
                continue
            if text.startswith(op, i):
                toks.append(Token("OP", op, start, bol))
                i += len(op)
                col += len(op)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", start)
    toks.append(Token("EOF", None, Loc(line, col, file), True))
    return toks


def split_forms(toks: list[Token]) -> list[list[Token]]:
    """Group tokens into top-level forms."""
    forms: list[list[Token]] = []
    cur: list[Token] = []
    depth = 0
    for t in toks:
        if t.kind == "EOF":
            break
        # a body arrow at column 1 continues the header above it
        if t.bol and depth == 0 and cur and not t.is_op("->", "=>"):
            forms.append(cur)
            cur = []
        cur.append(t)
        if t.is_op("(", "[", "{"):
            depth += 1
        elif t.is_op(")", "]", "}"):
            depth = max(0, depth - 1)
    if cur:
        forms.append(cur)
    return forms
