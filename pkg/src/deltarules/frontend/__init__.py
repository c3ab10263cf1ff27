"""Lexing, parsing, printing and static checking of rule programs."""

from __future__ import annotations

from . import ast
from .checks import check_events, trigger_warnings, validate
from .parser import parse_assertion, parse_statement, parse_text
from .printer import show_assertion, show_expr, show_program


def parse_program(text: str, file: str = "<input>") -> ast.Program:
    """Parse and validate a program; raises a located DSLError on failure."""
    prog = parse_text(text, file)
    validate(prog)
    return prog


__all__ = [
    "ast", "check_events", "parse_assertion", "parse_program", "parse_statement",
    "parse_text", "show_assertion", "show_expr", "show_program", "trigger_warnings",
    "validate",
]
