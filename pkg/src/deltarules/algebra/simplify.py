"""Denotation-preserving rewrites of terms.

- empty absorption and identity elimination,
- right-nested composition,
- constant folding of psi and phi over constants,
- linear factorization over group operations (k1*t + k2*t => (k1+k2)*t),
- runs of consecutive filters ordered by size, larger ones applied last.
"""

from __future__ import annotations

from ..values import UNKNOWN
from .knowledge import KNOWLEDGE, apply_op, compare
from .terms import (
    EMPTY, IDENTITY, Compose, Const, Empty, Identity, IfTest, Inverse,
    Not, Phi, Psi, SetFormer, Term,
    Union, rebuild, size,
)


def prune(t: Term) -> Term:
    """Bottom-up empty absorption only (used on differentiated terms)."""
    kids = [prune(c) for c in t.children()]
    if kids:
        t = rebuild(t, kids)
    return _absorb(t)


def _absorb(t: Term) -> Term:
    if isinstance(t, Union):
        if isinstance(t.a, Empty):
            return t.b
        if isinstance(t.b, Empty):
            return t.a
        return t
    if isinstance(t, IfTest):
        if isinstance(t.then, Empty) and isinstance(t.else_, Empty):
            return EMPTY
        if isinstance(t.phi, Empty):
            return EMPTY
        return t
    if isinstance(t, Not):
        return IDENTITY if isinstance(t.t, Empty) else t
    if isinstance(t, SetFormer):
        return t
    if any(isinstance(c, Empty) for c in t.children()):
        return EMPTY
    return t


def simplify(t: Term) -> Term:
    kids = [simplify(c) for c in t.children()]
    if kids:
        t = rebuild(t, kids)
    t = _absorb(t)
    if isinstance(t, Compose):
        return _compose(t.a, t.b)
    if isinstance(t, Psi):
        return _fold_psi(t)
    if isinstance(t, Phi):
        if isinstance(t.a, Const) and isinstance(t.b, Const):
            return IDENTITY if compare(t.cmp, t.a.value, t.b.value) else EMPTY
        return t
    if isinstance(t, Inverse):
        if isinstance(t.t, Inverse):
            return t.t.t
        if isinstance(t.t, (Identity, Phi, Not)):
            return t.t
        return t
    return t


def _chain(t: Term) -> list[Term]:
    if isinstance(t, Compose):
        return _chain(t.a) + _chain(t.b)
    return [t]


def _is_filter(t: Term) -> bool:
    return isinstance(t, (Phi, Not))


def _compose(a: Term, b: Term) -> Term:
    parts = [p for p in _chain(a) + _chain(b) if not isinstance(p, Identity)]
    if any(isinstance(p, Empty) for p in parts):
        return EMPTY
    if not parts:
        return IDENTITY
    # order each run of filters; Python's sort is stable so ties keep source order
    out: list[Term] = []
    run: list[Term] = []
    for p in parts + [None]:
        if p is not None and _is_filter(p):
            run.append(p)
            continue
        out.extend(sorted(run, key=lambda f: -size(f)))
        run = []
        if p is not None:
            out.append(p)
    res = out[-1]
    for p in reversed(out[:-1]):
        res = Compose(p, res)
    return res


def _scaled(t: Term) -> tuple[int, Term] | None:
    """t as k * s with constant integer k, if it has that shape."""
    if isinstance(t, Psi) and t.op == "*" and t.b is not None:
        if isinstance(t.a, Const) and type(t.a.value) is int:
            return t.a.value, t.b
        if isinstance(t.b, Const) and type(t.b.value) is int:
            return t.b.value, t.a
    return None


def _fold_psi(t: Psi) -> Term:
    if isinstance(t.a, Const) and (t.b is None or isinstance(t.b, Const)):
        if t.a.ref is None and (t.b is None or t.b.ref is None):
            args = (t.a.value,) if t.b is None else (t.a.value, t.b.value)
            v = apply_op(t.op, *args)
            return EMPTY if v is UNKNOWN else Const(v)
    if t.op in ("+", "-") and KNOWLEDGE.ops[t.op].structure == "group" and t.b is not None:
        left, right = _scaled(t.a), _scaled(t.b)
        if left and right and left[1] == right[1]:
            k = left[0] + right[0] if t.op == "+" else left[0] - right[0]
            return Psi("*", Const(k), left[1])
    return t


__all__ = ["prune", "simplify"]
