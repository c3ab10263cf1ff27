"""Inversion of terms by recursive formulas.

Terms outside the invertible fragment raise NotInvertible; callers then
fall back to enumerating the candidate domain.
"""

from __future__ import annotations

from ..errors import NotInvertible
from .terms import (
    IDENTITY, INVERSE_UNIT, UNIT, CartesianConst, Chi, Compose, Empty, Identity, IfTest,
    Intersection, Inverse, InverseUnit, LambdaBind, Not, Phi, PrevLambda, Projection, RelVar,
    Term, Union, Unit,
)


def invert(t: Term) -> Term:
    if isinstance(t, (RelVar, Chi)):
        return Inverse(t)
    if isinstance(t, Inverse):
        return t.t
    if isinstance(t, Compose):
        return Compose(invert(t.b), invert(t.a))
    if isinstance(t, Union):
        return Union(invert(t.a), invert(t.b))
    if isinstance(t, Intersection):
        return Intersection(invert(t.a), invert(t.b))
    if isinstance(t, (Identity, Phi, Not, Empty)):
        # sub-identities are their own inverse
        return t
    if isinstance(t, Unit):
        return INVERSE_UNIT
    if isinstance(t, InverseUnit):
        return UNIT
    if isinstance(t, CartesianConst):
        return CartesianConst(t.rng, t.dom)
    raise NotInvertible(f"no inversion formula for {type(t).__name__}")


def superset_inverse(t: Term) -> Term:
    """A term containing the inverse of t, used to find candidate inputs.

    Tests are widened to the identity and lambda bindings are looked
    through, so the result never needs variable bindings to evaluate.
    Callers must re-check every candidate by evaluating t forwards.
    """
    if isinstance(t, (RelVar, Chi)):
        return Inverse(t)
    if isinstance(t, Inverse):
        return t.t
    if isinstance(t, Compose):
        return Compose(superset_inverse(t.b), superset_inverse(t.a))
    if isinstance(t, Union):
        return Union(superset_inverse(t.a), superset_inverse(t.b))
    if isinstance(t, Intersection):
        return superset_inverse(t.a)
    if isinstance(t, (Identity, Phi, Not, IfTest, Projection)):
        return IDENTITY
    if isinstance(t, Empty):
        return t
    if isinstance(t, CartesianConst):
        return CartesianConst(t.rng, t.dom)
    if isinstance(t, LambdaBind):
        return superset_inverse(t.t2)
    if isinstance(t, PrevLambda):
        return superset_inverse(t.body)
    raise NotInvertible(f"no inversion formula for {type(t).__name__}")
