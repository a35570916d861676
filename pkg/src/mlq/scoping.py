"""Scoping judgements for values, expressions and substitutions.

The rules are syntax-directed, so each judgement is a plain checker.
"""
from __future__ import annotations

from typing import Iterable

from .substitution import NameImage, Subst
from .syntax import (
    Add, Apply, Case, Cons, Expr, Fun, FunId, Let, Letrec, Lit, Nil, Var,
    binder_names, pattern_vars,
)


def val_scoped(gamma: Iterable, v: Expr) -> bool:
    return _val(frozenset(gamma), v)


def exp_scoped(gamma: Iterable, e: Expr) -> bool:
    return _exp(frozenset(gamma), e)


def closed(e: Expr) -> bool:
    return _exp(frozenset(), e)


def closed_value(v: Expr) -> bool:
    return _val(frozenset(), v)


def _val(g: frozenset, v) -> bool:
    if isinstance(v, (Lit, Nil)):
        return True
    if isinstance(v, (Var, FunId)):
        return v in g
    if isinstance(v, Fun):
        return _exp(g | {v.self_id, *binder_names(v.params)}, v.body)
    if isinstance(v, Cons):
        return _val(g, v.head) and _val(g, v.tail)
    return False


def _exp(g: frozenset, e) -> bool:
    # the value rule first, then one rule per non-value form
    if isinstance(e, (Lit, Nil, Var, FunId, Fun)):
        return _val(g, e)
    if isinstance(e, Cons):
        return _exp(g, e.head) and _exp(g, e.tail)
    if isinstance(e, Apply):
        return _exp(g, e.fn) and all(_exp(g, a) for a in e.args)
    if isinstance(e, Let):
        return _exp(g, e.bound) and _exp(g | {Var(e.var)}, e.body)
    if isinstance(e, Letrec):
        f = e.self_id
        return _exp(g | {f, *binder_names(e.params)}, e.fbody) and _exp(g | {f}, e.cont)
    if isinstance(e, Add):
        return _exp(g, e.lhs) and _exp(g, e.rhs)
    if isinstance(e, Case):
        return (_exp(g, e.scrutinee) and _exp(g | set(pattern_vars(e.pat)), e.then)
                and _exp(g, e.else_))
    return False


def subst_scoped(gamma: Iterable, sigma: Subst, delta: Iterable) -> bool:
    """Every name of ``gamma`` is mapped to a value scoped in ``delta``."""
    d = frozenset(delta)
    for x in gamma:
        img = sigma(x)
        if isinstance(img, NameImage):
            if img.name not in d:
                return False
        elif not _val(d, img.expr):
            return False
    return True


def preserves(gamma: Iterable, sigma: Subst) -> bool:
    return all(sigma(x) == NameImage(x) for x in gamma)
