"""Parallel substitutions and the pattern-matching helpers.

A :class:`Subst` maps every name to either an expression image or a name
image; only finitely many names are mapped to anything but themselves.
:func:`apply_subst` works on the nameless core, so it never captures.
:func:`instantiate` is the direct named-form version used by the machine; it
is only correct when every image is closed, which is always the case there.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Union

from .syntax import (
    Add, Apply, Case, Cons, Expr, Fun, FunId, Hole, Idx, Let, Letrec, Lit, Name, Nil,
    Pattern, PCons, PLit, PNil, PVar, Var, CFun, CLet, CLetrec, CCase, binder_names,
    core_pattern_arity, free_names, from_core, is_value, pattern_vars, sorted_names, to_core,
)

__all__ = [
    "ExprImage", "NameImage", "SubstImage", "Subst", "id_subst", "update", "update_many",
    "restrict", "apply_subst", "instantiate", "pattern_vars", "is_match", "match_subst",
    "match_bindings",
]


@dataclass(frozen=True, slots=True)
class ExprImage:
    expr: Expr


@dataclass(frozen=True, slots=True)
class NameImage:
    name: Name


SubstImage = Union[ExprImage, NameImage]


class Subst:
    """Finitely supported total map from names to images."""

    __slots__ = ("_map",)

    def __init__(self, bindings: Mapping[Name, SubstImage] | None = None):
        m = {}
        for k, v in (bindings or {}).items():
            if not isinstance(v, (ExprImage, NameImage)):
                raise TypeError(f"substitution image must be ExprImage or NameImage, got {v!r}")
            if v != NameImage(k):
                m[k] = v
        self._map = MappingProxyType(m)

    def __call__(self, x: Name) -> SubstImage:
        return self._map.get(x, NameImage(x))

    @property
    def support(self) -> frozenset:
        return frozenset(self._map)

    def items(self):
        return self._map.items()

    def __eq__(self, other) -> bool:
        return isinstance(other, Subst) and dict(self._map) == dict(other._map)

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}↦{_show(v)}" for k, v in sorted(self._map.items(), key=lambda kv: str(kv[0])))
        return f"Subst[{inner}]"


def _show(img: SubstImage) -> str:
    if isinstance(img, NameImage):
        return str(img.name)
    from .surface import pretty
    return pretty(img.expr)


def id_subst() -> Subst:
    return Subst()


def update(sigma: Subst, x: Name, e: Expr) -> Subst:
    m = dict(sigma.items())
    m[x] = ExprImage(e)
    return Subst(m)


def update_many(sigma: Subst, pairs: Iterable[tuple[Name, Expr]]) -> Subst:
    """``sigma[x1 -> e1, ..., xk -> ek]``; the ``xi`` must be pairwise distinct."""
    pairs = list(pairs)
    names = [x for x, _ in pairs]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate names in multi-update: {[str(n) for n in names]}")
    m = dict(sigma.items())
    for x, e in pairs:
        m[x] = ExprImage(e)
    return Subst(m)


def restrict(sigma: Subst, names: Iterable[Name]) -> Subst:
    drop = set(names)
    return Subst({k: v for k, v in sigma.items() if k not in drop})


# ---------------------------------------------------------------------------
# application through the nameless core
# ---------------------------------------------------------------------------

def apply_subst(e: Expr, sigma: Subst) -> Expr:
    free = sorted_names(free_names(e))
    images = [sigma(x) for x in free]
    target: set = set()
    for img in images:
        if isinstance(img, NameImage):
            target.add(img.name)
        else:
            target |= free_names(img.expr)
    target_env = sorted_names(target)
    core_images = []
    for img in images:
        if isinstance(img, NameImage):
            core_images.append(Idx(target_env.index(img.name) + 1))
        else:
            core_images.append(to_core(img.expr, target_env))
    result = _subst_core(to_core(e, free), core_images, 0)
    return from_core(result, target_env)


def _shift(c, d: int, cutoff: int = 0):
    if d == 0:
        return c
    if isinstance(c, Idx):
        return Idx(c.i + d) if c.i > cutoff else c
    if isinstance(c, (Lit, Nil)):
        return c
    if isinstance(c, CFun):
        return CFun(c.arity, _shift(c.body, d, cutoff + c.arity + 1), c.hint)
    if isinstance(c, Cons):
        return Cons(_shift(c.head, d, cutoff), _shift(c.tail, d, cutoff))
    if isinstance(c, Add):
        return Add(_shift(c.lhs, d, cutoff), _shift(c.rhs, d, cutoff))
    if isinstance(c, Apply):
        return Apply(_shift(c.fn, d, cutoff), tuple(_shift(a, d, cutoff) for a in c.args))
    if isinstance(c, CLet):
        return CLet(_shift(c.bound, d, cutoff), _shift(c.body, d, cutoff + 1), c.hint)
    if isinstance(c, CLetrec):
        return CLetrec(c.arity, _shift(c.fbody, d, cutoff + c.arity + 1),
                       _shift(c.cont, d, cutoff + 1), c.hint)
    if isinstance(c, CCase):
        k = core_pattern_arity(c.pat)
        return CCase(_shift(c.scrutinee, d, cutoff), c.pat, _shift(c.then, d, cutoff + k),
                     _shift(c.else_, d, cutoff))
    raise TypeError(f"not a core term: {c!r}")


def _subst_core(c, images: list, depth: int):
    if isinstance(c, Idx):
        if c.i <= depth:
            return c
        return _shift(images[c.i - depth - 1], depth)
    if isinstance(c, (Lit, Nil)):
        return c
    if isinstance(c, CFun):
        return CFun(c.arity, _subst_core(c.body, images, depth + c.arity + 1), c.hint)
    if isinstance(c, Cons):
        return Cons(_subst_core(c.head, images, depth), _subst_core(c.tail, images, depth))
    if isinstance(c, Add):
        return Add(_subst_core(c.lhs, images, depth), _subst_core(c.rhs, images, depth))
    if isinstance(c, Apply):
        return Apply(_subst_core(c.fn, images, depth),
                     tuple(_subst_core(a, images, depth) for a in c.args))
    if isinstance(c, CLet):
        return CLet(_subst_core(c.bound, images, depth), _subst_core(c.body, images, depth + 1), c.hint)
    if isinstance(c, CLetrec):
        return CLetrec(c.arity, _subst_core(c.fbody, images, depth + c.arity + 1),
                       _subst_core(c.cont, images, depth + 1), c.hint)
    if isinstance(c, CCase):
        k = core_pattern_arity(c.pat)
        return CCase(_subst_core(c.scrutinee, images, depth), c.pat,
                     _subst_core(c.then, images, depth + k), _subst_core(c.else_, images, depth))
    raise TypeError(f"not a core term: {c!r}")


# ---------------------------------------------------------------------------
# closed-image fast path
# ---------------------------------------------------------------------------

def instantiate(e: Expr, env: Mapping[Name, Expr]) -> Expr:
    """Replace free names of ``e`` by the closed expressions in ``env``.

    Untouched subterms are returned as the same objects.
    """
    if not env:
        return e
    if isinstance(e, (Var, FunId)):
        return env.get(e, e)
    if isinstance(e, (Lit, Nil, Hole)):
        return e
    if isinstance(e, Add):
        a, b = instantiate(e.lhs, env), instantiate(e.rhs, env)
        return e if a is e.lhs and b is e.rhs else Add(a, b)
    if isinstance(e, Apply):
        fn = instantiate(e.fn, env)
        args = tuple(instantiate(x, env) for x in e.args)
        if fn is e.fn and all(x is y for x, y in zip(args, e.args)):
            return e
        return Apply(fn, args)
    if isinstance(e, Cons):
        a, b = instantiate(e.head, env), instantiate(e.tail, env)
        return e if a is e.head and b is e.tail else Cons(a, b)
    if isinstance(e, Fun):
        inner = _without(env, (e.self_id, *binder_names(e.params)))
        body = instantiate(e.body, inner)
        return e if body is e.body else Fun(e.name, e.params, body)
    if isinstance(e, Let):
        bound = instantiate(e.bound, env)
        body = instantiate(e.body, _without(env, (Var(e.var),)))
        return e if bound is e.bound and body is e.body else Let(e.var, bound, body)
    if isinstance(e, Letrec):
        f = e.self_id
        fbody = instantiate(e.fbody, _without(env, (f, *binder_names(e.params))))
        cont = instantiate(e.cont, _without(env, (f,)))
        return e if fbody is e.fbody and cont is e.cont else Letrec(e.name, e.params, fbody, cont)
    if isinstance(e, Case):
        s = instantiate(e.scrutinee, env)
        t = instantiate(e.then, _without(env, pattern_vars(e.pat)))
        el = instantiate(e.else_, env)
        if s is e.scrutinee and t is e.then and el is e.else_:
            return e
        return Case(s, e.pat, t, el)
    raise TypeError(f"not an expression: {e!r}")


def _without(env: Mapping, names) -> Mapping:
    if not any(n in env for n in names):
        return env
    return {k: v for k, v in env.items() if k not in names}


# ---------------------------------------------------------------------------
# pattern matching
# ---------------------------------------------------------------------------

def is_match(p: Pattern, v: Expr) -> bool:
    if not is_value(v):
        raise ValueError("is_match expects a value")
    return _matches(p, v)


def _matches(p: Pattern, v: Expr) -> bool:
    if isinstance(p, PVar):
        return True
    if isinstance(p, PLit):
        return isinstance(v, Lit) and v.value == p.value
    if isinstance(p, PNil):
        return isinstance(v, Nil)
    if isinstance(p, PCons):
        return isinstance(v, Cons) and _matches(p.head, v.head) and _matches(p.tail, v.tail)
    raise TypeError(f"not a pattern: {p!r}")


def match_bindings(p: Pattern, v: Expr) -> dict | None:
    """Variable bindings of a successful match, or None.  No value check."""
    out: dict = {}
    stack = [(p, v)]
    while stack:
        q, w = stack.pop()
        if isinstance(q, PVar):
            out[Var(q.name)] = w
        elif isinstance(q, PLit):
            if not (isinstance(w, Lit) and w.value == q.value):
                return None
        elif isinstance(q, PNil):
            if not isinstance(w, Nil):
                return None
        elif isinstance(w, Cons):
            stack.append((q.tail, w.tail))
            stack.append((q.head, w.head))
        else:
            return None
    return out


def match_subst(p: Pattern, v: Expr) -> Subst:
    if not is_match(p, v):
        raise ValueError("value does not match the pattern")
    return update_many(id_subst(), match_bindings(p, v).items())
