"""Enumerators, random samplers and the shipped corpus.

Enumeration is by term size (number of syntax nodes), smallest first, with
the height bounded by ``GenSpec.depth``.  Every size class is finite, so the
order is total and the same on every run.  Size classes are materialised
and cached on demand; callers should take prefixes with ``islice``.

Binders are named from small fixed pools (``X, Y, Z, W`` and ``f, g, h``),
skipping names already in scope where possible.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from itertools import count, islice, product
from pathlib import Path
from typing import Iterator, Optional, Sequence

from .machine import (
    AddL, AddR, AppArg, AppFn, CaseF, ConsHead, ConsTail, Frame, LetF, frame_closed,
)
from .substitution import Subst, apply_subst, id_subst, update_many
from .syntax import (
    HOLE, NIL, OMEGA, Add, Apply, Case, Cons, Expr, Fun, FunId, Let, Letrec, Lit, Name,
    PCons, PLit, PNil, PVar, Pattern, Var, children, free_names, parse_name, pattern_vars,
    sorted_names,
)

VAR_POOL = ("X", "Y", "Z", "W")
FUN_POOL = ("f", "g", "h")


@dataclass(frozen=True)
class GenSpec:
    depth: int = 3
    max_arity: int = 3
    literal_pool: tuple = (0, 1, -1, 2, -2, 3)
    seed: int = 0

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.max_arity < 0:
            raise ValueError("max_arity must be non-negative")
        if not self.literal_pool:
            raise ValueError("literal_pool must not be empty")
        object.__setattr__(self, "literal_pool", tuple(self.literal_pool))


# ---------------------------------------------------------------------------
# naming helpers
# ---------------------------------------------------------------------------

def _fresh_vars(gamma, k: int, pool: Sequence[str] = VAR_POOL) -> tuple[str, ...]:
    avoid = {n.name for n in gamma if isinstance(n, Var)}
    out = [x for x in pool if x not in avoid][:k]
    i = 1
    while len(out) < k:
        cand = f"X{i}"
        if cand not in avoid and cand not in out:
            out.append(cand)
        i += 1
    return tuple(out)


def _fresh_fun(gamma, k: int) -> str:
    for f in FUN_POOL:
        if FunId(f, k) not in gamma:
            return f
    i = 1
    while FunId(f"f{i}", k) in gamma:
        i += 1
    return f"f{i}"


def _case_patterns(gamma, pool) -> tuple[Pattern, ...]:
    x, y = _fresh_vars(gamma, 2)
    return (PLit(pool[0]), PNil(), PVar(x), PCons(PVar(x), PVar(y)))


def _compositions(n: int, k: int):
    """Ordered ways to write ``n`` as ``k`` positive parts."""
    if k == 0:
        if n == 0:
            yield ()
        return
    if k == 1:
        if n >= 1:
            yield (n,)
        return
    for first in range(1, n - k + 2):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def _max_size(h: int, arity: int) -> int:
    b = max(2, arity + 1)
    return sum(b ** i for i in range(h + 1))


# ---------------------------------------------------------------------------
# expressions by size
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8192)
def _sized(n: int, gamma: frozenset, h: int, arity: int, pool: tuple) -> tuple:
    return tuple(_block(n, gamma, h, arity, pool))


def _atoms(gamma: frozenset, pool: tuple):
    yield from (Lit(v) for v in pool)
    yield NIL
    yield from sorted_names(gamma)


def _block(n: int, gamma: frozenset, h: int, arity: int, pool: tuple) -> Iterator[Expr]:
    """Expressions of size exactly ``n`` and height at most ``h`` scoped in
    ``gamma``."""
    if n < 1 or h < 0:
        return
    if n == 1:
        yield from _atoms(gamma, pool)
        return
    if h == 0:
        return

    def sub(m, g=gamma):
        return _sized(m, g, h - 1, arity, pool)

    for a, b in _compositions(n - 1, 2):
        for x in sub(a):
            for y in sub(b):
                yield Add(x, y)
    for a, b in _compositions(n - 1, 2):
        for x in sub(a):
            for y in sub(b):
                yield Cons(x, y)
    for k in range(arity + 1):
        for parts in _compositions(n - 1, k + 1):
            for items in product(*(sub(p) for p in parts)):
                yield Apply(items[0], tuple(items[1:]))
    (x,) = _fresh_vars(gamma, 1)
    inner = gamma | {Var(x)}
    for a, b in _compositions(n - 1, 2):
        for bound in sub(a):
            for body in sub(b, inner):
                yield Let(x, bound, body)
    for pat in _case_patterns(gamma, pool):
        g2 = gamma | set(pattern_vars(pat))
        for a, b, c in _compositions(n - 1, 3):
            for s in sub(a):
                for t in sub(b, g2):
                    for e in sub(c):
                        yield Case(s, pat, t, e)
    for k in range(arity + 1):
        f, xs = _fresh_fun(gamma, k), _fresh_vars(gamma, k)
        g2 = gamma | {FunId(f, k), *(Var(v) for v in xs)}
        for body in sub(n - 1, g2):
            yield Fun(f, xs, body)
    for k in range(arity + 1):
        f, xs = _fresh_fun(gamma, k), _fresh_vars(gamma, k)
        g_body = gamma | {FunId(f, k), *(Var(v) for v in xs)}
        g_cont = gamma | {FunId(f, k)}
        for a, b in _compositions(n - 1, 2):
            for fbody in sub(a, g_body):
                for cont in sub(b, g_cont):
                    yield Letrec(f, xs, fbody, cont)


def gen_exprs(gamma=(), spec: GenSpec = GenSpec()) -> Iterator[Expr]:
    """Every expression scoped in ``gamma`` with height at most
    ``spec.depth``, ordered by size."""
    g = frozenset(gamma)
    for n in range(1, _max_size(spec.depth, spec.max_arity) + 1):
        yield from _sized(n, g, spec.depth, spec.max_arity, spec.literal_pool)


def gen_values(spec: GenSpec = GenSpec()) -> Iterator[Expr]:
    """Closed values of height at most ``spec.depth``, ordered by size."""
    for n in range(1, _max_size(spec.depth, spec.max_arity) + 1):
        yield from _values_sized(n, spec.depth, spec.max_arity, spec.literal_pool)


@lru_cache(maxsize=1024)
def _values_sized(n: int, h: int, arity: int, pool: tuple) -> tuple:
    if n == 1:
        return tuple(Lit(v) for v in pool) + (NIL,)
    if h == 0:
        return ()
    out: list = []
    for a, b in _compositions(n - 1, 2):
        for x in _values_sized(a, h - 1, arity, pool):
            for y in _values_sized(b, h - 1, arity, pool):
                out.append(Cons(x, y))
    for k in range(arity + 1):
        f, xs = _fresh_fun((), k), _fresh_vars((), k)
        g = frozenset({FunId(f, k), *(Var(v) for v in xs)})
        for body in _sized(n - 1, g, h - 1, arity, pool):
            out.append(Fun(f, xs, body))
    return tuple(out)


def gen_patterns(spec: GenSpec = GenSpec()) -> Iterator[Pattern]:
    """Linear patterns of height at most ``spec.depth``, ordered by size."""
    for n in count(1):
        block = _patterns_sized(n, spec.depth, spec.literal_pool, ())
        if n > _max_size(spec.depth, 1):
            return
        yield from block


@lru_cache(maxsize=256)
def _patterns_sized(n: int, h: int, pool: tuple, used: tuple) -> tuple:
    if n == 1:
        (x,) = _fresh_vars({Var(u) for u in used}, 1)
        return tuple(PLit(v) for v in pool) + (PNil(), PVar(x))
    if h == 0:
        return ()
    out = []
    for a, b in _compositions(n - 1, 2):
        for p in _patterns_sized(a, h - 1, pool, used):
            vs = used + tuple(v.name for v in pattern_vars(p))
            for q in _patterns_sized(b, h - 1, pool, vs):
                out.append(PCons(p, q))
    return tuple(out)


def _diagonal(seqs: Sequence[Sequence]) -> Iterator[tuple]:
    """Tuples from the product of finite sequences, by sum of indices."""
    k = len(seqs)
    if k == 0:
        yield ()
        return
    if any(len(s) == 0 for s in seqs):
        return
    top = sum(len(s) - 1 for s in seqs)
    for total in range(top + 1):
        for idx in _weak_compositions(total, k):
            if all(i < len(s) for i, s in zip(idx, seqs)):
                yield tuple(s[i] for i, s in zip(idx, seqs))


def _weak_compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _weak_compositions(n - first, k - 1):
            yield (first,) + rest


def _closing_candidates(name: Name, spec: GenSpec, limit: int) -> list:
    vals = list(islice(gen_values(spec), limit))
    if isinstance(name, FunId):
        # functions of the right arity first, so f/k can actually be called
        good = [v for v in vals if isinstance(v, Fun) and len(v.params) == name.arity]
        rest = [v for v in vals if not (isinstance(v, Fun) and len(v.params) == name.arity)]
        return good + rest
    return vals


def gen_closing_substs(gamma, spec: GenSpec = GenSpec(), per_name: int = 64) -> Iterator[Subst]:
    """Closing substitutions for ``gamma``: every name mapped to a closed
    value, pairs ordered by the sum of the per-name value ranks."""
    names = sorted_names(gamma)
    pools = [_closing_candidates(x, spec, per_name) for x in names]
    for vals in _diagonal(pools):
        yield update_many(id_subst(), zip(names, vals))


# ---------------------------------------------------------------------------
# frames and stacks
# ---------------------------------------------------------------------------

def curated_frames(spec: GenSpec = GenSpec()) -> list[Frame]:
    """Frames that tell values apart, most useful first."""
    pool = spec.literal_pool
    h, t = PVar("H"), PVar("T")
    zero = Lit(0)

    def disc(p):
        return CaseF(p, zero, OMEGA)

    def neg(p):
        return CaseF(p, OMEGA, zero)

    out = [
        disc(PLit(pool[0])),
        AppFn((Lit(pool[0]),)),
    ]
    if len(pool) > 1:
        out.append(disc(PLit(pool[1])))
    out += [
        AddL(zero),
        disc(PNil()),
        CaseF(PCons(h, t), Var("H"), OMEGA),
        CaseF(PCons(h, t), Var("T"), OMEGA),
        AppFn(()),
        neg(PLit(pool[0])),
        neg(PNil()),
        neg(PCons(h, t)),
        AppFn((NIL,)),
    ]
    out += [disc(PLit(v)) for v in pool[2:]]
    out += [AppFn((zero, zero)), AppFn((Lit(pool[1 % len(pool)]),)), AppFn((zero, zero, zero))]
    return out


@lru_cache(maxsize=16)
def _frames(spec: GenSpec) -> tuple:
    out: list = []
    seen: set = set()

    def add(f):
        if f not in seen and frame_closed(f):
            seen.add(f)
            out.append(f)

    for f in curated_frames(spec):
        add(f)
    small = list(islice(gen_exprs((), GenSpec(1, spec.max_arity, spec.literal_pool)), 40))
    vals = list(islice(gen_values(spec), 24))
    lits = [Lit(v) for v in spec.literal_pool]
    x_body = list(islice(gen_exprs({Var("X")}, GenSpec(1, spec.max_arity, spec.literal_pool)), 24))
    pats = list(islice(gen_patterns(GenSpec(1, 1, spec.literal_pool)), 12))
    # interleave the frame kinds so that any prefix is varied
    streams = [
        (AddL(e) for e in small),
        (AddR(v) for v in lits),
        (LetF("X", b) for b in x_body),
        (AppFn(tuple(args)) for k in range(spec.max_arity + 1)
         for args in islice(product(vals, repeat=k), 30)),
        (AppArg(fn, (), tuple(rest)) for fn in vals if isinstance(fn, Fun) and fn.params
         for rest in islice(product(vals, repeat=len(fn.params) - 1), 4)),
        (ConsTail(e) for e in small),
        (ConsHead(v) for v in vals),
        (CaseF(p, b, e) for p in pats
         for b in islice(gen_exprs(set(pattern_vars(p)), GenSpec(1, 1, spec.literal_pool)), 6)
         for e in small[:4]),
    ]
    live = [iter(s) for s in streams]
    while live:
        nxt = []
        for it in live:
            f = next(it, None)
            if f is not None:
                add(f)
                nxt.append(it)
        live = nxt
    return tuple(out)


def gen_frames(spec: GenSpec = GenSpec()) -> list[Frame]:
    """Closed frames, curated discriminators first, then systematic ones."""
    return list(_frames(spec))


def gen_stacks(spec: GenSpec = GenSpec()) -> Iterator[tuple]:
    """Closed frame stacks of at most ``spec.depth`` frames (innermost
    first).  Within each length, stacks come by increasing sum of frame
    ranks; lengths are interleaved two singles, two pairs, one triple."""
    frames = _frames(spec)
    yield ()
    if spec.depth == 0 or not frames:
        return
    streams = {L: _stacks_of_length(frames, L) for L in range(1, spec.depth + 1)}
    weights = [(L, 2 if L <= 2 else 1) for L in streams]
    while streams:
        for L, w in weights:
            it = streams.get(L)
            if it is None:
                continue
            for _ in range(w):
                k = next(it, None)
                if k is None:
                    streams.pop(L, None)
                    break
                yield k


def _stacks_of_length(frames: tuple, L: int) -> Iterator[tuple]:
    m = len(frames)
    for total in range(L * (m - 1) + 1):
        for idx in _weak_compositions(total, L):
            if all(i < m for i in idx):
                yield tuple(frames[i] for i in idx)


# ---------------------------------------------------------------------------
# contexts
# ---------------------------------------------------------------------------

def gen_contexts(spec: GenSpec = GenSpec(), binders: Sequence[str] = VAR_POOL) -> Iterator[Expr]:
    """Single-hole contexts of height at most ``spec.depth``, by size.

    The expressions around the hole are scoped in the names bound on the way
    down to it, so a context can close the expression plugged into it.
    """
    for n in range(1, _max_size(spec.depth, spec.max_arity) + 1):
        yield from _contexts_sized(n, frozenset(), spec.depth, spec.max_arity,
                                   spec.literal_pool, tuple(binders))


@lru_cache(maxsize=4096)
def _contexts_sized(n: int, gamma: frozenset, h: int, arity: int, pool: tuple,
                    binders: tuple) -> tuple:
    if n == 1:
        return (HOLE,)
    if h == 0 or n < 1:
        return ()
    out: list = []

    def ctx(m, g=gamma):
        return _contexts_sized(m, g, h - 1, arity, pool, binders)

    def exp(m, g=gamma):
        return _sized(m, g, h - 1, arity, pool)

    (x,) = _fresh_vars(gamma, 1, binders)
    for a, b in _compositions(n - 1, 2):
        # let X = e in C  first: it is what closes an open X
        for e in exp(a):
            for c in ctx(b, gamma | {Var(x)}):
                out.append(Let(x, e, c))
        for c in ctx(a):
            for e in exp(b, gamma | {Var(x)}):
                out.append(Let(x, c, e))
        for c in ctx(a):
            for e in exp(b):
                out.append(Add(c, e))
        for e in exp(a):
            for c in ctx(b):
                out.append(Add(e, c))
        for c in ctx(a):
            for e in exp(b):
                out.append(Cons(c, e))
        for e in exp(a):
            for c in ctx(b):
                out.append(Cons(e, c))
    for k in range(arity + 1):
        for parts in _compositions(n - 1, k + 1):
            for pos in range(k + 1):
                pools = [ctx(p) if i == pos else exp(p) for i, p in enumerate(parts)]
                for items in product(*pools):
                    out.append(Apply(items[0], tuple(items[1:])))
    for k in range(arity + 1):
        f, xs = _fresh_fun(gamma, k), _fresh_vars(gamma, k, binders)
        g_body = gamma | {FunId(f, k), *(Var(v) for v in xs)}
        for c in ctx(n - 1, g_body):
            out.append(Fun(f, xs, c))
        for a, b in _compositions(n - 1, 2):
            for c in ctx(a, g_body):
                for e in exp(b, gamma | {FunId(f, k)}):
                    out.append(Letrec(f, xs, c, e))
            for e in exp(a, g_body):
                for c in ctx(b, gamma | {FunId(f, k)}):
                    out.append(Letrec(f, xs, e, c))
    for pat in _case_patterns(gamma, pool):
        g2 = gamma | set(pattern_vars(pat))
        for a, b, c3 in _compositions(n - 1, 3):
            for hole_at in range(3):
                pools = [
                    ctx(a) if hole_at == 0 else exp(a),
                    ctx(b, g2) if hole_at == 1 else exp(b, g2),
                    ctx(c3) if hole_at == 2 else exp(c3),
                ]
                for s, t, e in product(*pools):
                    out.append(Case(s, pat, t, e))
    return tuple(out)


# ---------------------------------------------------------------------------
# random samplers
# ---------------------------------------------------------------------------

def rng_for(seed: int, *salt) -> random.Random:
    """A generator seeded from ``seed`` and a salt, stable across runs."""
    return random.Random(repr((seed,) + salt))


def sample_value(rng: random.Random, depth: int, spec: GenSpec = GenSpec()) -> Expr:
    r = rng.random()
    if depth <= 0 or r < 0.45:
        if rng.random() < 0.8:
            return Lit(rng.choice(spec.literal_pool))
        return NIL
    if r < 0.75:
        return Cons(sample_value(rng, depth - 1, spec), sample_value(rng, depth - 1, spec))
    return _sample_fun(rng, frozenset(), depth, spec)


def _sample_fun(rng, gamma, depth, spec, omega=0.0) -> Fun:
    k = rng.randint(0, min(2, spec.max_arity))
    f, xs = _fresh_fun(gamma, k), _fresh_vars(gamma, k)
    g = gamma | {FunId(f, k), *(Var(v) for v in xs)}
    return Fun(f, xs, sample_expr(rng, g, depth - 1, spec, omega, recursive=False))


def sample_expr(rng: random.Random, gamma=(), depth: int = 3, spec: GenSpec = GenSpec(),
                omega: float = 0.0, recursive: bool = True) -> Expr:
    """A random expression scoped in ``gamma`` with height at most ``depth``.

    ``omega`` is the chance of splicing in the diverging term; it is only
    used where divergence is wanted.  With ``recursive`` false, known
    function names are called less eagerly.
    """
    g = frozenset(gamma)
    names = sorted_names(g)
    if depth <= 0 or rng.random() < 0.2:
        return _sample_atom(rng, names, spec)
    if omega and rng.random() < omega:
        return OMEGA
    kinds = ["add", "add", "cons", "redex", "redex", "apply", "let", "let",
             "case", "case", "fun", "letrec"]
    kind = rng.choice(kinds)
    d = depth - 1

    def sub(gg=g, dd=d):
        return sample_expr(rng, gg, dd, spec, omega, recursive)

    if kind == "add":
        return Add(sub(), sub())
    if kind == "cons":
        return Cons(sub(), sub())
    if kind == "redex":
        fn = _sample_fun(rng, g, depth, spec, omega)
        return Apply(fn, tuple(sub() for _ in fn.params))
    if kind == "apply":
        funs = [n for n in names if isinstance(n, FunId)]
        if funs and (recursive or rng.random() < 0.5):
            f = rng.choice(funs)
            return Apply(f, tuple(sub() for _ in range(f.arity)))
        return Apply(sub(), tuple(sub() for _ in range(rng.randint(0, 2))))
    if kind == "let":
        (x,) = _fresh_vars(g, 1) if rng.random() < 0.8 else (rng.choice(VAR_POOL),)
        return Let(x, sub(), sub(g | {Var(x)}))
    if kind == "case":
        pat = _sample_pattern(rng, g, spec)
        return Case(sub(), pat, sub(g | set(pattern_vars(pat))), sub())
    if kind == "fun":
        return _sample_fun(rng, g, depth, spec, omega)
    k = rng.randint(0, min(2, spec.max_arity))
    f, xs = _fresh_fun(g, k), _fresh_vars(g, k)
    fid = FunId(f, k)
    fbody = _sample_rec_body(rng, g, fid, xs, d, spec, omega)
    if rng.random() < 0.7:
        args = [sub() for _ in range(k)]
        if isinstance(fbody, Case) and args:
            # start a countdown where it can reach 0
            args[0] = Lit(rng.choice([n for n in spec.literal_pool if n >= 0] or [0]))
        cont = Apply(fid, tuple(args))
    else:
        cont = sub(g | {fid})
    return Letrec(f, xs, fbody, cont)


def _sample_rec_body(rng, g, fid, xs, d, spec, omega):
    """Mostly a guarded recursion that counts its first argument down."""
    inner = g | {fid, *(Var(v) for v in xs)}
    if not xs or rng.random() < 0.3:
        return sample_expr(rng, inner, d, spec, omega, recursive=False)
    x = Var(xs[0])
    step = Add(x, Lit(-1))
    call = Apply(fid, (step,) + tuple(Var(v) for v in xs[1:]))
    base = sample_expr(rng, inner, max(0, d - 1), spec, omega, recursive=False)
    if rng.random() < 0.5:
        call = Add(call, _sample_atom(rng, [x], spec))
    return Case(x, PLit(0), base, call)


def _sample_atom(rng, names, spec):
    r = rng.random()
    if names and r < 0.4:
        return rng.choice(names)
    if r < 0.9:
        return Lit(rng.choice(spec.literal_pool))
    return NIL


def _sample_pattern(rng, gamma, spec) -> Pattern:
    x, y = _fresh_vars(gamma, 2)
    return rng.choice([PLit(rng.choice(spec.literal_pool)), PNil(), PVar(x),
                       PCons(PVar(x), PVar(y)), PCons(PLit(rng.choice(spec.literal_pool)), PVar(y))])


def sample_frame(rng: random.Random, spec: GenSpec = GenSpec(), depth: int = 2) -> Frame:
    """A random closed frame."""
    kind = rng.choice(["addl", "addr", "let", "appfn", "apparg", "case", "tail", "head"])
    if kind == "addl":
        return AddL(sample_expr(rng, (), depth, spec))
    if kind == "addr":
        return AddR(sample_value(rng, 1, spec) if rng.random() < 0.2
                    else Lit(rng.choice(spec.literal_pool)))
    if kind == "let":
        return LetF("X", sample_expr(rng, {Var("X")}, depth, spec))
    if kind == "appfn":
        return AppFn(tuple(sample_expr(rng, (), depth - 1, spec) for _ in range(rng.randint(0, 2))))
    if kind == "apparg":
        fn = _sample_fun(rng, frozenset(), depth, spec) if rng.random() < 0.8 else sample_value(rng, 1, spec)
        k = len(fn.params) if isinstance(fn, Fun) else rng.randint(1, 2)
        k = max(k, 1)
        i = rng.randrange(k)
        done = tuple(sample_value(rng, 1, spec) for _ in range(i))
        rest = tuple(sample_expr(rng, (), depth - 1, spec) for _ in range(k - i - 1))
        return AppArg(fn, done, rest)
    if kind == "case":
        pat = _sample_pattern(rng, frozenset(), spec)
        return CaseF(pat, sample_expr(rng, set(pattern_vars(pat)), depth, spec),
                     sample_expr(rng, (), depth, spec))
    if kind == "tail":
        return ConsTail(sample_expr(rng, (), depth, spec))
    return ConsHead(sample_value(rng, depth, spec))


def sample_stack(rng: random.Random, spec: GenSpec = GenSpec(), max_len: Optional[int] = None) -> tuple:
    n = rng.randint(0, spec.depth if max_len is None else max_len)
    return tuple(sample_frame(rng, spec) for _ in range(n))


def _mutate(rng: random.Random, e: Expr, spec: GenSpec) -> Expr:
    """Change one literal, or failing that wrap the term in ``+ 0``."""
    lits = [i for i, t in enumerate(_preorder(e)) if isinstance(t, Lit)]
    if not lits:
        return Add(e, Lit(0))
    target = rng.choice(lits)
    counter = [-1]

    def go(t):
        counter[0] += 1
        if counter[0] == target:
            return Lit(rng.choice([n for n in spec.literal_pool if n != t.value] or [t.value + 1]))
        return _rebuild(t, go)

    return go(e)


def _preorder(e: Expr) -> list:
    out = [e]
    for c in children(e):
        out += _preorder(c)
    return out


def _rebuild(e: Expr, f) -> Expr:
    if isinstance(e, Fun):
        return Fun(e.name, e.params, f(e.body))
    if isinstance(e, Cons):
        return Cons(f(e.head), f(e.tail))
    if isinstance(e, Add):
        return Add(f(e.lhs), f(e.rhs))
    if isinstance(e, Apply):
        return Apply(f(e.fn), tuple(f(a) for a in e.args))
    if isinstance(e, Let):
        return Let(e.var, f(e.bound), f(e.body))
    if isinstance(e, Letrec):
        return Letrec(e.name, e.params, f(e.fbody), f(e.cont))
    if isinstance(e, Case):
        return Case(f(e.scrutinee), e.pat, f(e.then), f(e.else_))
    return e


def sample_pair(rng: random.Random, spec: GenSpec = GenSpec(), depth: int = 2) -> tuple[Expr, Expr]:
    """A random pair of closed expressions: independent, related by a
    rewrite that preserves meaning, or one small mutation apart."""
    e = sample_expr(rng, (), depth, spec)
    r = rng.random()
    if r < 0.3:
        return e, sample_expr(rng, (), depth, spec)
    if r < 0.65:
        (x,) = _fresh_vars(frozenset(), 1)
        f = _fresh_fun(frozenset(), 0)
        rewrites = [Let(x, e, Var(x)),
                    Apply(Fun(f, (), e), ()),
                    Let(x, Lit(0), e),
                    Case(e, PVar(x), Var(x), OMEGA)]
        return e, rng.choice(rewrites)
    return e, _mutate(rng, e, spec)


def sample_context(rng: random.Random, spec: GenSpec = GenSpec(), depth: Optional[int] = None,
                   gamma=frozenset()) -> Expr:
    """A random single-hole context; binders on the path use the usual pool."""
    d = spec.depth if depth is None else depth
    g = frozenset(gamma)
    if d <= 0 or rng.random() < 0.25:
        return HOLE
    kind = rng.choice(["let_body", "let_bound", "addl", "addr", "cons_h", "cons_t",
                       "apply_fn", "apply_arg", "fun", "case_s", "case_t", "case_e",
                       "letrec_body", "letrec_cont"])

    def c(gg=g):
        return sample_context(rng, spec, d - 1, gg)

    def e(gg=g):
        return sample_expr(rng, gg, d - 1, spec)

    (x,) = _fresh_vars(g, 1)
    if kind == "let_body":
        return Let(x, e(), c(g | {Var(x)}))
    if kind == "let_bound":
        return Let(x, c(), e(g | {Var(x)}))
    if kind == "addl":
        return Add(c(), e())
    if kind == "addr":
        return Add(e(), c())
    if kind == "cons_h":
        return Cons(c(), e())
    if kind == "cons_t":
        return Cons(e(), c())
    if kind == "apply_fn":
        return Apply(c(), tuple(e() for _ in range(rng.randint(0, 2))))
    if kind == "apply_arg":
        k = rng.randint(1, 3)
        i = rng.randrange(k)
        return Apply(e(), tuple(c() if j == i else e() for j in range(k)))
    if kind in ("fun", "letrec_body", "letrec_cont"):
        k = rng.randint(0, 2)
        f, xs = _fresh_fun(g, k), _fresh_vars(g, k)
        inner = g | {FunId(f, k), *(Var(v) for v in xs)}
        if kind == "fun":
            return Fun(f, xs, c(inner))
        if kind == "letrec_body":
            return Letrec(f, xs, c(inner), e(g | {FunId(f, k)}))
        return Letrec(f, xs, e(inner), c(g | {FunId(f, k)}))
    pat = _sample_pattern(rng, g, spec)
    g2 = g | set(pattern_vars(pat))
    if kind == "case_s":
        return Case(c(), pat, e(g2), e())
    if kind == "case_t":
        return Case(e(), pat, c(g2), e())
    return Case(e(), pat, e(g2), c())


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

CLOSED_METHODS = ("naive", "ciu", "behav", "ctx", "discriminator", "logrel")
OPEN_METHODS = ("ciu", "ctx", "logrel")


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    gamma: frozenset
    lhs: Expr
    rhs: Expr
    side_conditions: tuple = ()
    expected: str = "consistent"
    # per-method expectations; methods not listed are not run
    by_method: dict = field(default_factory=dict, compare=False, hash=False)
    note: str = ""

    @property
    def methods(self) -> tuple:
        return tuple(self.by_method)

    def expected_for(self, method: str) -> str:
        return self.by_method.get(method, self.expected)


def corpus_dir() -> Path:
    return Path(str(resources.files("mlq") / "corpus"))


def _read(base: Path, ref: str) -> Expr:
    from .surface import parse_expr

    if ref.endswith(".mlq"):
        return parse_expr((base / ref).read_text(encoding="utf-8"))
    return parse_expr(ref)


def load_manifest(path=None) -> list[CorpusEntry]:
    """Entries of a corpus manifest (the shipped one by default)."""
    manifest = Path(path) if path is not None else corpus_dir() / "manifest.json"
    base = manifest.parent
    data = json.loads(manifest.read_text(encoding="utf-8"))
    out = []
    for d in data["entries"]:
        gamma = frozenset(parse_name(n) for n in d.get("gamma", []))
        expected = d.get("expected", "consistent")
        methods = d.get("methods") or (OPEN_METHODS if gamma else CLOSED_METHODS)
        by_method = {m: expected for m in methods}
        by_method.update(d.get("expected_by_method", {}))
        sides = tuple((s["kind"], _read(base, s["expr"])) for s in d.get("side_conditions", []))
        out.append(CorpusEntry(d["name"], gamma, _read(base, d["lhs"]), _read(base, d["rhs"]),
                               sides, expected, by_method, d.get("note", "")))
    return out


def check_side_conditions(entry: CorpusEntry, fuel: int = 10_000) -> list[str]:
    """Side conditions that could not be discharged (empty when all hold)."""
    from .machine import Configuration, Terminated, detect_divergence

    failed = []
    for kind, e in entry.side_conditions:
        if kind == "terminates":
            if not isinstance(detect_divergence(Configuration((), e), fuel), Terminated):
                failed.append(f"terminates: {e}")
        elif kind == "closed":
            if free_names(e):
                failed.append(f"closed: {e}")
        else:
            failed.append(f"unknown side condition {kind!r}")
    return failed


def schema_instances(spec: GenSpec = GenSpec(), per_schema: int = 3) -> list[CorpusEntry]:
    """Generated instances of the equivalence schemas (beta 1, commutativity
    of addition, sequencing).  All are expected to be consistent."""
    from .machine import Configuration, Terminated, detect_divergence

    methods = {m: "consistent" for m in ("ciu", "behav", "ctx", "logrel")}
    out = []
    rng = rng_for(spec.seed, "schema")
    for i in range(per_schema):
        e = sample_expr(rng, {Var("X")}, 2, spec)
        v = sample_value(rng, 1, spec)
        lhs = apply_subst(e, update_many(id_subst(), [(Var("X"), v)]))
        out.append(CorpusEntry(f"gen-beta1-{i}", frozenset(), lhs, Let("X", v, e), (), "consistent",
                               dict(methods)))
    for i in range(per_schema):
        e1, e2 = sample_expr(rng, (), 2, spec), sample_expr(rng, (), 2, spec)
        out.append(CorpusEntry(f"gen-add-comm-{i}", frozenset(), Add(e1, e2), Add(e2, e1), (),
                               "consistent", dict(methods)))
    made = 0
    while made < per_schema:
        e1 = sample_expr(rng, (), 2, spec)
        if not isinstance(detect_divergence(Configuration((), e1), 2_000), Terminated):
            continue
        e2 = sample_expr(rng, {Var("Y")}, 2, spec)
        out.append(CorpusEntry(f"gen-seq-{made}", frozenset({Var("Y")}), e2, Let("X", e1, e2),
                               (("terminates", e1),), "consistent",
                               {m: "consistent" for m in OPEN_METHODS}))
        made += 1
    return out


def corpus(spec: GenSpec = GenSpec(), generated: bool = True) -> list[CorpusEntry]:
    """The shipped entries followed by generated schema instances."""
    out = load_manifest()
    if generated:
        out += schema_instances(spec)
    return out
