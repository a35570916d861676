"""Abstract syntax for the language: patterns, values and expressions.

Terms are built from frozen dataclasses and are safe to share.  The named
form is what the parser produces and what the machine runs on.  A nameless
(de Bruijn) core form is available through :func:`to_core` and
:func:`from_core`; alpha-equivalence and capture-avoiding substitution are
defined on it.

Indexing convention for the core form (1-based): inside a binder group the
outermost name gets the lowest index.  In a function body the self
identifier is ``#1`` and the parameters are ``#2 .. #k+1``; names bound
further out follow, and free names come last, in the order of the free-name
environment passed to :func:`to_core`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union


# ---------------------------------------------------------------------------
# Named syntax
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Lit:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class FunId:
    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True, slots=True)
class Fun:
    name: str
    params: tuple[str, ...]
    body: "Expr"

    @property
    def self_id(self) -> FunId:
        return FunId(self.name, len(self.params))


@dataclass(frozen=True, slots=True)
class Nil:
    pass


@dataclass(frozen=True, slots=True)
class Cons:
    head: "Expr"
    tail: "Expr"


@dataclass(frozen=True, slots=True)
class Apply:
    fn: "Expr"
    args: tuple["Expr", ...]


@dataclass(frozen=True, slots=True)
class Case:
    scrutinee: "Expr"
    pat: "Pattern"
    then: "Expr"
    else_: "Expr"


@dataclass(frozen=True, slots=True)
class Let:
    var: str
    bound: "Expr"
    body: "Expr"


@dataclass(frozen=True, slots=True)
class Letrec:
    name: str
    params: tuple[str, ...]
    fbody: "Expr"
    cont: "Expr"

    @property
    def self_id(self) -> FunId:
        return FunId(self.name, len(self.params))


@dataclass(frozen=True, slots=True)
class Add:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True, slots=True)
class Hole:
    """The hole of a context or frame; never part of a runnable program."""


# patterns

@dataclass(frozen=True, slots=True)
class PLit:
    value: int


@dataclass(frozen=True, slots=True)
class PVar:
    name: str


@dataclass(frozen=True, slots=True)
class PNil:
    pass


@dataclass(frozen=True, slots=True)
class PCons:
    head: "Pattern"
    tail: "Pattern"


Name = Union[Var, FunId]
Pattern = Union[PLit, PVar, PNil, PCons]
Expr = Union[Lit, Var, FunId, Fun, Nil, Cons, Apply, Case, Let, Letrec, Add, Hole]
ScopeCtx = frozenset  # frozenset[Name]

NIL = Nil()
HOLE = Hole()

# the canonical diverging term
OMEGA = Apply(Fun("f", (), Apply(FunId("f", 0), ())), ())


def name_key(n: Name) -> tuple:
    if isinstance(n, Var):
        return (0, n.name, 0)
    return (1, n.name, n.arity)


def sorted_names(names: Iterable[Name]) -> list[Name]:
    return sorted(set(names), key=name_key)


def parse_name(text: str) -> Name:
    """``"X"`` -> Var, ``"f/2"`` -> FunId."""
    text = text.strip()
    if "/" in text:
        fname, _, arity = text.partition("/")
        if not fname or not arity.isdigit():
            raise ValueError(f"bad function identifier {text!r}")
        return FunId(fname, int(arity))
    if not text:
        raise ValueError("empty name")
    return Var(text)


def mk_list(*items: Expr, tail: Expr = NIL) -> Expr:
    out = tail
    for item in reversed(items):
        out = Cons(item, out)
    return out


def lit_or(e) -> Expr:
    return Lit(e) if isinstance(e, int) else e


# ---------------------------------------------------------------------------
# Values, patterns, free names
# ---------------------------------------------------------------------------

def is_value(e: Expr) -> bool:
    while isinstance(e, Cons):
        if not is_value(e.head):
            return False
        e = e.tail
    return isinstance(e, (Lit, Var, FunId, Fun, Nil))


def pattern_vars(p: Pattern) -> tuple[Var, ...]:
    """Variables of ``p`` left to right (head before tail)."""
    out: list[Var] = []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, PVar):
            out.append(Var(q.name))
        elif isinstance(q, PCons):
            stack.append(q.tail)
            stack.append(q.head)
    return tuple(out)


def is_linear(p: Pattern) -> bool:
    vs = pattern_vars(p)
    return len(set(vs)) == len(vs)


def binder_names(params: Sequence[str]) -> tuple[Var, ...]:
    return tuple(Var(x) for x in params)


def free_names(e: Expr) -> frozenset:
    out: set = set()
    _free(e, frozenset(), out)
    return frozenset(out)


def _free(e, bound, out) -> None:
    while True:
        if isinstance(e, (Var, FunId)):
            if e not in bound:
                out.add(e)
            return
        if isinstance(e, (Lit, Nil, Hole)):
            return
        if isinstance(e, Fun):
            e, bound = e.body, bound | {e.self_id, *binder_names(e.params)}
        elif isinstance(e, Cons):
            _free(e.head, bound, out)
            e = e.tail
        elif isinstance(e, Add):
            _free(e.lhs, bound, out)
            e = e.rhs
        elif isinstance(e, Apply):
            for a in e.args:
                _free(a, bound, out)
            e = e.fn
        elif isinstance(e, Let):
            _free(e.bound, bound, out)
            e, bound = e.body, bound | {Var(e.var)}
        elif isinstance(e, Letrec):
            f = e.self_id
            _free(e.fbody, bound | {f, *binder_names(e.params)}, out)
            e, bound = e.cont, bound | {f}
        elif isinstance(e, Case):
            _free(e.scrutinee, bound, out)
            _free(e.else_, bound, out)
            e, bound = e.then, bound | set(pattern_vars(e.pat))
        else:
            raise TypeError(f"not an expression: {e!r}")


def contains_hole(e: Expr) -> int:
    """Number of holes in ``e``."""
    if isinstance(e, Hole):
        return 1
    return sum(contains_hole(c) for c in children(e))


def children(e: Expr) -> tuple:
    if isinstance(e, Fun):
        return (e.body,)
    if isinstance(e, Cons):
        return (e.head, e.tail)
    if isinstance(e, Add):
        return (e.lhs, e.rhs)
    if isinstance(e, Apply):
        return (e.fn, *e.args)
    if isinstance(e, Let):
        return (e.bound, e.body)
    if isinstance(e, Letrec):
        return (e.fbody, e.cont)
    if isinstance(e, Case):
        return (e.scrutinee, e.then, e.else_)
    return ()


def size(e: Expr) -> int:
    return 1 + sum(size(c) for c in children(e))


def height(e: Expr) -> int:
    cs = children(e)
    return 0 if not cs else 1 + max(height(c) for c in cs)


# ---------------------------------------------------------------------------
# Nameless core
# ---------------------------------------------------------------------------
# Lit, Nil, Cons, Apply and Add are shared with the named form.  Binder
# names survive only as hints (excluded from equality) so that from_core can
# give back the original names when no capture is possible.

@dataclass(frozen=True, slots=True)
class Idx:
    i: int


@dataclass(frozen=True, slots=True)
class CFun:
    arity: int
    body: object
    hint: tuple = field(default=(), compare=False)


@dataclass(frozen=True, slots=True)
class CLet:
    bound: object
    body: object
    hint: tuple = field(default=(), compare=False)


@dataclass(frozen=True, slots=True)
class CLetrec:
    arity: int
    fbody: object
    cont: object
    hint: tuple = field(default=(), compare=False)


@dataclass(frozen=True, slots=True)
class CCase:
    scrutinee: object
    pat: object
    then: object
    else_: object


@dataclass(frozen=True, slots=True)
class CPVar:
    hint: str = field(default="X", compare=False)


def core_pattern_arity(p) -> int:
    if isinstance(p, CPVar):
        return 1
    if isinstance(p, PCons):
        return core_pattern_arity(p.head) + core_pattern_arity(p.tail)
    return 0


class CoreError(ValueError):
    pass


def to_core(e: Expr, free: Sequence[Name] | None = None):
    """Nameless form of ``e``.

    ``free`` lists the free-name slots; by default the sorted free names of
    ``e``.  A name missing from ``free`` raises :class:`CoreError`.
    """
    if free is None:
        free = sorted_names(free_names(e))
    return _to_core(e, tuple(free))


def _to_core(e, env: tuple):
    if isinstance(e, (Var, FunId)):
        try:
            return Idx(env.index(e) + 1)
        except ValueError:
            raise CoreError(f"name {e} is not in the free-name environment") from None
    if isinstance(e, (Lit, Nil)):
        return e
    if isinstance(e, Fun):
        group = (e.self_id, *binder_names(e.params))
        return CFun(len(e.params), _to_core(e.body, group + env), (e.name, e.params))
    if isinstance(e, Cons):
        return Cons(_to_core(e.head, env), _to_core(e.tail, env))
    if isinstance(e, Add):
        return Add(_to_core(e.lhs, env), _to_core(e.rhs, env))
    if isinstance(e, Apply):
        return Apply(_to_core(e.fn, env), tuple(_to_core(a, env) for a in e.args))
    if isinstance(e, Let):
        return CLet(_to_core(e.bound, env), _to_core(e.body, (Var(e.var),) + env), (e.var,))
    if isinstance(e, Letrec):
        f = e.self_id
        group = (f, *binder_names(e.params))
        return CLetrec(len(e.params), _to_core(e.fbody, group + env),
                       _to_core(e.cont, (f,) + env), (e.name, e.params))
    if isinstance(e, Case):
        pv = pattern_vars(e.pat)
        return CCase(_to_core(e.scrutinee, env), _core_pat(e.pat),
                     _to_core(e.then, pv + env), _to_core(e.else_, env))
    if isinstance(e, Hole):
        raise CoreError("holes have no nameless form")
    raise TypeError(f"not an expression: {e!r}")


def _core_pat(p):
    if isinstance(p, PVar):
        return CPVar(p.name)
    if isinstance(p, PCons):
        return PCons(_core_pat(p.head), _core_pat(p.tail))
    return p


def core_free_indices(c, memo: dict | None = None) -> frozenset:
    """Indices occurring free in core term ``c``, relative to ``c``'s scope."""
    if memo is None:
        memo = {}
    key = id(c)
    hit = memo.get(key)
    if hit is not None:
        return hit[1]
    if isinstance(c, Idx):
        out = frozenset((c.i,))
    elif isinstance(c, (Lit, Nil)):
        out = frozenset()
    elif isinstance(c, CFun):
        out = _unbind(core_free_indices(c.body, memo), c.arity + 1)
    elif isinstance(c, (Cons, Add)):
        a, b = (c.head, c.tail) if isinstance(c, Cons) else (c.lhs, c.rhs)
        out = core_free_indices(a, memo) | core_free_indices(b, memo)
    elif isinstance(c, Apply):
        out = core_free_indices(c.fn, memo).union(*(core_free_indices(a, memo) for a in c.args))
    elif isinstance(c, CLet):
        out = core_free_indices(c.bound, memo) | _unbind(core_free_indices(c.body, memo), 1)
    elif isinstance(c, CLetrec):
        out = (_unbind(core_free_indices(c.fbody, memo), c.arity + 1)
               | _unbind(core_free_indices(c.cont, memo), 1))
    elif isinstance(c, CCase):
        out = (core_free_indices(c.scrutinee, memo) | core_free_indices(c.else_, memo)
               | _unbind(core_free_indices(c.then, memo), core_pattern_arity(c.pat)))
    else:
        raise TypeError(f"not a core term: {c!r}")
    # keep c alive so its id stays unique for the lifetime of the memo
    memo[key] = (c, out)
    return out


def _unbind(indices: frozenset, k: int) -> frozenset:
    return frozenset(i - k for i in indices if i > k)


class _Fresh:
    def __init__(self, avoid: set):
        self.avoid = avoid

    def pick(self, hint: Name) -> Name:
        if hint not in self.avoid:
            return hint
        base = hint.name.rstrip("0123456789") or ("X" if isinstance(hint, Var) else "f")
        n = 1
        while True:
            cand = Var(f"{base}{n}") if isinstance(hint, Var) else FunId(f"{base}{n}", hint.arity)
            if cand not in self.avoid:
                return cand
            n += 1


def from_core(c, free: Sequence[Name] = ()) -> Expr:
    """Named form of core term ``c`` with free slots resolved through ``free``.

    Binder names come from the hints recorded by :func:`to_core`; a binder is
    renamed only when keeping its hint would capture a name used in its scope.
    """
    return _from_core(c, tuple(free), {})


def _group(c, hints: Sequence[Name], env: tuple, memo, bodies) -> tuple:
    k = len(hints)
    outer = set()
    for body, size_ in bodies:
        for i in core_free_indices(body, memo):
            if i > size_:
                j = i - size_
                if j > len(env):
                    raise CoreError(f"dangling index #{i}")
                outer.add(env[j - 1])
    chosen: list[Name] = []
    fresh = _Fresh(outer)
    for h in hints:
        name = fresh.pick(h)
        chosen.append(name)
        fresh.avoid.add(name)
    assert len(chosen) == k
    return tuple(chosen)


def _from_core(c, env: tuple, memo) -> Expr:
    if isinstance(c, Idx):
        if not 1 <= c.i <= len(env):
            raise CoreError(f"dangling index #{c.i}")
        return env[c.i - 1]
    if isinstance(c, (Lit, Nil)):
        return c
    if isinstance(c, CFun):
        fname, params = _fun_hints(c.hint, c.arity)
        hints = (FunId(fname, c.arity), *binder_names(params))
        group = _group(c, hints, env, memo, [(c.body, c.arity + 1)])
        body = _from_core(c.body, group + env, memo)
        return Fun(group[0].name, tuple(v.name for v in group[1:]), body)
    if isinstance(c, Cons):
        return Cons(_from_core(c.head, env, memo), _from_core(c.tail, env, memo))
    if isinstance(c, Add):
        return Add(_from_core(c.lhs, env, memo), _from_core(c.rhs, env, memo))
    if isinstance(c, Apply):
        return Apply(_from_core(c.fn, env, memo), tuple(_from_core(a, env, memo) for a in c.args))
    if isinstance(c, CLet):
        hint = Var(c.hint[0]) if c.hint else Var("X")
        (x,) = _group(c, (hint,), env, memo, [(c.body, 1)])
        return Let(x.name, _from_core(c.bound, env, memo), _from_core(c.body, (x,) + env, memo))
    if isinstance(c, CLetrec):
        fname, params = _fun_hints(c.hint, c.arity)
        hints = (FunId(fname, c.arity), *binder_names(params))
        # the function name scopes over both parts, the parameters only over fbody
        group = _group(c, hints, env, memo, [(c.fbody, c.arity + 1), (c.cont, 1)])
        f = group[0]
        return Letrec(f.name, tuple(v.name for v in group[1:]),
                      _from_core(c.fbody, group + env, memo),
                      _from_core(c.cont, (f,) + env, memo))
    if isinstance(c, CCase):
        hints = tuple(Var(h) for h in _core_pat_hints(c.pat))
        group = _group(c, hints, env, memo, [(c.then, len(hints))])
        names = iter(group)
        pat = _named_pat(c.pat, names)
        return Case(_from_core(c.scrutinee, env, memo), pat,
                    _from_core(c.then, group + env, memo), _from_core(c.else_, env, memo))
    raise TypeError(f"not a core term: {c!r}")


def _fun_hints(hint: tuple, arity: int) -> tuple[str, tuple[str, ...]]:
    if hint and len(hint[1]) == arity:
        return hint[0], tuple(hint[1])
    return "f", tuple(f"X{i + 1}" for i in range(arity))


def _core_pat_hints(p) -> list[str]:
    if isinstance(p, CPVar):
        return [p.hint]
    if isinstance(p, PCons):
        return _core_pat_hints(p.head) + _core_pat_hints(p.tail)
    return []


def _named_pat(p, names) -> Pattern:
    if isinstance(p, CPVar):
        return PVar(next(names).name)
    if isinstance(p, PCons):
        head = _named_pat(p.head, names)
        return PCons(head, _named_pat(p.tail, names))
    return p


def alpha_eq(e1: Expr, e2: Expr) -> bool:
    if e1 is e2:
        return True
    free = sorted_names(free_names(e1) | free_names(e2))
    return to_core(e1, free) == to_core(e2, free)


# ---------------------------------------------------------------------------
# JSON tree form
# ---------------------------------------------------------------------------

def to_json(e: Expr) -> dict:
    if isinstance(e, Lit):
        return {"kind": "lit", "value": e.value}
    if isinstance(e, Var):
        return {"kind": "var", "name": e.name}
    if isinstance(e, FunId):
        return {"kind": "funid", "name": e.name, "arity": e.arity}
    if isinstance(e, Fun):
        return {"kind": "fun", "name": e.name, "params": list(e.params), "body": to_json(e.body)}
    if isinstance(e, Nil):
        return {"kind": "nil"}
    if isinstance(e, Cons):
        return {"kind": "cons", "head": to_json(e.head), "tail": to_json(e.tail)}
    if isinstance(e, Apply):
        return {"kind": "apply", "fn": to_json(e.fn), "args": [to_json(a) for a in e.args]}
    if isinstance(e, Case):
        return {"kind": "case", "scrutinee": to_json(e.scrutinee), "pattern": pattern_to_json(e.pat),
                "then": to_json(e.then), "else": to_json(e.else_)}
    if isinstance(e, Let):
        return {"kind": "let", "var": e.var, "bound": to_json(e.bound), "body": to_json(e.body)}
    if isinstance(e, Letrec):
        return {"kind": "letrec", "name": e.name, "params": list(e.params),
                "body": to_json(e.fbody), "cont": to_json(e.cont)}
    if isinstance(e, Add):
        return {"kind": "add", "lhs": to_json(e.lhs), "rhs": to_json(e.rhs)}
    if isinstance(e, Hole):
        return {"kind": "hole"}
    raise TypeError(f"not an expression: {e!r}")


def pattern_to_json(p: Pattern) -> dict:
    if isinstance(p, PLit):
        return {"kind": "lit", "value": p.value}
    if isinstance(p, PVar):
        return {"kind": "var", "name": p.name}
    if isinstance(p, PNil):
        return {"kind": "nil"}
    return {"kind": "cons", "head": pattern_to_json(p.head), "tail": pattern_to_json(p.tail)}


def from_json(d: dict) -> Expr:
    k = d["kind"]
    if k == "lit":
        return Lit(int(d["value"]))
    if k == "var":
        return Var(d["name"])
    if k == "funid":
        return FunId(d["name"], int(d["arity"]))
    if k == "fun":
        return Fun(d["name"], tuple(d["params"]), from_json(d["body"]))
    if k == "nil":
        return NIL
    if k == "cons":
        return Cons(from_json(d["head"]), from_json(d["tail"]))
    if k == "apply":
        return Apply(from_json(d["fn"]), tuple(from_json(a) for a in d["args"]))
    if k == "case":
        return Case(from_json(d["scrutinee"]), pattern_from_json(d["pattern"]),
                    from_json(d["then"]), from_json(d["else"]))
    if k == "let":
        return Let(d["var"], from_json(d["bound"]), from_json(d["body"]))
    if k == "letrec":
        return Letrec(d["name"], tuple(d["params"]), from_json(d["body"]), from_json(d["cont"]))
    if k == "add":
        return Add(from_json(d["lhs"]), from_json(d["rhs"]))
    if k == "hole":
        return HOLE
    raise ValueError(f"unknown kind {k!r}")


def pattern_from_json(d: dict) -> Pattern:
    k = d["kind"]
    if k == "lit":
        return PLit(int(d["value"]))
    if k == "var":
        return PVar(d["name"])
    if k == "nil":
        return PNil()
    if k == "cons":
        return PCons(pattern_from_json(d["head"]), pattern_from_json(d["tail"]))
    raise ValueError(f"unknown pattern kind {k!r}")
