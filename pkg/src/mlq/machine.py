"""Frame-stack abstract machine.

A configuration is a frame stack (innermost frame first; the empty tuple is
the identity stack) paired with the expression under focus.  Every rule
application costs one step, so step counts of :func:`eval` and derivation
heights of :func:`terminates_k` line up.

A ``[v1|v2]`` made of values is itself a value.  Only non-value cons
expressions are taken apart; otherwise the cons rule and the value rules
would both fire and ``[1|[]]`` would cycle forever.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from .scoping import closed, closed_value, exp_scoped
from .substitution import apply_subst, id_subst, instantiate, is_match, match_bindings, match_subst, update_many
from .syntax import (
    Add, Apply, Case, Cons, Expr, Fun, FunId, Hole, Let, Letrec, Lit, Nil, Pattern, Var,
    binder_names, children, contains_hole, is_value, pattern_vars,
)

# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class AppFn:
    """``apply □(e1, ..., ek)``"""
    args: tuple


@dataclass(frozen=True, slots=True)
class AppArg:
    """``apply v(v1, ..., vi-1, □, ei+1, ..., ek)``"""
    fn: Expr
    done: tuple
    rest: tuple


@dataclass(frozen=True, slots=True)
class LetF:
    var: str
    body: Expr


@dataclass(frozen=True, slots=True)
class AddL:
    """``□ + e2``"""
    rhs: Expr


@dataclass(frozen=True, slots=True)
class AddR:
    """``v1 + □``"""
    lhs: Expr


@dataclass(frozen=True, slots=True)
class CaseF:
    pat: Pattern
    then: Expr
    else_: Expr


@dataclass(frozen=True, slots=True)
class ConsTail:
    """``[e1|□]``: the tail is being evaluated, the head is still pending."""
    head: Expr


@dataclass(frozen=True, slots=True)
class ConsHead:
    """``[□|v2]``: the tail is done, the head is being evaluated."""
    tail: Expr


Frame = Union[AppFn, AppArg, LetF, AddL, AddR, CaseF, ConsTail, ConsHead]
FrameStack = tuple  # tuple[Frame, ...], innermost first
ID: FrameStack = ()


@dataclass(frozen=True, slots=True)
class Configuration:
    stack: tuple
    expr: Expr


@dataclass(frozen=True)
class Final:
    value: Expr


@dataclass(frozen=True)
class Terminated:
    value: Expr
    steps: int


@dataclass(frozen=True)
class OutOfFuel:
    last: Configuration
    steps: int


@dataclass(frozen=True)
class Stuck:
    at: Configuration
    reason: str
    steps: int = 0


@dataclass(frozen=True)
class Diverges:
    """Certificate: after ``prefix`` steps the machine is at ``at``, and
    ``period`` further steps bring it back to ``at``."""
    prefix: int
    period: int
    at: Configuration


@dataclass(frozen=True)
class Unknown:
    reason: str
    outcome: Union[OutOfFuel, Stuck]


EvalOutcome = Union[Terminated, OutOfFuel, Stuck]


# ---------------------------------------------------------------------------
# plugging and closedness
# ---------------------------------------------------------------------------

def plug_frame(f: Frame, e: Expr) -> Expr:
    if isinstance(f, AppFn):
        return Apply(e, f.args)
    if isinstance(f, AppArg):
        return Apply(f.fn, f.done + (e,) + f.rest)
    if isinstance(f, LetF):
        return Let(f.var, e, f.body)
    if isinstance(f, AddL):
        return Add(e, f.rhs)
    if isinstance(f, AddR):
        return Add(f.lhs, e)
    if isinstance(f, CaseF):
        return Case(e, f.pat, f.then, f.else_)
    if isinstance(f, ConsTail):
        return Cons(f.head, e)
    if isinstance(f, ConsHead):
        return Cons(e, f.tail)
    raise TypeError(f"not a frame: {f!r}")


def plug_stack(k: Sequence[Frame], e: Expr) -> Expr:
    for f in k:
        e = plug_frame(f, e)
    return e


def frame_closed(f: Frame) -> bool:
    if isinstance(f, AppFn):
        return all(closed(a) for a in f.args)
    if isinstance(f, AppArg):
        return (closed_value(f.fn) and all(closed_value(v) for v in f.done)
                and all(closed(a) for a in f.rest))
    if isinstance(f, LetF):
        return exp_scoped({Var(f.var)}, f.body)
    if isinstance(f, AddL):
        return closed(f.rhs)
    if isinstance(f, AddR):
        return closed_value(f.lhs)
    if isinstance(f, CaseF):
        return exp_scoped(pattern_vars(f.pat), f.then) and closed(f.else_)
    if isinstance(f, ConsTail):
        return closed(f.head)
    if isinstance(f, ConsHead):
        return closed_value(f.tail)
    return False


def frames_closed(k: Sequence[Frame]) -> bool:
    return all(frame_closed(f) for f in k)


def config_closed(c: Configuration) -> bool:
    return frames_closed(c.stack) and closed(c.expr)


def frame_of_context(e: Expr) -> Optional[Frame]:
    """Read a one-hole expression as a frame, or None if the hole is not in
    a frame position."""
    def hole(x):
        return isinstance(x, Hole)

    if isinstance(e, Apply):
        if hole(e.fn):
            return AppFn(e.args)
        for i, a in enumerate(e.args):
            if hole(a):
                done = e.args[:i]
                if is_value(e.fn) and all(is_value(v) for v in done):
                    return AppArg(e.fn, done, e.args[i + 1:])
                return None
        return None
    if isinstance(e, Let) and hole(e.bound):
        return LetF(e.var, e.body)
    if isinstance(e, Add):
        if hole(e.lhs):
            return AddL(e.rhs)
        if hole(e.rhs) and is_value(e.lhs):
            return AddR(e.lhs)
        return None
    if isinstance(e, Case) and hole(e.scrutinee):
        return CaseF(e.pat, e.then, e.else_)
    if isinstance(e, Cons):
        if hole(e.tail):
            return ConsTail(e.head)
        if hole(e.head) and is_value(e.tail):
            return ConsHead(e.tail)
    return None


# ---------------------------------------------------------------------------
# one step
# ---------------------------------------------------------------------------
# The hot loop works on a linked stack: None or (frame, rest, depth).

def _link(k: Sequence[Frame]):
    out = None
    for i, f in enumerate(reversed(k)):
        out = (f, out, i + 1)
    return out


def _unlink(s) -> tuple:
    out = []
    while s is not None:
        out.append(s[0])
        s = s[1]
    return tuple(out)


def _depth(s) -> int:
    return 0 if s is None else s[2]


def _push(f, s):
    return (f, s, 1 + (0 if s is None else s[2]))


# sentinel results of _step (None is the empty stack, so it cannot be one)
_FINAL = object()
_STUCK = object()


def _call(fn: Expr, args: tuple):
    if not isinstance(fn, Fun):
        return None, "application of a non-function value"
    if len(fn.params) != len(args):
        return None, f"arity mismatch: {fn.name}/{len(fn.params)} applied to {len(args)} argument(s)"
    env = {fn.self_id: fn}
    for x, v in zip(fn.params, args):
        env[Var(x)] = v
    return instantiate(fn.body, env), None


def _step(s, e):
    """One rule application.  Returns ``(stack, expr)``, ``(_FINAL, value)``
    or ``(_STUCK, reason)``."""
    if is_value(e):
        if s is None:
            return _FINAL, e
        f, rest = s[0], s[1]
        t = type(f)
        if t is AppFn:
            if f.args:
                return _push(AppArg(e, (), f.args[1:]), rest), f.args[0]
            body, why = _call(e, ())
            return (_STUCK, why) if body is None else (rest, body)
        if t is AppArg:
            if f.rest:
                return _push(AppArg(f.fn, f.done + (e,), f.rest[1:]), rest), f.rest[0]
            body, why = _call(f.fn, f.done + (e,))
            return (_STUCK, why) if body is None else (rest, body)
        if t is LetF:
            return rest, instantiate(f.body, {Var(f.var): e})
        if t is AddL:
            return _push(AddR(e), rest), f.rhs
        if t is AddR:
            if isinstance(f.lhs, Lit) and isinstance(e, Lit):
                return rest, Lit(f.lhs.value + e.value)
            return _STUCK, "addition of non-literal operands"
        if t is CaseF:
            env = match_bindings(f.pat, e)
            if env is None:
                return rest, f.else_
            return rest, instantiate(f.then, env)
        if t is ConsTail:
            return _push(ConsHead(e), rest), f.head
        if t is ConsHead:
            return rest, Cons(e, f.tail)
        raise TypeError(f"not a frame: {f!r}")
    t = type(e)
    if t is Let:
        return _push(LetF(e.var, e.body), s), e.bound
    if t is Cons:
        return _push(ConsTail(e.head), s), e.tail
    if t is Apply:
        return _push(AppFn(e.args), s), e.fn
    if t is Add:
        return _push(AddL(e.rhs), s), e.lhs
    if t is Letrec:
        return s, instantiate(e.cont, {e.self_id: Fun(e.name, e.params, e.fbody)})
    if t is Case:
        return _push(CaseF(e.pat, e.then, e.else_), s), e.scrutinee
    if t is Hole:
        return _STUCK, "hole in focus"
    raise TypeError(f"not an expression: {e!r}")


def step(c: Configuration) -> Union[Configuration, Final, Stuck]:
    s, e = _step(_link(c.stack), c.expr)
    if s is _FINAL:
        return Final(e)
    if s is _STUCK:
        return Stuck(c, e)
    return Configuration(_unlink(s), e)


def eval(e: Expr, k0: Sequence[Frame] = ID, fuel: int = 10_000) -> EvalOutcome:  # noqa: A001
    """Run at most ``fuel`` steps from ``<k0, e>``."""
    s, n = _link(k0), 0
    while True:
        ns, ne = _step(s, e)
        if ns is _FINAL:
            return Terminated(ne, n)
        if ns is _STUCK:
            return Stuck(Configuration(_unlink(s), e), ne, n)
        if n >= fuel:
            return OutOfFuel(Configuration(_unlink(s), e), n)
        s, e = ns, ne
        n += 1


def trace(e: Expr, k0: Sequence[Frame] = ID, fuel: int = 10_000):
    """Yield ``(n, configuration)`` for every configuration visited."""
    s, n = _link(k0), 0
    while True:
        yield n, Configuration(_unlink(s), e)
        if n >= fuel:
            return
        ns, ne = _step(s, e)
        if ns is _FINAL or (ns is _STUCK):
            return
        s, e = ns, ne
        n += 1


def run_steps(c: Configuration, n: int) -> Union[Configuration, Final, Stuck]:
    """Exactly ``n`` steps from ``c`` (fewer if the machine halts first)."""
    s, e = _link(c.stack), c.expr
    for _ in range(n):
        ns, ne = _step(s, e)
        if ns is _FINAL:
            return Final(ne)
        if ns is _STUCK:
            return Stuck(Configuration(_unlink(s), e), ne)
        s, e = ns, ne
    return Configuration(_unlink(s), e)


# ---------------------------------------------------------------------------
# all rules, one by one (for checking determinism)
# ---------------------------------------------------------------------------

def _top(c):
    return c.stack[0] if c.stack else None


def _rules() -> list[tuple[str, Callable]]:
    def pop(c):
        return c.stack[1:]

    def r_let(c):
        e = c.expr
        if isinstance(e, Let):
            return Configuration((LetF(e.var, e.body),) + c.stack, e.bound)

    def r_cons(c):
        e = c.expr
        if isinstance(e, Cons) and not is_value(e):
            return Configuration((ConsTail(e.head),) + c.stack, e.tail)

    def r_apply(c):
        e = c.expr
        if isinstance(e, Apply):
            return Configuration((AppFn(e.args),) + c.stack, e.fn)

    def r_add(c):
        e = c.expr
        if isinstance(e, Add):
            return Configuration((AddL(e.rhs),) + c.stack, e.lhs)

    def r_letrec(c):
        e = c.expr
        if isinstance(e, Letrec):
            clo = Fun(e.name, e.params, e.fbody)
            return Configuration(c.stack, instantiate(e.cont, {e.self_id: clo}))

    def r_case(c):
        e = c.expr
        if isinstance(e, Case):
            return Configuration((CaseF(e.pat, e.then, e.else_),) + c.stack, e.scrutinee)

    def r_fn_done(c):
        f = _top(c)
        if isinstance(f, AppFn) and f.args and is_value(c.expr):
            return Configuration((AppArg(c.expr, (), f.args[1:]),) + pop(c), f.args[0])

    def r_call0(c):
        f, v = _top(c), c.expr
        if isinstance(f, AppFn) and not f.args and isinstance(v, Fun) and not v.params:
            return Configuration(pop(c), instantiate(v.body, {v.self_id: v}))

    def r_arg_next(c):
        f = _top(c)
        if isinstance(f, AppArg) and f.rest and is_value(c.expr):
            return Configuration((AppArg(f.fn, f.done + (c.expr,), f.rest[1:]),) + pop(c), f.rest[0])

    def r_call(c):
        f = _top(c)
        if (isinstance(f, AppArg) and not f.rest and is_value(c.expr) and isinstance(f.fn, Fun)
                and len(f.fn.params) == len(f.done) + 1):
            env = {f.fn.self_id: f.fn, **{Var(x): v for x, v in zip(f.fn.params, f.done + (c.expr,))}}
            return Configuration(pop(c), instantiate(f.fn.body, env))

    def r_let_val(c):
        f = _top(c)
        if isinstance(f, LetF) and is_value(c.expr):
            return Configuration(pop(c), instantiate(f.body, {Var(f.var): c.expr}))

    def r_tail_done(c):
        f = _top(c)
        if isinstance(f, ConsTail) and is_value(c.expr):
            return Configuration((ConsHead(c.expr),) + pop(c), f.head)

    def r_head_done(c):
        f = _top(c)
        if isinstance(f, ConsHead) and is_value(c.expr):
            return Configuration(pop(c), Cons(c.expr, f.tail))

    def r_case_match(c):
        f = _top(c)
        if isinstance(f, CaseF) and is_value(c.expr) and is_match(f.pat, c.expr):
            return Configuration(pop(c), instantiate(f.then, match_bindings(f.pat, c.expr)))

    def r_case_else(c):
        f = _top(c)
        if isinstance(f, CaseF) and is_value(c.expr) and not is_match(f.pat, c.expr):
            return Configuration(pop(c), f.else_)

    def r_add_lhs_done(c):
        f = _top(c)
        if isinstance(f, AddL) and is_value(c.expr):
            return Configuration((AddR(c.expr),) + pop(c), f.rhs)

    def r_add_lits(c):
        f = _top(c)
        if isinstance(f, AddR) and isinstance(f.lhs, Lit) and isinstance(c.expr, Lit):
            return Configuration(pop(c), Lit(f.lhs.value + c.expr.value))

    return [(fn.__name__[2:], fn) for fn in (
        r_let, r_cons, r_apply, r_add, r_letrec, r_case, r_fn_done, r_call0, r_arg_next,
        r_call, r_let_val, r_tail_done, r_head_done, r_case_match, r_case_else,
        r_add_lhs_done, r_add_lits)]


RULES = _rules()


def successors(c: Configuration) -> list[tuple[str, Configuration]]:
    """Every rule instance applicable to ``c``, as ``(rule name, result)``."""
    out = []
    for name, rule in RULES:
        nxt = rule(c)
        if nxt is not None:
            out.append((name, nxt))
    return out


# ---------------------------------------------------------------------------
# termination relation
# ---------------------------------------------------------------------------
# Written against the inference rules directly and using the nameless
# substitution, so it shares no code path with _step.

def _premise(k: tuple, e: Expr):
    """The unique premise configuration of a rule concluding ``<k, e>``, or
    None when no rule has that conclusion."""
    value = is_value(e)
    if not value:
        match e:
            case Case(scrutinee=e1, pat=p, then=e2, else_=e3):
                return (CaseF(p, e2, e3),) + k, e1
            case Add(lhs=e1, rhs=e2):
                return (AddL(e2),) + k, e1
            case Let(var=x, bound=e1, body=e2):
                return (LetF(x, e2),) + k, e1
            case Cons(head=e1, tail=e2):
                return (ConsTail(e1),) + k, e2
            case Letrec(name=f, params=xs, fbody=e0, cont=body):
                sigma = update_many(id_subst(), [(FunId(f, len(xs)), Fun(f, xs, e0))])
                return k, apply_subst(body, sigma)
            case Apply(fn=fn, args=args):
                return (AppFn(args),) + k, fn
        return None
    if not k:
        return None
    frame, rest = k[0], k[1:]
    match frame:
        case CaseF(pat=p, then=e2, else_=e3):
            if is_match(p, e):
                return rest, apply_subst(e2, match_subst(p, e))
            return rest, e3
        case ConsTail(head=e1):
            return (ConsHead(e),) + rest, e1
        case ConsHead(tail=v2):
            return rest, Cons(e, v2)
        case AddL(rhs=e2):
            return (AddR(e),) + rest, e2
        case AddR(lhs=Lit(value=l1)) if isinstance(e, Lit):
            return rest, Lit(l1 + e.value)
        case LetF(var=x, body=e2):
            return rest, apply_subst(e2, update_many(id_subst(), [(Var(x), e)]))
        case AppFn(args=()):
            if isinstance(e, Fun) and not e.params:
                return rest, apply_subst(e.body, update_many(id_subst(), [(e.self_id, e)]))
            return None
        case AppFn(args=args):
            return (AppArg(e, (), args[1:]),) + rest, args[0]
        case AppArg(fn=fn, done=done, rest=()):
            vals = done + (e,)
            if isinstance(fn, Fun) and len(fn.params) == len(vals):
                binds = [(fn.self_id, fn)] + list(zip(binder_names(fn.params), vals))
                return rest, apply_subst(fn.body, update_many(id_subst(), binds))
            return None
        case AppArg(fn=fn, done=done, rest=more):
            return (AppArg(fn, done + (e,), more[1:]),) + rest, more[0]
    return None


_DERIVATIONS: dict = {}


def termination_height(c: Configuration, bound: int) -> Optional[int]:
    """The ``n <= bound`` with ``<K, e> ⇓ n`` derivable, or None.

    At most one rule concludes any configuration, so ``n`` is unique when it
    exists.  Results are memoised per configuration.
    """
    hit = _DERIVATIONS.get(c)
    if hit is not None:
        n, searched = hit
        if n is not None:
            return n if n <= bound else None
        if bound <= searched:
            return None
    k, e, n = c.stack, c.expr, 0
    found = None
    while True:
        if not k and is_value(e):
            found = n
            break
        if n >= bound:
            break
        prem = _premise(k, e)
        if prem is None:
            # nothing concludes this configuration: no derivation of any height
            bound = float("inf")
            break
        k, e = prem
        n += 1
    if len(_DERIVATIONS) > 50_000:
        _DERIVATIONS.clear()
    _DERIVATIONS[c] = (found, bound)
    return found


def terminates_k(c: Configuration, n: int) -> bool:
    """``<K, e> ⇓ n``."""
    if n < 0:
        return False
    return termination_height(c, n) == n


# ---------------------------------------------------------------------------
# divergence certificates
# ---------------------------------------------------------------------------

def _same(a, b) -> bool:
    # a, b: (linked stack, expr)
    if a[1] is not b[1] and type(a[1]) is not type(b[1]):
        return False
    if _depth(a[0]) != _depth(b[0]):
        return False
    try:
        return a[1] == b[1] and a[0] == b[0]
    except RecursionError:
        return False


def detect_divergence(c: Configuration, fuel: int = 10_000) -> Union[Terminated, Diverges, Unknown]:
    """Run ``c`` for at most ``fuel`` steps looking for an exact repeat
    (Brent's cycle finding).  A repeat proves divergence because the step
    relation is deterministic."""
    s, e = _link(c.stack), c.expr
    n = 0
    saved, saved_n = (s, e), 0
    power = lam = 1
    while True:
        ns, ne = _step(s, e)
        if ns is _FINAL:
            return Terminated(ne, n)
        if ns is _STUCK:
            return Unknown(f"stuck: {ne}", Stuck(Configuration(_unlink(s), e), ne, n))
        if n >= fuel:
            return Unknown("fuel exhausted without a repeated configuration",
                           OutOfFuel(Configuration(_unlink(s), e), n))
        s, e = ns, ne
        n += 1
        if _same((s, e), saved):
            return Diverges(saved_n, n - saved_n, Configuration(_unlink(saved[0]), saved[1]))
        if power == lam:
            saved, saved_n = (s, e), n
            power *= 2
            lam = 0
        lam += 1


def validate_cycle(c: Configuration, prefix: int, period: int) -> bool:
    """Replay a divergence certificate from ``c``."""
    if period <= 0:
        return False
    start = run_steps(c, prefix)
    if not isinstance(start, Configuration):
        return False
    again = run_steps(start, period)
    return isinstance(again, Configuration) and again == start
