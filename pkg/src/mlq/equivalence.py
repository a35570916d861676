"""Bounded checkers for the program equivalences.

Every notion here quantifies over infinitely many stacks, substitutions,
contexts, values or indices.  Each checker walks a deterministic, ordered
list of probes (an enumeration prefix followed by a seeded random tail) and
reports one of three verdicts:

* :class:`ConsistentUpTo` -- no probe separated the two sides;
* :class:`Counterexample` -- the first probe (in probe order) that did;
* :class:`Inconclusive` -- the budget ran out before anything was decided.

A counterexample is sound when the right-hand side is certified to diverge
(a repeated configuration), is stuck, or (for the value-based notions)
produced a mismatching value.  A right-hand side that merely ran out of fuel
only counts when ``Budget.accept_fuel_refutation`` is set.

All checkers are preorders, ``e1 <= e2``.  :func:`check` runs both
directions to decide an equivalence.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import islice, product
from typing import Callable, Iterable, Optional, Union

from .generators import (
    GenSpec, gen_closing_substs, gen_contexts, gen_stacks, gen_values, rng_for,
    sample_context, sample_stack,
)
from .machine import (
    ID, Configuration, Diverges, OutOfFuel, Stuck, Terminated, Unknown, detect_divergence,
    plug_stack, termination_height,
)
from .scoping import closed, closed_value, exp_scoped, subst_scoped
from .substitution import Subst, apply_subst, instantiate
from .syntax import (
    HOLE, Add, Apply, Case, Cons, Expr, Fun, FunId, Hole, Let, Letrec, Lit, Nil, Var,
    alpha_eq, free_names, sorted_names,
)


def run(e: Expr, k: tuple = ID, fuel: int = 10_000):
    """Evaluate with cycle detection, so probes that loop stop early."""
    return detect_divergence(Configuration(k, e), fuel)


class PreconditionError(ValueError):
    """The inputs are outside the domain of the relation (e.g. open terms)."""


@dataclass(frozen=True)
class Budget:
    fuel: int = 10_000
    probe_fuel: int = 50_000
    depth: int = 3
    samples: int = 500
    seed: int = 0
    accept_fuel_refutation: bool = False

    def __post_init__(self):
        for name in ("fuel", "probe_fuel", "depth", "samples"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.probe_fuel < self.fuel:
            raise ValueError("probe_fuel must be at least fuel")

    @property
    def spec(self) -> GenSpec:
        return GenSpec(depth=self.depth, seed=self.seed)

    def to_json(self) -> dict:
        return {"fuel": self.fuel, "probe_fuel": self.probe_fuel, "depth": self.depth,
                "samples": self.samples, "seed": self.seed,
                "accept_fuel_refutation": self.accept_fuel_refutation}


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """Why ``lhs <= rhs`` fails for one probe.

    ``kind`` is ``diverges`` (certified), ``stuck``, ``value_mismatch`` or
    ``out_of_fuel`` (not certified).  ``rhs_start`` is the configuration the
    right-hand outcome was computed from, so a divergence certificate can be
    replayed with :func:`machine.validate_cycle`.
    """
    kind: str
    probe: int
    lhs: object
    rhs: object
    stack: Optional[tuple] = None
    context: Optional[Expr] = None
    closing: Optional[Subst] = None
    rhs_start: Optional[Configuration] = None
    direction: str = "lhs<=rhs"
    detail: str = ""

    @property
    def certified(self) -> bool:
        return self.kind != "out_of_fuel"

    def flipped(self) -> "Witness":
        return _replace(self, direction="rhs<=lhs" if self.direction == "lhs<=rhs" else "lhs<=rhs")

    def to_json(self) -> dict:
        from .surface import pretty, pretty_stack

        out: dict = {"kind": self.kind, "direction": self.direction, "probe": self.probe}
        if self.stack is not None:
            out["stack"] = pretty_stack(self.stack)
        if self.context is not None:
            out["context"] = pretty(self.context)
        if self.closing is not None:
            out["closing"] = {str(k): pretty(v.expr) for k, v in
                              sorted(self.closing.items(), key=lambda kv: str(kv[0]))}
        out["lhs"] = outcome_to_json(self.lhs)
        out["rhs"] = outcome_to_json(self.rhs)
        if self.detail:
            out["detail"] = self.detail
        return out


def _replace(w: Witness, **kw) -> Witness:
    from dataclasses import replace

    return replace(w, **kw)


@dataclass(frozen=True)
class ConsistentUpTo:
    budget: Budget
    note: str = ""
    kind = "consistent"

    def to_json(self) -> dict:
        out = {"verdict": self.kind}
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class Counterexample:
    witness: Witness
    kind = "counterexample"

    def to_json(self) -> dict:
        return {"verdict": self.kind, "witness": self.witness.to_json()}


@dataclass(frozen=True)
class Inconclusive:
    reason: str
    witness: Optional[Witness] = None
    kind = "inconclusive"

    def to_json(self) -> dict:
        out = {"verdict": self.kind, "reason": self.reason}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


Verdict = Union[ConsistentUpTo, Counterexample, Inconclusive]


def outcome_to_json(o) -> dict:
    from .surface import pretty

    if isinstance(o, Terminated):
        return {"outcome": "terminated", "value": pretty(o.value), "steps": o.steps}
    if isinstance(o, OutOfFuel):
        return {"outcome": "out_of_fuel", "steps": o.steps}
    if isinstance(o, Stuck):
        return {"outcome": "stuck", "reason": o.reason, "steps": o.steps}
    if isinstance(o, Diverges):
        return {"outcome": "diverges", "prefix": o.prefix, "period": o.period}
    if isinstance(o, Unknown):
        return outcome_to_json(o.outcome)
    return {"outcome": str(o)}


# ---------------------------------------------------------------------------
# probe plumbing
# ---------------------------------------------------------------------------

def _rhs_failure(c: Configuration, fuel: int):
    """``None`` if ``c`` terminates within ``fuel``; otherwise the kind of
    failure and the outcome."""
    r = detect_divergence(c, fuel)
    if isinstance(r, Terminated):
        return None
    if isinstance(r, Diverges):
        return "diverges", r
    if isinstance(r.outcome, Stuck):
        return "stuck", r.outcome
    return "out_of_fuel", r.outcome


class _Search:
    """Collects the first sound witness; keeps the first unsound one aside."""

    # Fuel-exhausted right sides cost a full probe_fuel run each; after
    # this many the search gives up with an inconclusive verdict.
    exhausted_cap = 8

    def __init__(self, b: Budget):
        self.b = b
        self.pending: Optional[Witness] = None
        self.exhausted = 0
        self.unknown = 0

    def offer(self, w: Witness) -> Optional[Verdict]:
        if w.certified or self.b.accept_fuel_refutation:
            return Counterexample(w)
        if self.pending is None:
            self.pending = w
        self.exhausted += 1
        if self.exhausted >= self.exhausted_cap:
            return Inconclusive(f"right-hand side ran out of probe fuel on {self.exhausted} probes; "
                                "search stopped", self.pending)
        return None

    def finish(self, note: str = "") -> Verdict:
        if self.pending is not None:
            return Inconclusive("right-hand side ran out of probe fuel; no certified witness",
                                self.pending)
        if self.unknown:
            return Inconclusive(f"{self.unknown} probe(s) could not be decided within the budget")
        return ConsistentUpTo(self.b, note)


@lru_cache(maxsize=64)
def probe_stacks(depth: int, samples: int, seed: int) -> tuple:
    """The stacks every stack-quantified checker walks: the first
    ``samples`` enumerated stacks, then ``samples // 5`` random ones."""
    spec = GenSpec(depth=depth, seed=seed)
    head = list(islice(gen_stacks(spec), max(1, samples)))
    rng = rng_for(seed, "stacks")
    tail = [sample_stack(rng, spec, max_len=max(1, depth)) for _ in range(samples // 5)]
    return tuple(head + tail)


def _stacks(b: Budget) -> tuple:
    return probe_stacks(b.depth, b.samples, b.seed)


def _n_directed(b: Budget) -> int:
    return max(4, b.samples // 5)


def directed_stacks(v: Expr, b: Budget) -> list:
    """Stacks aimed at the value ``v``: walk into it with head and tail
    projections and applications (at most ``depth`` frames), and at each
    sub-value add a case frame that accepts exactly its shape."""
    from collections import deque

    from .machine import AppFn, CaseF
    from .syntax import OMEGA, PCons, PVar

    hd = CaseF(PCons(PVar("H"), PVar("T")), Var("H"), OMEGA)
    tl = CaseF(PCons(PVar("H"), PVar("T")), Var("T"), OMEGA)
    limit = _n_directed(b)
    out: list = []
    todo = deque([((), v)])
    while todo and len(out) < limit:
        k, w = todo.popleft()
        if len(k) >= b.depth:
            continue
        p = _shape_pattern(w)
        if p is not None:
            out.append(k + (CaseF(p, Lit(0), OMEGA),))
        if isinstance(w, Cons):
            todo.append((k + (hd,), w.head))
            todo.append((k + (tl,), w.tail))
        elif isinstance(w, Fun):
            for args in arg_tuples(len(w.params), b.depth, b.samples, b.seed)[:4]:
                f = AppFn(args)
                out.append(k + (f,))
                r = run(w, (f,), b.fuel)
                if isinstance(r, Terminated):
                    todo.append((k + (f,), r.value))
    return out[:limit]


def stacks_for(e1: Expr, b: Budget) -> tuple:
    """Probe stacks for a closed left-hand side: the empty stack, stacks
    directed at the value ``e1`` produces, then the shared probe stacks."""
    shared = _stacks(b)
    r = run(e1, ID, b.fuel)
    if not isinstance(r, Terminated):
        return shared
    return tuple(dict.fromkeys((ID,) + tuple(directed_stacks(r.value, b)) + shared))


@lru_cache(maxsize=64)
def _closings(gamma: frozenset, depth: int, seed: int, limit: int) -> tuple:
    return tuple(islice(gen_closing_substs(gamma, GenSpec(depth=depth, seed=seed)), limit))


def _pairs(n_sigma: int, n_stack: int) -> list[tuple[int, int]]:
    """(closing, stack) index pairs: closing ``i`` meets the first
    ``n_stack / (i + 1)`` stacks, ordered by ``(i + 1) * (j + 1)``."""
    out = []
    for i in range(n_sigma):
        for j in range(n_stack // (i + 1)):
            out.append(((i + 1) * (j + 1), i, j))
    out.sort()
    return [(i, j) for _, i, j in out]


def _require_closed(*es: Expr) -> None:
    for e in es:
        if not closed(e):
            names = ", ".join(str(n) for n in sorted_names(free_names(e)))
            raise PreconditionError(f"expression is not closed (free: {names})")


def _require_scoped(gamma, *es: Expr) -> None:
    for e in es:
        if not exp_scoped(gamma, e):
            extra = free_names(e) - frozenset(gamma)
            names = ", ".join(str(n) for n in sorted_names(extra))
            raise PreconditionError(f"expression is not scoped in the given names (extra: {names})")


# ---------------------------------------------------------------------------
# naive behavioural
# ---------------------------------------------------------------------------

def naive_behav_le(e1: Expr, e2: Expr, b: Budget = Budget()) -> Verdict:
    """Whenever ``e1`` evaluates to ``v`` at the empty stack, so must
    ``e2`` (values compared up to renaming of bound names)."""
    _require_closed(e1, e2)
    r1 = detect_divergence(Configuration(ID, e1), b.fuel)
    if isinstance(r1, Diverges):
        return ConsistentUpTo(b, "lhs diverges (certified)")
    if isinstance(r1, Unknown):
        if isinstance(r1.outcome, Stuck):
            return ConsistentUpTo(b, "lhs is stuck")
        return Inconclusive("lhs ran out of fuel")
    start = Configuration(ID, e2)
    r2 = detect_divergence(start, b.probe_fuel)
    s = _Search(b)
    if isinstance(r2, Terminated):
        if alpha_eq(r1.value, r2.value):
            return ConsistentUpTo(b)
        return Counterexample(Witness("value_mismatch", 0, r1, r2, stack=ID, rhs_start=start))
    fail = _rhs_failure(start, b.probe_fuel)
    return s.offer(Witness(fail[0], 0, r1, fail[1], stack=ID, rhs_start=start)) or s.finish()


# ---------------------------------------------------------------------------
# CIU
# ---------------------------------------------------------------------------

def _stack_search(gamma: frozenset, e1: Expr, e2: Expr, b: Budget, exact: bool = False) -> Verdict:
    """Search (closing, stack) probes for a failure of ``e1 <= e2``.

    Both closed sides are run once at the empty stack and then continued
    from their values: by determinism ``<K, e>`` terminates exactly when
    ``e`` reaches a value ``v`` and ``<K, v>`` terminates, and the step
    counts add up.  For the same reason, if the right side already fails at
    the empty stack it fails the same way at every stack, so one probe per
    closing settles it.

    With ``exact`` set, left-side termination is decided by the termination
    relation at index ``b.fuel`` instead of by the machine.
    """
    stacks = _stacks(b)
    if gamma:
        sigmas, _, pairs = _open_probe_plan(gamma, b)
    else:
        sigmas, pairs = (None,), [(0, j) for j in range(len(stacks) + _n_directed(b))]
    s = _Search(b)
    cache: dict = {}
    for p, (i, j) in enumerate(pairs):
        if i not in cache:
            sigma = sigmas[i]
            c1 = e1 if sigma is None else _close(e1, sigma)
            c2 = e2 if sigma is None else _close(e2, sigma)
            r1 = run(c1, ID, b.fuel)
            if not isinstance(r1, Terminated):
                cache[i] = None  # no stack can make the left side terminate
                continue
            r2 = run(c2, ID, b.probe_fuel)
            cache[i] = [sigma, c1, c2, r1, r2, stacks_for(c1, b)]
        entry = cache[i]
        if entry is None or j >= len(entry[5]):
            continue
        sigma, c1, c2, r1, r2, own = entry
        k = own[j]
        if exact:
            m = _lhs_height(k, c1, b.fuel)
            if m is None:
                continue
            lhs = Terminated(run(c1, k, b.fuel).value, m)
        else:
            a = run(r1.value, k, b.fuel - r1.steps) if k else r1
            if not isinstance(a, Terminated):
                continue
            lhs = Terminated(a.value, a.steps + (r1.steps if k else 0))
        start = Configuration(k, c2)
        if isinstance(r2, Terminated):
            c = run(r2.value, k, b.probe_fuel - r2.steps) if k else r2
            if isinstance(c, Terminated):
                continue
            fail = _rhs_failure(start, b.probe_fuel)
            if fail is None:
                continue
        else:
            fail = _rhs_failure(start, b.probe_fuel)
            cache[i] = None  # every other stack fails the same way
        v = s.offer(Witness(fail[0], p, lhs, fail[1], stack=k, closing=sigma, rhs_start=start))
        if v is not None:
            return v
    if all(entry is None for entry in cache.values()) and not s.pending and len(sigmas) == 1:
        return s.finish("lhs does not terminate within fuel, so no stack can make it terminate")
    return s.finish()


def ciu_le(e1: Expr, e2: Expr, b: Budget = Budget()) -> Verdict:
    """``e1 <=ciu e2`` for closed expressions, over the probe stacks."""
    _require_closed(e1, e2)
    return _stack_search(frozenset(), e1, e2, b)


def _close(e: Expr, sigma: Subst) -> Expr:
    env = {k: v.expr for k, v in sigma.items()}
    return instantiate(e, env)


def _open_probe_plan(gamma: frozenset, b: Budget):
    stacks = _stacks(b)
    sigmas = _closings(gamma, b.depth, b.seed, max(1, b.samples))
    # directed stacks come on top of the shared ones
    return sigmas, stacks, _pairs(len(sigmas), len(stacks) + _n_directed(b))


def ciu_le_open(gamma, e1: Expr, e2: Expr, b: Budget = Budget()) -> Verdict:
    """``e1 <=ciu e2`` under ``gamma``: sampled closing substitutions paired
    with probe stacks.  Closing ``i`` meets fewer stacks the later it
    comes."""
    g = frozenset(gamma)
    _require_scoped(g, e1, e2)
    return _stack_search(g, e1, e2, b)


# ---------------------------------------------------------------------------
# logical relations
# ---------------------------------------------------------------------------

def _arg_values(spec: GenSpec) -> tuple:
    """Argument values for probing functions: each literal, nil, one list
    and one function of each arity."""
    vals = list(islice(gen_values(spec), 400))
    out = [Lit(v) for v in spec.literal_pool] + [Nil()]
    conses = [v for v in vals if isinstance(v, Cons)]
    if conses:
        out.append(conses[0])
    for k in range(spec.max_arity + 1):
        fs = [v for v in vals if isinstance(v, Fun) and len(v.params) == k]
        if fs:
            out.append(fs[0])
    return tuple(out)


@lru_cache(maxsize=64)
def arg_tuples(k: int, depth: int, samples: int, seed: int) -> tuple:
    """Closed argument tuples of length ``k`` in diagonal order."""
    vals = _arg_values(GenSpec(depth=depth, seed=seed))
    limit = max(8, samples // 25)
    if k == 0:
        return ((),)
    out = []
    for total in range(k * len(vals)):
        for idx in product(range(len(vals)), repeat=k):
            if sum(idx) == total:
                out.append(tuple(vals[i] for i in idx))
                if len(out) >= limit:
                    return tuple(out)
    return tuple(out)


def _body(fn: Fun, args: tuple) -> Expr:
    env = {fn.self_id: fn}
    for x, v in zip(fn.params, args):
        env[Var(x)] = v
    return instantiate(fn.body, env)


def _index_samples(n: int) -> list[int]:
    if n <= 4:
        return list(range(n))
    return sorted({0, n // 2, n - 1})


def _lhs_height(k: tuple, e: Expr, n: int) -> Optional[int]:
    """``m <= n`` with ``<k, e>`` terminating in exactly ``m`` steps.

    Small bounds use the termination relation directly; larger ones use the
    machine, which agrees with it step for step.
    """
    if n <= 64:
        return termination_height(Configuration(k, e), n)
    r = run(e, k, n)
    return r.steps if isinstance(r, Terminated) else None


def _rhs_terminates(k: tuple, e: Expr, b: Budget) -> Optional[bool]:
    r = detect_divergence(Configuration(k, e), b.probe_fuel)
    if isinstance(r, Terminated):
        return True
    if isinstance(r, Diverges) or isinstance(r.outcome, Stuck):
        return False
    return None


def logrel_val(n: int, v1: Expr, v2: Expr, b: Budget = Budget()) -> bool:
    """Sampled ``(v1, v2) in V_n``.  Only certified failures make it false;
    an undecided probe counts as passing."""
    if isinstance(v1, Lit) and isinstance(v2, Lit):
        return v1.value == v2.value
    if isinstance(v1, Nil) and isinstance(v2, Nil):
        return True
    if isinstance(v1, Cons) and isinstance(v2, Cons):
        return logrel_val(n, v1.head, v2.head, b) and logrel_val(n, v1.tail, v2.tail, b)
    if isinstance(v1, Fun) and isinstance(v2, Fun):
        k = len(v1.params)
        if k != len(v2.params):
            return False
        for m in _index_samples(n):
            # diagonal argument pairs are related at every index
            for args in arg_tuples(k, b.depth, b.samples, b.seed):
                if not logrel_exp(m, _body(v1, args), _body(v2, args), b):
                    return False
        return True
    return False


def logrel_exp(n: int, e1: Expr, e2: Expr, b: Budget = Budget()) -> bool:
    """Sampled ``(e1, e2) in E_n`` over diagonal stack pairs ``(K, K)``,
    which are related at every index by the fundamental property."""
    for k in _stacks(b):
        if _lhs_height(k, e1, n) is not None and _rhs_terminates(k, e2, b) is False:
            return False
    return True


def logrel_stack(n: int, k1: tuple, k2: tuple, b: Budget = Budget()) -> bool:
    """Sampled ``(K1, K2) in K_n`` over diagonal value pairs ``(v, v)``."""
    vals = list(islice(gen_values(b.spec), max(1, b.samples // 10)))
    for v in vals:
        if _lhs_height(k1, v, n) is not None and _rhs_terminates(k2, v, b) is False:
            return False
    return True


def logrel_gamma(n: int, gamma, s1: Subst, s2: Subst, b: Budget = Budget()) -> bool:
    """``(s1, s2) in G^gamma_n``: both close ``gamma`` and agree pointwise."""
    g = frozenset(gamma)
    if not (subst_scoped(g, s1, ()) and subst_scoped(g, s2, ())):
        return False
    return all(logrel_val(n, s1(x).expr, s2(x).expr, b) for x in sorted_names(g))


def logrel_open(gamma, e1: Expr, e2: Expr, b: Budget = Budget(), n: Optional[int] = None) -> bool:
    """Sampled ``(e1, e2) in E^gamma`` at index ``n`` (default: the fuel),
    over diagonal pairs ``(sigma, sigma)`` of closing substitutions."""
    g = frozenset(gamma)
    if not (exp_scoped(g, e1) and exp_scoped(g, e2)):
        return False
    n = b.fuel if n is None else n
    for sigma in _closings(g, b.depth, b.seed, max(1, b.samples // 10)):
        if not logrel_exp(n, _close(e1, sigma), _close(e2, sigma), b):
            return False
    return True


def logrel_le(gamma, e1: Expr, e2: Expr, b: Budget = Budget()) -> Verdict:
    """Verdict form of ``E^gamma`` at index ``b.fuel``: related closing
    pairs ``(sigma, sigma)``, related stacks ``(K, K)``, exact-index
    termination on the left, any termination on the right."""
    g = frozenset(gamma)
    _require_scoped(g, e1, e2)
    return _stack_search(g, e1, e2, b, exact=True)


# ---------------------------------------------------------------------------
# contextual
# ---------------------------------------------------------------------------

def plug_context(c: Expr, e: Expr) -> Expr:
    """Replace the hole of ``c`` by ``e``.  Binders around the hole capture
    free names of ``e``: that is what contexts are for."""
    if isinstance(c, Hole):
        return e
    if isinstance(c, Fun):
        return Fun(c.name, c.params, plug_context(c.body, e))
    if isinstance(c, Cons):
        return Cons(plug_context(c.head, e), plug_context(c.tail, e))
    if isinstance(c, Add):
        return Add(plug_context(c.lhs, e), plug_context(c.rhs, e))
    if isinstance(c, Apply):
        return Apply(plug_context(c.fn, e), tuple(plug_context(a, e) for a in c.args))
    if isinstance(c, Let):
        return Let(c.var, plug_context(c.bound, e), plug_context(c.body, e))
    if isinstance(c, Letrec):
        return Letrec(c.name, c.params, plug_context(c.fbody, e), plug_context(c.cont, e))
    if isinstance(c, Case):
        return Case(plug_context(c.scrutinee, e), c.pat, plug_context(c.then, e),
                    plug_context(c.else_, e))
    return c


@lru_cache(maxsize=4096)
def _hole_scope(c: Expr):
    """Whether ``c`` is closed apart from its hole, and the names bound
    around the hole."""
    return closed(plug_context(c, Lit(0))), _hole_binders(c)


def _hole_binders(c: Expr) -> frozenset:
    from .syntax import contains_hole, pattern_vars

    if isinstance(c, Hole):
        return frozenset()
    if isinstance(c, Fun):
        return frozenset({c.self_id, *(Var(x) for x in c.params)}) | _hole_binders(c.body)
    if isinstance(c, Let):
        if contains_hole(c.body):
            return frozenset({Var(c.var)}) | _hole_binders(c.body)
        return _hole_binders(c.bound)
    if isinstance(c, Letrec):
        fid = FunId(c.name, len(c.params))
        if contains_hole(c.fbody):
            return frozenset({fid, *(Var(x) for x in c.params)}) | _hole_binders(c.fbody)
        return frozenset({fid}) | _hole_binders(c.cont)
    if isinstance(c, Case):
        if contains_hole(c.then):
            return frozenset(pattern_vars(c.pat)) | _hole_binders(c.then)
        sub = c.scrutinee if contains_hole(c.scrutinee) else c.else_
        return _hole_binders(sub)
    for child in _holes_children(c):
        if contains_hole(child):
            return _hole_binders(child)
    return frozenset()


def _holes_children(c: Expr) -> tuple:
    if isinstance(c, Cons):
        return (c.head, c.tail)
    if isinstance(c, Add):
        return (c.lhs, c.rhs)
    if isinstance(c, Apply):
        return (c.fn,) + tuple(c.args)
    return ()


def _closes(c: Expr, needed: frozenset) -> bool:
    ok, bound = _hole_scope(c)
    return ok and needed <= bound


def _binding_context(gamma: frozenset, sigma: Subst) -> Optional[Expr]:
    """``let``/``letrec`` bindings that close ``gamma`` the way ``sigma``
    does, around a hole; None when a function name is mapped to something
    a ``letrec`` cannot bind."""
    ctx: Expr = HOLE
    for x in reversed(sorted_names(gamma)):
        v = sigma(x).expr
        if isinstance(x, Var):
            ctx = Let(x.name, v, ctx)
            continue
        if not (isinstance(v, Fun) and len(v.params) == x.arity):
            return None
        body = v.body
        if v.name != x.name:
            from .substitution import NameImage, Subst as _S

            body = apply_subst(body, _S({v.self_id: NameImage(x)}))
        ctx = Letrec(x.name, v.params, body, ctx)
    return ctx


@lru_cache(maxsize=32)
def _grammar_contexts(depth: int, samples: int, seed: int, binders: tuple) -> tuple:
    spec = GenSpec(depth=depth, seed=seed)
    head = list(islice(gen_contexts(spec, binders), samples))
    rng = rng_for(seed, "contexts")
    tail = [sample_context(rng, spec) for _ in range(samples // 5)]
    return tuple(head + tail)


def ctx_le(gamma, e1: Expr, e2: Expr, b: Budget = Budget(), naive: bool = False) -> Verdict:
    """Bounded ``e1 <=ctx e2`` under ``gamma``.

    Contexts come in two families: first a probe stack wrapped around
    bindings that close ``gamma`` (one per closing/stack pair, in the same
    order the open CIU check uses), then contexts from the context grammar.
    A context that leaves either side open is skipped.

    With ``naive`` set, the check is the naive contextual preorder instead:
    the two programs must reach equal values, not merely both terminate.
    """
    g = frozenset(gamma)
    _require_scoped(g, e1, e2)
    stacks = _stacks(b)
    if g:
        sigmas, _, pairs = _open_probe_plan(g, b)
        binds = [_binding_context(g, s) for s in sigmas]
    else:
        sigmas, binds = (None,), [HOLE]
        pairs = [(0, j) for j in range(len(stacks) + _n_directed(b))]
    own: dict = {}

    def contexts():
        # stack contexts around closing bindings are closed by construction
        for i, j in pairs:
            if binds[i] is None:
                continue
            if i not in own:
                own[i] = stacks_for(e1 if sigmas[i] is None else _close(e1, sigmas[i]), b)
            if j < len(own[i]):
                yield plug_stack(own[i][j], binds[i]), True
        binders = tuple(x.name for x in sorted_names(g) if isinstance(x, Var)) + ("X", "Y", "Z", "W")
        for c in _grammar_contexts(b.depth, b.samples, b.seed, tuple(dict.fromkeys(binders))):
            yield c, False

    needed = free_names(e1) | free_names(e2)
    s = _Search(b)
    for p, (c, known_closed) in enumerate(contexts()):
        if not known_closed and not _closes(c, needed):
            continue
        p1, p2 = plug_context(c, e1), plug_context(c, e2)
        r1 = run(p1, ID, b.fuel)
        if not isinstance(r1, Terminated):
            continue
        start = Configuration(ID, p2)
        if naive:
            r2 = detect_divergence(start, b.probe_fuel)
            if isinstance(r2, Terminated):
                if alpha_eq(r1.value, r2.value):
                    continue
                return Counterexample(Witness("value_mismatch", p, r1, r2, context=c, rhs_start=start))
        fail = _rhs_failure(start, b.probe_fuel)
        if fail is None:
            continue
        v = s.offer(Witness(fail[0], p, r1, fail[1], context=c, rhs_start=start))
        if v is not None:
            return v
    return s.finish()


# ---------------------------------------------------------------------------
# behavioural preorder
# ---------------------------------------------------------------------------

class _Behav:
    """``<=val_n`` with the inner lifting run at the empty stack and cached."""

    def __init__(self, b: Budget):
        self.b = b
        self.memo: dict = {}
        self.undecided = False

    def val(self, n: int, v1: Expr, v2: Expr) -> bool:
        if n == 0:
            return True
        key = (n, v1, v2)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        out = self._val(n, v1, v2)
        self.memo[key] = out
        return out

    def _val(self, n, v1, v2) -> bool:
        if isinstance(v1, Lit) and isinstance(v2, Lit):
            return v1.value == v2.value
        if isinstance(v1, Nil) and isinstance(v2, Nil):
            return True
        if isinstance(v1, Cons) and isinstance(v2, Cons):
            return self.val(n - 1, v1.head, v2.head) and self.val(n - 1, v1.tail, v2.tail)
        if isinstance(v1, Fun) and isinstance(v2, Fun):
            k = len(v1.params)
            if k != len(v2.params):
                return False
            b = self.b
            for args in arg_tuples(k, b.depth, b.samples, b.seed):
                if not self.exp(n - 1, _body(v1, args), _body(v2, args)):
                    return False
            return True
        return False

    def exp(self, n: int, e1: Expr, e2: Expr) -> bool:
        r1 = run(e1, ID, self.b.fuel)
        if not isinstance(r1, Terminated):
            if isinstance(r1, OutOfFuel):
                self.undecided = True
            return True
        r2 = detect_divergence(Configuration(ID, e2), self.b.probe_fuel)
        if isinstance(r2, Terminated):
            return self.val(n, r1.value, r2.value)
        if isinstance(r2, Unknown) and isinstance(r2.outcome, OutOfFuel):
            self.undecided = True
            return True
        return False


def behav_val_le(n: int, v1: Expr, v2: Expr, b: Budget = Budget()) -> bool:
    """``v1 <=val_n v2``, with function arguments sampled."""
    return _Behav(b).val(n, v1, v2)


def behav_le(e1: Expr, e2: Expr, b: Budget = Budget()) -> Verdict:
    """Whenever ``e1`` reaches ``v1`` from a probe stack, ``e2`` must reach
    some ``v2`` from the same stack with ``v1 <=val_n v2`` for every
    ``n <= depth``."""
    _require_closed(e1, e2)
    s = _Search(b)
    r1 = run(e1, ID, b.fuel)
    if not isinstance(r1, Terminated):
        return s.finish("lhs does not terminate within fuel, so no stack can make it terminate")
    r2 = run(e2, ID, b.probe_fuel)
    checker = _Behav(b)
    for j, k in enumerate(stacks_for(e1, b)):
        a = run(r1.value, k, b.fuel - r1.steps) if k else r1
        if not isinstance(a, Terminated):
            continue
        lhs = Terminated(a.value, a.steps + (r1.steps if k else 0))
        c = (run(r2.value, k, b.probe_fuel - r2.steps) if k else r2) if isinstance(r2, Terminated) else None
        start = Configuration(k, e2)
        if not isinstance(c, Terminated):
            fail = _rhs_failure(start, b.probe_fuel)
            if fail is None:
                c = run(e2, k, b.probe_fuel)
            else:
                v = s.offer(Witness(fail[0], j, lhs, fail[1], stack=k, rhs_start=start))
                if v is not None:
                    return v
                continue
        for n in range(b.depth + 1):
            if not checker.val(n, a.value, c.value):
                rhs = Terminated(c.value, c.steps + (r2.steps if k else 0))
                return Counterexample(Witness("value_mismatch", j, lhs, rhs, stack=k, rhs_start=start,
                                              detail=f"values not related at index {n}"))
    if checker.undecided and s.pending is None:
        s.unknown += 1
    return s.finish()


# ---------------------------------------------------------------------------
# discriminator search
# ---------------------------------------------------------------------------

def _omega():
    from .syntax import OMEGA
    return OMEGA


def _shape_pattern(v: Expr):
    from .syntax import PCons, PLit, PNil, PVar

    if isinstance(v, Lit):
        return PLit(v.value)
    if isinstance(v, Nil):
        return PNil()
    if isinstance(v, Cons):
        return PCons(PVar("H"), PVar("T"))
    return None


def discriminator_search(e1: Expr, e2: Expr, b: Budget = Budget()) -> Verdict:
    """Build separating stacks from the shapes of the values both sides
    produce: a case frame when the shapes differ, head and tail projections
    into lists, and applications to sampled arguments for functions.
    Stacks grow to at most ``depth`` frames."""
    from .machine import AppFn, CaseF
    from .syntax import PCons, PVar

    _require_closed(e1, e2)
    r1 = detect_divergence(Configuration(ID, e1), b.fuel)
    if not isinstance(r1, Terminated):
        if isinstance(r1, Diverges):
            return Inconclusive("lhs diverges; there is no value to discriminate")
        if isinstance(r1.outcome, Stuck):
            return Inconclusive("lhs is stuck; there is no value to discriminate")
        return Inconclusive("lhs ran out of fuel")
    s = _Search(b)
    counter = [0]
    omega, zero = _omega(), Lit(0)
    head = CaseF(PCons(PVar("H"), PVar("T")), Var("H"), omega)
    tail = CaseF(PCons(PVar("H"), PVar("T")), Var("T"), omega)

    def probe(k: tuple):
        """Run both sides at ``k``: ('ok', lhs, rhs), ('skip',) or a verdict."""
        p = counter[0]
        counter[0] += 1
        a = run(e1, k, b.fuel)
        if not isinstance(a, Terminated):
            return ("skip",)
        start = Configuration(k, e2)
        fail = _rhs_failure(start, b.probe_fuel)
        if fail is None:
            return ("ok", a, run(e2, k, b.probe_fuel))
        v = s.offer(Witness(fail[0], p, a, fail[1], stack=k, rhs_start=start))
        return ("verdict", v) if v is not None else ("skip",)

    def go(k: tuple, v1: Expr, v2: Expr) -> Optional[Verdict]:
        room = b.depth - len(k)
        if room <= 0:
            return None
        p1, p2 = _shape_pattern(v1), _shape_pattern(v2)
        candidates = []
        if p1 is not None and not _matches(p1, v2):
            candidates.append(CaseF(p1, zero, omega))
        if p2 is not None and not _matches(p2, v1):
            candidates.append(CaseF(p2, omega, zero))
        if isinstance(v1, Fun) and not isinstance(v2, Fun):
            candidates += [AppFn(args) for args in arg_tuples(len(v1.params), b.depth, b.samples, b.seed)]
        if isinstance(v1, Fun) and isinstance(v2, Fun) and len(v1.params) != len(v2.params):
            candidates += [AppFn(args) for args in arg_tuples(len(v1.params), b.depth, b.samples, b.seed)]
        for f in candidates:
            r = probe(k + (f,))
            if r[0] == "verdict":
                return r[1]
        if isinstance(v1, Cons) and isinstance(v2, Cons):
            for proj in (head, tail):
                r = probe(k + (proj,))
                if r[0] == "verdict":
                    return r[1]
                if r[0] == "ok" and isinstance(r[2], Terminated):
                    out = go(k + (proj,), r[1].value, r[2].value)
                    if out is not None:
                        return out
        if isinstance(v1, Fun) and isinstance(v2, Fun) and len(v1.params) == len(v2.params):
            for args in arg_tuples(len(v1.params), b.depth, b.samples, b.seed):
                f = AppFn(args)
                r = probe(k + (f,))
                if r[0] == "verdict":
                    return r[1]
                if r[0] == "ok" and isinstance(r[2], Terminated):
                    out = go(k + (f,), r[1].value, r[2].value)
                    if out is not None:
                        return out
        return None

    r = probe(ID)
    if r[0] == "verdict":
        return r[1]
    if r[0] == "ok" and isinstance(r[2], Terminated):
        out = go(ID, r[1].value, r[2].value)
        if out is not None:
            return out
    return s.finish()


def _matches(p, v) -> bool:
    from .substitution import is_match

    return is_match(p, v)


# ---------------------------------------------------------------------------
# one entry point
# ---------------------------------------------------------------------------

METHODS = ("naive", "ciu", "logrel", "ctx", "behav", "discriminator")
CLOSED_ONLY = ("naive", "behav", "discriminator")


def preorder(method: str, e1: Expr, e2: Expr, b: Budget = Budget(), gamma=frozenset(),
             naive_ctx: bool = False) -> Verdict:
    g = frozenset(gamma)
    if method not in METHODS:
        raise PreconditionError(f"unknown method {method!r}")
    if method in CLOSED_ONLY:
        if g:
            _require_scoped(g, e1, e2)
            raise PreconditionError(f"method {method} needs closed expressions (got a non-empty gamma)")
        return {"naive": naive_behav_le, "behav": behav_le,
                "discriminator": discriminator_search}[method](e1, e2, b)
    if method == "ciu":
        return ciu_le_open(g, e1, e2, b)
    if method == "logrel":
        return logrel_le(g, e1, e2, b)
    return ctx_le(g, e1, e2, b, naive=naive_ctx)


def check(method: str, e1: Expr, e2: Expr, b: Budget = Budget(), gamma=frozenset(),
          symmetric: bool = True, naive_ctx: bool = False) -> Verdict:
    """Equivalence (both preorders) or, with ``symmetric`` false, the
    preorder ``e1 <= e2``.  A counterexample from the first direction wins;
    then one from the second; otherwise an inconclusive direction makes the
    whole verdict inconclusive."""
    fwd = preorder(method, e1, e2, b, gamma, naive_ctx)
    if isinstance(fwd, Counterexample) or not symmetric:
        return fwd
    bwd = preorder(method, e2, e1, b, gamma, naive_ctx)
    if isinstance(bwd, Counterexample):
        return Counterexample(bwd.witness.flipped())
    if isinstance(fwd, Inconclusive):
        return fwd
    if isinstance(bwd, Inconclusive):
        w = bwd.witness.flipped() if bwd.witness is not None else None
        return Inconclusive(bwd.reason + " (rhs<=lhs)", w)
    notes = "; ".join(n for n in (fwd.note, bwd.note and bwd.note + " (rhs<=lhs)") if n)
    return ConsistentUpTo(b, notes)
