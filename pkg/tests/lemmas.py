"""Lemma instances as predicates, plus seeded instance builders.

Each predicate returns True when the instance satisfies the property (an
unmet premise counts as satisfied).  Shared by the unit tests and the
acceptance run.
"""
import random

from mlq.machine import (
    Configuration, Final, Stuck, Terminated, config_closed, eval, frame_closed, plug_frame,
    run_steps, step, successors, terminates_k, trace,
)
from mlq.scoping import exp_scoped, preserves, subst_scoped, val_scoped
from mlq.substitution import ExprImage, NameImage, Subst, apply_subst, id_subst, restrict, update
from mlq.generators import (
    GenSpec, rng_for, sample_expr, sample_frame, sample_stack, sample_value,
)
from mlq.syntax import Cons, FunId, Lit, Var, alpha_eq, free_names, is_value

SPEC = GenSpec()
NAMES = (Var("X"), Var("Y"), Var("Z"), FunId("f", 1))


# -- instances

def subset(rng: random.Random, pool=NAMES) -> frozenset:
    return frozenset(x for x in pool if rng.random() < 0.5)


def value_in(rng: random.Random, delta, depth: int = 2):
    """A value scoped in ``delta``."""
    r = rng.random()
    if delta and r < 0.3:
        return rng.choice(sorted(delta, key=str))
    if depth > 0 and r < 0.45:
        return Cons(value_in(rng, delta, depth - 1), value_in(rng, delta, depth - 1))
    return sample_value(rng, depth)


def subst_into(rng: random.Random, gamma, delta) -> Subst:
    """A substitution with ``subst_scoped(gamma, σ, delta)``."""
    s = id_subst()
    for x in sorted(gamma, key=str):
        s = update(s, x, value_in(rng, delta))
    return s


def config(seed: int, max_skip: int = 12):
    """A closed configuration: a sampled stack and expression, run a few steps."""
    rng = rng_for(seed, "config")
    c = Configuration(sample_stack(rng), sample_expr(rng, (), rng.randint(1, 3)))
    c2 = run_steps(c, rng.randint(0, max_skip))
    return c2 if isinstance(c2, Configuration) else c


# -- machine

def deterministic_and_closed(c: Configuration) -> bool:
    succ = successors(c)
    if len(succ) > 1:
        return False
    nxt = step(c)
    if succ:
        return isinstance(nxt, Configuration) and succ[0][1] == nxt and config_closed(nxt)
    return isinstance(nxt, (Final, Stuck))


def terminations_coincide(c: Configuration, bound: int = 200) -> bool:
    out = eval(c.expr, c.stack, bound)
    m = out.steps if isinstance(out, Terminated) else None
    return all(terminates_k(c, n) == (n == m) for n in range(bound + 1))


def remove_frame(f, k, e, fuel: int = 2000) -> bool:
    out = eval(e, (f,) + k, fuel)
    if not isinstance(out, Terminated):
        return True
    return isinstance(eval(plug_frame(f, e), k, fuel + 1), Terminated)


def add_frame(f, k, e, fuel: int = 2000) -> bool:
    if not (frame_closed(f) and not free_names(e)):
        return True
    out = eval(plug_frame(f, e), k, fuel)
    if not isinstance(out, Terminated):
        return True
    return isinstance(eval(e, (f,) + k, fuel), Terminated)


def extend_stack(c: Configuration, extra: tuple, fuel: int = 300) -> bool:
    ext = dict(trace(c.expr, c.stack + extra, fuel))
    for n, c2 in trace(c.expr, c.stack, fuel):
        if ext.get(n) != Configuration(c2.stack + extra, c2.expr):
            return False
    return True


def frame_instance(seed: int):
    rng = rng_for(seed, "frame")
    return sample_frame(rng), sample_stack(rng), sample_expr(rng, (), rng.randint(0, 3))


# -- substitution and scoping

def weakening(gamma, delta, e) -> bool:
    if exp_scoped(gamma, e) and not exp_scoped(gamma | delta, e):
        return False
    return not (val_scoped(gamma, e) and not val_scoped(gamma | delta, e))


def extended_scoping(gamma, sigma, delta, x, v) -> bool:
    if x in gamma or not (val_scoped(delta, v) and subst_scoped(gamma, sigma, delta)):
        return True
    return subst_scoped(gamma | {x}, update(sigma, x, v), delta)


def restricted_scoping(gamma, sigma, delta, xs) -> bool:
    if not subst_scoped(gamma, sigma, delta):
        return True
    return subst_scoped(gamma | xs, restrict(sigma, xs), delta | xs)


def restricted_identity(gamma, sigma, xs) -> bool:
    return not preserves(gamma, sigma) or preserves(gamma | xs, restrict(sigma, xs))


def preserving_is_identity(gamma, sigma, e) -> bool:
    if not (exp_scoped(gamma, e) and preserves(gamma, sigma)):
        return True
    return apply_subst(e, sigma) == e


def closed_untouched(e, sigma) -> bool:
    return bool(free_names(e)) or apply_subst(e, sigma) == e


def subst_scoping(gamma, sigma, delta, e) -> bool:
    if not (exp_scoped(gamma, e) and subst_scoped(gamma, sigma, delta)):
        return True
    return exp_scoped(delta, apply_subst(e, sigma))


def beta_decomposition(gamma, x, e, v, sigma) -> bool:
    """Push a substitution through the let-bound value of a beta step."""
    if not (val_scoped(gamma, v) and subst_scoped(gamma, sigma, frozenset())):
        return True
    lhs = apply_subst(apply_subst(e, restrict(sigma, {x})),
                      Subst({x: ExprImage(apply_subst(v, sigma))}))
    rhs = apply_subst(apply_subst(e, Subst({x: ExprImage(v)})), sigma)
    return alpha_eq(lhs, rhs)


def converse_witness(gamma, e) -> bool:
    if exp_scoped(gamma, e):
        return True
    zero = Subst({x: ExprImage(Lit(0)) for x in gamma})
    return not exp_scoped(frozenset(), apply_subst(e, zero))


def preserving_subst(rng, gamma) -> Subst:
    """Identity on ``gamma``, arbitrary elsewhere."""
    s = id_subst()
    for x in NAMES:
        if x not in gamma and rng.random() < 0.7:
            s = update(s, x, value_in(rng, NAMES))
    return s


def subst_checks(seed: int) -> dict:
    """One instance of every substitution property, keyed by property name."""
    rng = rng_for(seed, "subst")
    gamma, delta, xs = subset(rng), subset(rng), subset(rng)
    e = sample_expr(rng, tuple(sorted(gamma | subset(rng), key=str)), rng.randint(0, 3))
    sigma = subst_into(rng, gamma, delta)
    x = rng.choice(NAMES)
    v = value_in(rng, delta)
    closed_e = sample_expr(rng, (), rng.randint(0, 3))
    any_sigma = subst_into(rng, frozenset(NAMES), frozenset(NAMES))
    bx = Var("W")
    be = sample_expr(rng, tuple(sorted(gamma, key=str)) + (bx,), rng.randint(0, 3))
    bv = value_in(rng, gamma)
    bsigma = subst_into(rng, gamma, frozenset())
    return {
        "weakening": weakening(gamma, delta, e) and weakening(gamma, delta, v),
        "extended": extended_scoping(gamma, sigma, delta, x, v),
        "restricted": restricted_scoping(gamma, sigma, delta, xs),
        "restriction-identity": restricted_identity(gamma, preserving_subst(rng, gamma), xs),
        "preserving-identity": preserving_is_identity(gamma, preserving_subst(rng, gamma), e),
        "closed-untouched": closed_untouched(closed_e, any_sigma),
        "preserves-scoping": subst_scoping(gamma, sigma, delta, e),
        "beta-decomposition": beta_decomposition(gamma, bx, be, bv, bsigma),
        "converse-witness": converse_witness(gamma, e) and converse_witness(
            gamma - {x}, e),
    }
