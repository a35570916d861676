import itertools

from hypothesis import given

from mlq.generators import (
    GenSpec, check_side_conditions, corpus, gen_closing_substs, gen_contexts, gen_exprs,
    gen_patterns, gen_stacks, gen_values, load_manifest, rng_for, sample_context, sample_expr,
    sample_pair, sample_stack,
)
from mlq.machine import AddL, frames_closed
from mlq.scoping import closed, exp_scoped, subst_scoped, val_scoped
from mlq.surface import parse_context, parse_framestack, pretty
from mlq.syntax import (
    NIL, Add, Apply, Case, Cons, Fun, FunId, Let, Letrec, Lit, Var, contains_hole, is_linear,
)

from conftest import seeds

X = Var("X")
SMALL = GenSpec(depth=1)


def take(it, n):
    return list(itertools.islice(it, n))


def test_values_depth0():
    assert list(gen_values(GenSpec(depth=0))) == [Lit(n) for n in GenSpec().literal_pool] + [NIL]


def test_values_depth1():
    vs = list(gen_values(SMALL))
    assert Cons(Lit(0), NIL) in vs
    assert all(val_scoped((), v) for v in vs)
    assert len(vs) == len(set(vs))


def test_stacks_depth1():
    ks = take(gen_stacks(SMALL), 400)
    assert (AddL(Lit(0)),) in ks
    assert parse_framestack("case □ of 0 then 0 else apply (fun f/0() -> apply f/0())()") \
        in [k[:1] for k in ks]
    assert all(frames_closed(k) for k in ks)


def test_closing_substs_depth0():
    subs = list(gen_closing_substs({X}, GenSpec(depth=0)))
    assert len(subs) == 7
    assert all(subst_scoped({X}, s, ()) for s in subs)


def test_contexts_depth1():
    cs = take(gen_contexts(SMALL), 2000)
    assert parse_context("let X = □ in X") in cs
    assert all(contains_hole(c) == 1 for c in cs)


def test_exprs_cover_constructors():
    kinds = {type(e) for e in take(gen_exprs((), GenSpec(depth=2)), 20000)}
    assert {Lit, Cons, Add, Apply, Fun, Let, Letrec, Case} <= kinds
    kinds = {type(e) for e in take(gen_exprs((X, FunId("f", 1)), GenSpec(depth=2)), 20000)}
    assert {Var, FunId} <= kinds


def test_exprs_scoped():
    gamma = (X, FunId("f", 1))
    assert all(exp_scoped(gamma, e) for e in take(gen_exprs(gamma, GenSpec(depth=2)), 3000))


def test_patterns_linear():
    assert all(is_linear(p) for p in take(gen_patterns(GenSpec(depth=2)), 500))


def test_enumeration_deterministic():
    a = [pretty(e) for e in take(gen_exprs((), GenSpec(depth=2)), 500)]
    b = [pretty(e) for e in take(gen_exprs((), GenSpec(depth=2)), 500)]
    assert a == b


def test_sampling_deterministic():
    a = [pretty(sample_expr(rng_for(7, "x"), (), 3)) for _ in range(3)]
    b = [pretty(sample_expr(rng_for(7, "x"), (), 3)) for _ in range(3)]
    assert a == b


@given(seeds)
def test_samples_well_formed(seed):
    rng = rng_for(seed)
    assert closed(sample_expr(rng, (), 3))
    assert exp_scoped({X}, sample_expr(rng, (X,), 3))
    assert frames_closed(sample_stack(rng))
    assert contains_hole(sample_context(rng)) == 1
    a, b = sample_pair(rng)
    assert closed(a) and closed(b)


def test_manifest_entries():
    names = {e.name for e in load_manifest()}
    assert {"beta1", "beta2", "beta3", "add-comm", "seq", "fun-pair", "lit-neq",
            "lit-vs-list", "head-neq", "tail-neq"} <= names
    for e in load_manifest():
        assert exp_scoped(e.gamma, e.lhs) and exp_scoped(e.gamma, e.rhs), e.name
        assert not check_side_conditions(e), e.name


def test_fun_pair_expectations():
    (e,) = [e for e in load_manifest() if e.name == "fun-pair"]
    assert e.expected_for("naive") == "counterexample"
    assert e.expected_for("ciu") == "consistent"
    assert e.expected_for("behav") == "consistent"


def test_corpus_includes_schema_instances():
    shipped = len(load_manifest())
    assert len(corpus()) > shipped
    assert len(corpus(generated=False)) == shipped
