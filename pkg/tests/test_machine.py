from hypothesis import given, strategies as st

from mlq.machine import (
    ID, AddL, AddR, ConsTail, Configuration, Diverges, Final, OutOfFuel, Stuck, Terminated,
    Unknown, detect_divergence, eval, frame_closed, plug_frame, plug_stack, run_steps, step,
    terminates_k, termination_height, validate_cycle,
)
from mlq.surface import parse_expr as P, parse_framestack as K
from mlq.syntax import OMEGA, Add, Lit

import lemmas
from conftest import seeds


def C(src, k=ID):
    return Configuration(k, P(src))


def test_step_addition():
    assert step(C("1 + 2")) == Configuration((AddL(Lit(2)),), Lit(1))
    assert step(Configuration((AddL(Lit(2)),), Lit(1))) == Configuration((AddR(Lit(1)),), Lit(2))
    assert step(Configuration((AddR(Lit(1)),), Lit(2))) == Configuration(ID, Lit(3))
    assert step(C("3")) == Final(Lit(3))


def test_cons_evaluates_tail_first():
    assert step(C("[1 | 1 + 1]")) == Configuration((ConsTail(Lit(1)),), P("1 + 1"))


def test_value_cons_is_final():
    assert step(C("[1 | 2]")) == Final(P("[1|2]"))


def test_apply_non_function_sticks():
    out = eval(P("apply 5(1)"))
    assert isinstance(out, Stuck) and out.steps > 0
    assert isinstance(eval(P("1 + []")), Stuck)
    assert isinstance(eval(P("apply fun f/1(X) -> X(1, 2)")), Stuck)


def test_eval_counts():
    assert eval(P("1 + 2"), ID, 100) == Terminated(Lit(3), 3)
    assert eval(P("let X = 41 in X + 1"), ID, 100) == Terminated(Lit(42), 5)
    assert isinstance(eval(OMEGA, ID, 50), OutOfFuel)


def test_eval_recursion():
    src = "letrec f/1(N) = case N of 0 then 0 else 1 + apply f/1(N + -1) in apply f/1(3)"
    out = eval(P(src))
    assert isinstance(out, Terminated) and out.value == Lit(3)


def test_case_binds_pattern():
    out = eval(P("case [1|[2|[]]] of [H|T] then T else 0"))
    assert out.value == P("[2|[]]")
    assert eval(P("case 3 of 4 then 0 else 7")).value == Lit(7)


def test_termination_relation():
    assert terminates_k(C("5"), 0)
    assert terminates_k(C("1 + 2"), 3)
    assert not terminates_k(C("1 + 2"), 2)
    assert not terminates_k(C("1 + 2"), 4)
    assert termination_height(Configuration(ID, OMEGA), 1000) is None
    assert not any(terminates_k(Configuration(ID, OMEGA), n) for n in range(0, 1001, 7))


def test_divergence_certificate():
    c = Configuration(ID, OMEGA)
    d = detect_divergence(c)
    assert isinstance(d, Diverges) and d.period == 2
    assert validate_cycle(c, d.prefix, d.period)
    assert not validate_cycle(C("1 + 2"), 0, 1)
    assert detect_divergence(C("1 + 2")) == Terminated(Lit(3), 3)


def test_deep_recursion_is_unknown():
    src = "letrec f/1(N) = apply f/1(N + 1) in apply f/1(0)"
    out = detect_divergence(C(src), fuel=500)
    assert isinstance(out, Unknown) and isinstance(out.outcome, OutOfFuel)


def test_plugging():
    assert plug_frame(AddL(Lit(2)), Lit(1)) == Add(Lit(1), Lit(2))
    assert plug_stack(K("let X = □ in X ; □ + 1"), Lit(4)) == P("(let X = 4 in X) + 1")


def test_frame_closed():
    (f,) = K("let X = □ in X + Y")
    assert not frame_closed(f)
    (f,) = K("case □ of [H|T] then H else 0")
    assert frame_closed(f)


def test_stack_applies_outermost_last():
    k = K("□ + 1 ; case □ of 3 then 10 else 20")
    assert eval(Lit(2), k) == Terminated(Lit(10), 3)


def test_run_steps():
    assert run_steps(C("1 + 2"), 3) == Configuration(ID, Lit(3))
    assert run_steps(C("1 + 2"), 9) == Final(Lit(3))


@given(seeds)
def test_deterministic_and_closed(seed):
    assert lemmas.deterministic_and_closed(lemmas.config(seed))


@given(seeds)
def test_terminations_coincide(seed):
    assert lemmas.terminations_coincide(lemmas.config(seed), 120)


@given(seeds)
def test_frame_lemmas(seed):
    f, k, e = lemmas.frame_instance(seed)
    assert lemmas.remove_frame(f, k, e)
    assert lemmas.add_frame(f, k, e)
    assert lemmas.extend_stack(lemmas.config(seed), k)


@given(st.integers(0, 40))
def test_countdown_steps_grow(n):
    src = f"letrec f/1(N) = case N of 0 then 0 else apply f/1(N + -1) in apply f/1({n})"
    a = eval(P(src))
    b = eval(P(src.replace(f"({n})", f"({n + 1})")))
    assert b.steps > a.steps
