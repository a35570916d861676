from hypothesis import given

from mlq.syntax import (
    NIL, CFun, Cons, Idx, Lit, Var, alpha_eq, free_names, from_core, from_json, is_value,
    mk_list, to_core, to_json,
)
from mlq.surface import parse_expr as P

from conftest import closed_exprs, open_exprs


def test_is_value():
    assert is_value(Lit(5))
    assert not is_value(P("let X = 1 in X"))
    assert not is_value(P("[1 | (1+1)]"))
    assert is_value(P("[1 | []]"))
    assert is_value(P("fun f/1(X) -> apply f/1(X)"))


def test_free_names():
    assert free_names(P("X + (fun f/1(Y) -> Y + Z)")) == {Var("X"), Var("Z")}
    assert free_names(P("fun f/0() -> apply f/0()")) == frozenset()
    assert free_names(P("letrec f/1(X) = apply f/1(X) in apply f/1(2)")) == frozenset()
    assert free_names(P("case [1|[]] of [H|T] then H + Q else T")) == {Var("Q"), Var("T")}


def test_alpha_eq():
    assert alpha_eq(P("fun f/1(X) -> X"), P("fun g/1(Y) -> Y"))
    assert not alpha_eq(P("X"), P("Y"))
    assert alpha_eq(P("let X = 1 in X + Z"), P("let W = 1 in W + Z"))
    assert not alpha_eq(P("let X = 1 in X + Z"), P("let W = 1 in Z + W"))


def test_core_indices():
    c = to_core(P("fun f/1(X) -> X"))
    assert isinstance(c, CFun) and c.body == Idx(2)
    c = to_core(P("fun f/1(X) -> apply f/1(X)"))
    assert c.body.fn == Idx(1)


def test_core_round_trip_keeps_free_names():
    e = P("X + Y")
    assert from_core(to_core(e, [Var("X"), Var("Y")]), [Var("X"), Var("Y")]) == e


def test_mk_list():
    assert mk_list(Lit(1), Lit(2)) == Cons(Lit(1), Cons(Lit(2), NIL))


@given(closed_exprs())
def test_core_round_trip(e):
    assert alpha_eq(from_core(to_core(e)), e)


@given(open_exprs())
def test_core_round_trip_open(ge):
    _, e = ge
    free = sorted(free_names(e), key=str)
    assert alpha_eq(from_core(to_core(e, free), free), e)


@given(closed_exprs())
def test_json_round_trip(e):
    assert from_json(to_json(e)) == e
