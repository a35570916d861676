import pytest
from hypothesis import given

from mlq.machine import AddL, CaseF, LetF
from mlq.surface import (
    ParseError, parse_context, parse_expr as P, parse_framestack, parse_pattern, pretty,
    pretty_stack,
)
from mlq.syntax import NIL, OMEGA, Add, Apply, Cons, Let, Lit, PCons, PVar, Var, alpha_eq

from conftest import closed_exprs, open_exprs


def test_parse_let():
    assert P("let X = 1 in X + 2") == Let("X", Lit(1), Add(Var("X"), Lit(2)))


def test_parse_omega():
    assert P("apply (fun f/0() -> apply f/0())()") == OMEGA


def test_arity_mismatch():
    with pytest.raises(ParseError):
        P("fun f/2(X) -> X")


def test_addition_left_assoc():
    assert P("1 + 2 + 3") == Add(Add(Lit(1), Lit(2)), Lit(3))


def test_comments_and_lines():
    assert P("% leading\n1 + % trailing\n 2") == Add(Lit(1), Lit(2))


def test_error_position():
    with pytest.raises(ParseError) as ei:
        P("let X = 1\n in X +")
    err = ei.value
    assert (err.line, err.col) == (2, 8)  # just past the end
    assert "expression" in err.expected
    assert set(err.to_json()) == {"line", "col", "expected", "message"}


@pytest.mark.parametrize("src", ["", "1 2", "case 1 of [X|X] then 0 else 1", "foo", "apply f/1(",
                                 "□ + 1"])
def test_rejects(src):
    with pytest.raises(ParseError):
        P(src)


def test_pretty():
    assert pretty(Lit(5)) == "5"
    assert pretty(Cons(Lit(1), NIL)) == "[1|[]]"
    assert pretty(P("1 + (2 + 3)")) == "1 + (2 + 3)"
    assert pretty(P("(let X = 1 in X) + 2")) == "(let X = 1 in X) + 2"
    assert pretty(OMEGA) == "apply (fun f/0() -> apply f/0())()"


def test_patterns():
    assert parse_pattern("[H|T]") == PCons(PVar("H"), PVar("T"))


def test_frames():
    assert parse_framestack("□ + 2") == (AddL(Lit(2)),)
    (f,) = parse_framestack("case □ of 1 then 0 else apply (fun f/0() -> apply f/0())()")
    assert isinstance(f, CaseF) and f.then == Lit(0) and f.else_ == OMEGA
    k = parse_framestack("let X = □ in X ; □ + 1")
    assert k == (LetF("X", Var("X")), AddL(Lit(1)))
    assert pretty_stack(k) == "let X = □ in X ; □ + 1"


def test_frame_needs_evaluation_position():
    with pytest.raises(ParseError):
        parse_framestack("fun f/0() -> □")
    with pytest.raises(ParseError):
        parse_framestack("□ + □")


def test_context():
    c = parse_context("apply f/3(1, □, 3)")
    assert isinstance(c, Apply)
    with pytest.raises(ParseError):
        parse_context("1 + 2")


@given(closed_exprs(depth=4))
def test_round_trip(e):
    s = pretty(e)
    assert alpha_eq(P(s), e)
    assert pretty(P(s)) == s


@given(open_exprs())
def test_round_trip_open(ge):
    _, e = ge
    assert P(pretty(e)) == e
