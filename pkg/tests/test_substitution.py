from hypothesis import given

from mlq.substitution import (
    ExprImage, NameImage, Subst, apply_subst, id_subst, instantiate, is_match, match_bindings,
    match_subst, restrict, update,
)
from mlq.surface import parse_expr as P, parse_pattern as PP
from mlq.syntax import NIL, FunId, Lit, Var, alpha_eq, free_names, pattern_vars

from conftest import closed_exprs, open_exprs, values

X, Y, H, T = Var("X"), Var("Y"), Var("H"), Var("T")


def test_identity_and_update():
    assert id_subst()(X) == NameImage(X)
    assert id_subst()(FunId("f", 3)) == NameImage(FunId("f", 3))
    s = update(id_subst(), X, Lit(5))
    assert s(X) == ExprImage(Lit(5))
    assert s(Y) == NameImage(Y)
    assert update(update(id_subst(), X, Lit(1)), X, Lit(2))(X) == ExprImage(Lit(2))


def test_restrict():
    s = update(id_subst(), X, Lit(5))
    assert restrict(s, {X})(X) == NameImage(X)
    assert restrict(s, {Y})(X) == ExprImage(Lit(5))


def test_apply():
    assert apply_subst(P("X"), update(id_subst(), X, Lit(1))) == Lit(1)
    s = update(update(id_subst(), Y, Lit(2)), X, Lit(9))
    assert alpha_eq(apply_subst(P("fun f/1(X) -> X + Y"), s), P("fun f/1(X) -> X + 2"))


def test_apply_avoids_capture():
    s = update(id_subst(), Y, P("X"))
    out = apply_subst(P("fun f/1(X) -> X + Y"), s)
    assert free_names(out) == {X}
    assert not alpha_eq(out, P("fun f/1(X) -> X + X"))


def test_pattern_vars():
    assert pattern_vars(PP("[X|Y]")) == (X, Y)
    assert pattern_vars(PP("5")) == ()
    assert pattern_vars(PP("[[A|B]|[]]")) == (Var("A"), Var("B"))


def test_matching():
    assert is_match(PP("X"), P("fun f/0() -> 1"))
    assert not is_match(PP("5"), Lit(6))
    assert is_match(PP("[H|T]"), P("[1|[]]"))
    assert not is_match(PP("[H|T]"), NIL)
    assert match_bindings(PP("[H|T]"), P("[1|[]]")) == {H: Lit(1), T: NIL}
    assert match_subst(PP("X"), P("fun f/0() -> 1"))(X) == ExprImage(P("fun f/0() -> 1"))
    assert match_subst(PP("5"), Lit(5)) == id_subst()


@given(closed_exprs(), values())
def test_closed_expressions_are_fixed(e, v):
    assert apply_subst(e, update(id_subst(), X, v)) == e


@given(open_exprs())
def test_identity_is_identity(ge):
    _, e = ge
    assert apply_subst(e, id_subst()) == e


@given(open_exprs(), values())
def test_instantiate_agrees_with_apply(ge, v):
    _, e = ge
    s = Subst({x: ExprImage(v) for x in free_names(e)})
    assert alpha_eq(instantiate(e, {x: v for x in free_names(e)}), apply_subst(e, s))
