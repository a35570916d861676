from hypothesis import given

from mlq.scoping import closed, exp_scoped, preserves, subst_scoped, val_scoped
from mlq.substitution import ExprImage, NameImage, Subst, id_subst, update
from mlq.surface import parse_expr as P
from mlq.syntax import FunId, Lit, Var, free_names

from conftest import open_exprs

X, Y = Var("X"), Var("Y")


def test_expression_scoping():
    assert exp_scoped({X}, P("X"))
    assert not exp_scoped(set(), P("X"))
    assert exp_scoped(set(), P("fun f/1(X) -> X + (apply f/1(X))"))
    assert exp_scoped(set(), P("let X = 1 in X + X"))
    assert exp_scoped({FunId("f", 1)}, P("apply f/1(2)"))
    assert not exp_scoped({FunId("f", 2)}, P("apply f/1(2)"))
    assert exp_scoped(set(), P("case [1|[]] of [H|T] then H else 0"))
    assert not exp_scoped(set(), P("case [1|[]] of [H|T] then H else T"))
    assert exp_scoped(set(), P("letrec f/1(X) = apply f/1(X) in apply f/1(2)"))


def test_value_scoping():
    assert val_scoped({X}, P("[X|[]]"))
    assert not val_scoped({X}, P("X + 1"))


def test_subst_scoping():
    s = update(id_subst(), X, Lit(5))
    assert subst_scoped(set(), Subst({X: ExprImage(Lit(5))}), set())
    assert subst_scoped({X}, s, set())
    named = Subst({X: NameImage(Y)})
    assert not subst_scoped({X}, named, set())
    assert subst_scoped({X}, named, {Y})


def test_preserves():
    assert preserves(set(), update(id_subst(), X, Lit(5)))
    assert preserves({X}, id_subst())
    assert not preserves({X}, update(id_subst(), X, Lit(5)))


@given(open_exprs())
def test_scoped_iff_free_names_included(ge):
    gamma, e = ge
    assert exp_scoped(gamma, e)
    assert exp_scoped(free_names(e), e)
    assert closed(e) == (not free_names(e))
    for x in free_names(e):
        assert not exp_scoped(free_names(e) - {x}, e)
