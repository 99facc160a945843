from random import Random

from algst.syntax import (
    Abs,
    App,
    Base,
    Dual,
    EVar,
    EndTerm,
    EndWait,
    Forall,
    Fun,
    In,
    Kind,
    LNew,
    LParPair,
    LRecvV,
    LScope,
    LSendC,
    Lit,
    Neg,
    Out,
    ProtoApp,
    Var,
    alpha_equal,
    alpha_equal_expr,
    canonical_key,
    free_expr_vars,
    free_type_vars,
    size,
    subst_expr,
    subst_type,
)
from helpers import gen_type_ast


def test_size_counts_every_node():
    t = Out(Neg(Base("Int")), Dual(EndWait()))
    assert size(t) == 5
    assert size(Var("a")) == 1


def test_kind_order():
    assert Kind.S < Kind.T < Kind.P


def test_free_type_vars():
    t = Forall("a", Kind.S, In(Var("b"), Var("a")))
    assert free_type_vars(t) == {"b"}


def test_subst_type_is_parallel():
    # a and b swap simultaneously; sequential substitution would collapse
    # both to the same variable.
    t = Fun(Var("a"), Var("b"))
    got = subst_type(t, {"a": Var("b"), "b": Var("a")})
    assert alpha_equal(got, Fun(Var("b"), Var("a")))


def test_subst_type_avoids_capture():
    t = Forall("a", Kind.T, Fun(Var("a"), Var("b")))
    got = subst_type(t, {"b": Var("a")})
    assert got.var != "a"
    assert alpha_equal(got, Forall("c", Kind.T, Fun(Var("c"), Var("a"))))


def test_alpha_equal_binders():
    f = Forall("a", Kind.S, Dual(Var("a")))
    g = Forall("z", Kind.S, Dual(Var("z")))
    assert alpha_equal(f, g)
    assert not alpha_equal(f, Forall("a", Kind.T, Dual(Var("a"))))


def test_alpha_equal_distinguishes_ends():
    assert not alpha_equal(EndWait(), EndTerm())


def test_canonical_key_matches_alpha_equality():
    rng = Random(11)
    types = [gen_type_ast(rng, 4) for _ in range(80)]
    for t in types:
        for u in types:
            assert (canonical_key(t) == canonical_key(u)) == alpha_equal(t, u)


def test_expr_substitution_and_free_vars():
    body = App(EVar("f"), EVar("x"))
    e = Abs("x", Base("Int"), body)
    assert free_expr_vars(e) == {"f"}
    got = subst_expr(e, "f", Abs("y", Base("Int"), EVar("y")))
    assert free_expr_vars(got) == set()
    # substitution under the binder must not touch the bound x
    assert alpha_equal_expr(got.body.arg, EVar("x"))


def test_alpha_equal_expr_renames_binders():
    a = Abs("x", None, App(EVar("x"), Lit(1)))
    b = Abs("w", None, App(EVar("w"), Lit(1)))
    assert alpha_equal_expr(a, b)
    assert not alpha_equal_expr(a, Abs("w", None, App(EVar("w"), Lit(2))))


def test_labels_render():
    assert LNew("x", "y", EndWait()).render() == "new(x,y)"
    assert LSendC("c", "Add").render() == "c!Add"
    pair = LParPair(LScope("a", "b", "c", EVar("a")), LRecvV("d", EVar("a")))
    assert "nu a b" in pair.render() and "|" in pair.render()
