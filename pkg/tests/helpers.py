"""Shared fixtures-in-spirit: corpus paths, sidecar parsing, grammar
checkers, and random AST generators used by several test modules."""

from __future__ import annotations

import pathlib
from random import Random

from algst.syntax import (
    Abs,
    AliasDecl,
    App,
    Base,
    BinOp,
    Branch,
    Const,
    Ctor,
    DataDecl,
    Def,
    Dual,
    EPair,
    EVar,
    EndTerm,
    EndWait,
    Forall,
    Fun,
    If,
    In,
    Kind,
    LetPair,
    LetUnit,
    Lit,
    Match,
    Neg,
    Out,
    Pair,
    ProtoApp,
    ProtocolDecl,
    Rec,
    SigDecl,
    TAbs,
    TApp,
    TAG_DUAL,
    TAG_IN,
    TAG_NEG,
    TAG_OUT,
    TAG_VAR,
    Type,
    Unit,
    Var,
    alpha_equal,
    alpha_equal_expr,
)

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"


def corpus_files(pattern: str) -> list[pathlib.Path]:
    files = sorted(CORPUS.glob(pattern))
    assert files, f"no corpus files match {pattern}"
    return files


def read_expect(path: pathlib.Path) -> dict[str, str]:
    out = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if line and "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def is_nf(t: Type) -> bool:
    """Normal-form grammar: double reversal never survives, prefixes carry
    direction themselves so their payload is never reversal-topped, and
    duality sits only on variables."""

    stack = [t]
    while stack:
        node = stack.pop()
        tag = node.tag
        if tag == TAG_DUAL and node.body.tag != TAG_VAR:
            return False
        if tag == TAG_NEG and node.body.tag == TAG_NEG:
            return False
        if tag in (TAG_IN, TAG_OUT) and node.payload.tag == TAG_NEG:
            return False
        stack.extend(_type_children(node))
    return True


def _type_children(t: Type):
    tag = t.tag
    if tag in (TAG_IN, TAG_OUT):
        return (t.payload, t.cont)
    if tag in (TAG_DUAL, TAG_NEG):
        return (t.body,)
    if hasattr(t, "args"):
        return t.args
    if hasattr(t, "dom"):
        return (t.dom, t.cod)
    if hasattr(t, "fst"):
        return (t.fst, t.snd)
    if hasattr(t, "body") and isinstance(getattr(t, "body", None), Type):
        return (t.body,)
    return ()


# ---------------------------------------------------------------------------
# Random syntactic ASTs (printable, not necessarily well kinded or typed)

_TYPE_NAMES = ("Int", "Bool", "String", "Char", "Stream", "P0", "Maybe")
_VARS = ("a", "b", "c", "s", "t")


def gen_type_ast(rng: Random, depth: int = 4) -> Type:
    r = rng.random()
    if depth <= 0 or r < 0.25:
        leaf = rng.random()
        if leaf < 0.3:
            # The parser leaves every uppercase name as an application and
            # lets resolution decide what it is, so raw trees never hold Base.
            return ProtoApp(rng.choice(_TYPE_NAMES[:4]), ())
        if leaf < 0.5:
            return Var(rng.choice(_VARS))
        if leaf < 0.6:
            return Unit()
        if leaf < 0.8:
            return EndWait() if rng.random() < 0.5 else EndTerm()
        return ProtoApp(rng.choice(_TYPE_NAMES[4:]), ())
    d = depth - 1
    if r < 0.37:
        return (In if rng.random() < 0.5 else Out)(
            gen_type_ast(rng, d), gen_type_ast(rng, d)
        )
    if r < 0.49:
        return Fun(gen_type_ast(rng, d), gen_type_ast(rng, d))
    if r < 0.58:
        return Pair(gen_type_ast(rng, d), gen_type_ast(rng, d))
    if r < 0.68:
        return Forall(
            rng.choice(_VARS), rng.choice((Kind.S, Kind.T, Kind.P)), gen_type_ast(rng, d)
        )
    if r < 0.78:
        return Dual(gen_type_ast(rng, d))
    if r < 0.88:
        return Neg(gen_type_ast(rng, d))
    return ProtoApp(
        rng.choice(_TYPE_NAMES[4:]),
        tuple(gen_type_ast(rng, d - 1) for _ in range(rng.randint(1, 2))),
    )


_EVARS = ("x", "y", "z", "f", "g", "c")
_CTORS = ("Con", "Add", "Next")
_OPS = ("+", "-", "*", "==", "<", ">")


def gen_expr_ast(rng: Random, depth: int = 4):
    r = rng.random()
    if depth <= 0 or r < 0.2:
        leaf = rng.random()
        if leaf < 0.4:
            return EVar(rng.choice(_EVARS))
        if leaf < 0.7:
            return Lit(rng.randrange(100))
        if leaf < 0.8:
            return Const("unit")
        return Ctor(rng.choice(_CTORS))
    d = depth - 1
    if r < 0.3:
        return Abs(rng.choice(_EVARS), gen_type_ast(rng, 2), gen_expr_ast(rng, d))
    if r < 0.38:
        # constructor application folds into the Ctor node, so heads of
        # application chains must not be bare constructors
        fn = gen_expr_ast(rng, d)
        if isinstance(fn, Ctor):
            return Ctor(fn.name, fn.args + (gen_expr_ast(rng, d),))
        return App(fn, gen_expr_ast(rng, d))
    if r < 0.46:
        fn = gen_expr_ast(rng, d)
        if isinstance(fn, Ctor):
            fn = EVar(rng.choice(_EVARS))
        return TApp(fn, gen_type_ast(rng, 2))
    if r < 0.52:
        return EPair(gen_expr_ast(rng, d), gen_expr_ast(rng, d))
    if r < 0.6:
        # pair binders must be distinct names
        x, y = rng.sample(_EVARS, 2)
        return LetPair(x, y, gen_expr_ast(rng, d), gen_expr_ast(rng, d))
    if r < 0.66:
        return LetUnit(gen_expr_ast(rng, d), gen_expr_ast(rng, d))
    if r < 0.74:
        return If(
            gen_expr_ast(rng, d), gen_expr_ast(rng, d), gen_expr_ast(rng, d)
        )
    if r < 0.82:
        return BinOp(
            rng.choice(_OPS), gen_expr_ast(rng, d), gen_expr_ast(rng, d)
        )
    if r < 0.9:
        arms = []
        for tag in rng.sample(_CTORS, rng.randint(1, 2)):
            binders = tuple(
                rng.sample(_EVARS, rng.randint(0, 2))
            )
            arms.append(Branch(tag, binders, gen_expr_ast(rng, d)))
        return Match(gen_expr_ast(rng, d), arms)
    if r < 0.95:
        return TAbs(rng.choice(_VARS), rng.choice((Kind.S, Kind.T)), gen_expr_ast(rng, d))
    return Rec(
        rng.choice(_EVARS),
        Fun(gen_type_ast(rng, 1), gen_type_ast(rng, 1)),
        Abs(rng.choice(_EVARS), gen_type_ast(rng, 1), gen_expr_ast(rng, d)),
    )


# ---------------------------------------------------------------------------
# Program-level alpha comparison (for parse/pretty round trips)


def same_program(p, q) -> bool:
    if len(p.decls) != len(q.decls):
        return False
    for a, b in zip(p.decls, q.decls):
        if type(a) is not type(b):
            return False
        if isinstance(a, (ProtocolDecl, DataDecl)):
            if a.name != b.name:
                return False
            if isinstance(a, ProtocolDecl) and a.params != b.params:
                return False
            if len(a.ctors) != len(b.ctors):
                return False
            for ca, cb in zip(a.ctors, b.ctors):
                if ca.name != cb.name or len(ca.fields) != len(cb.fields):
                    return False
                if not all(
                    alpha_equal(x, y) for x, y in zip(ca.fields, cb.fields)
                ):
                    return False
        elif isinstance(a, AliasDecl):
            if a.name != b.name or a.params != b.params:
                return False
            if not alpha_equal(a.body, b.body):
                return False
        elif isinstance(a, SigDecl):
            if a.name != b.name or not alpha_equal(a.ty, b.ty):
                return False
        elif isinstance(a, Def):
            if a.name != b.name or a.params != b.params:
                return False
            if not alpha_equal_expr(a.body, b.body):
                return False
        else:
            return False
    return True
