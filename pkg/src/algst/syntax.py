"""Abstract syntax for the protocol language.

Three layers share this module: types (with session and protocol
constructors), expressions, and processes, plus the transition labels the
runtime emits. Values are plain dataclasses with identity equality; the
meaningful comparison on types and expressions is alpha-equivalence, provided
here as `alpha_equal` / `alpha_equal_expr`.

Types can be very large (the equivalence benchmark builds session spines with
millions of nodes), so every operation that walks a type of unbounded depth
is written with an explicit work stack rather than recursion.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import ClassVar, Iterator, Optional, Union


@dataclass(slots=True)
class Span:
    """Source location: 1-based line/column plus length in characters."""

    line: int
    col: int
    length: int = 1


# ---------------------------------------------------------------------------
# Kinds


class Kind(enum.IntEnum):
    """Base kinds, linearly ordered S < T < P."""

    S = 0  # session types
    T = 1  # value types (sessions included by subsumption)
    P = 2  # protocol types (everything lifts to P)

    def __str__(self) -> str:
        return self.name


@dataclass(slots=True, frozen=True)
class ArrowKind:
    """First-order kind of a protocol name: P^n -> P."""

    arity: int

    def __str__(self) -> str:
        if self.arity == 0:
            return "P"
        return "->".join(["P"] * (self.arity + 1))


# ---------------------------------------------------------------------------
# Types

TAG_UNIT = 0
TAG_BASE = 1
TAG_VAR = 2
TAG_FUN = 3
TAG_PAIR = 4
TAG_FORALL = 5
TAG_IN = 6
TAG_OUT = 7
TAG_ENDW = 8
TAG_ENDT = 9
TAG_DUAL = 10
TAG_PROTO = 11
TAG_NEG = 12


class Type:
    """Base class for type nodes. Subclasses carry an integer `tag` used by
    the normalization kernels for dispatch without isinstance chains."""

    __slots__ = ()
    tag: ClassVar[int] = -1

    def __repr__(self) -> str:
        if size(self) > 400:
            return f"<{type(self).__name__} ~{size(self)} nodes>"
        from . import pretty

        return pretty.type_str(self)


@dataclass(slots=True, eq=False, repr=False)
class Unit(Type):
    tag: ClassVar[int] = TAG_UNIT
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Base(Type):
    """Opaque nullary type constant of kind T (Int, Char, String, Bool, and
    nominal data types)."""

    tag: ClassVar[int] = TAG_BASE
    name: str = ""
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Var(Type):
    tag: ClassVar[int] = TAG_VAR
    name: str = ""
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Fun(Type):
    tag: ClassVar[int] = TAG_FUN
    dom: Type = None  # type: ignore[assignment]
    cod: Type = None  # type: ignore[assignment]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Pair(Type):
    tag: ClassVar[int] = TAG_PAIR
    fst: Type = None  # type: ignore[assignment]
    snd: Type = None  # type: ignore[assignment]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Forall(Type):
    tag: ClassVar[int] = TAG_FORALL
    var: str = ""
    kind: Kind = Kind.T
    body: Type = None  # type: ignore[assignment]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class In(Type):
    """Receive `?payload.cont`."""

    tag: ClassVar[int] = TAG_IN
    payload: Type = None  # type: ignore[assignment]
    cont: Type = None  # type: ignore[assignment]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Out(Type):
    """Send `!payload.cont`."""

    tag: ClassVar[int] = TAG_OUT
    payload: Type = None  # type: ignore[assignment]
    cont: Type = None  # type: ignore[assignment]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class EndWait(Type):
    """Closing end `EndW`: the side that waits."""

    tag: ClassVar[int] = TAG_ENDW
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class EndTerm(Type):
    """Closing end `EndT`: the side that terminates."""

    tag: ClassVar[int] = TAG_ENDT
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Dual(Type):
    tag: ClassVar[int] = TAG_DUAL
    body: Type = None  # type: ignore[assignment]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class ProtoApp(Type):
    """Saturated application of a declared protocol name."""

    tag: ClassVar[int] = TAG_PROTO
    name: str = ""
    args: tuple[Type, ...] = ()
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Neg(Type):
    """Polarity flip `-body` on a protocol type."""

    tag: ClassVar[int] = TAG_NEG
    body: Type = None  # type: ignore[assignment]
    span: Optional[Span] = None


UNIT = Unit()
END_WAIT = EndWait()
END_TERM = EndTerm()

INT = Base("Int")
CHAR = Base("Char")
STRING = Base("String")
BOOL = Base("Bool")


def _children(t: Type) -> tuple[Type, ...]:
    tag = t.tag
    if tag in (TAG_FUN,):
        return (t.dom, t.cod)
    if tag == TAG_PAIR:
        return (t.fst, t.snd)
    if tag == TAG_FORALL:
        return (t.body,)
    if tag in (TAG_IN, TAG_OUT):
        return (t.payload, t.cont)
    if tag in (TAG_DUAL, TAG_NEG):
        return (t.body,)
    if tag == TAG_PROTO:
        return t.args
    return ()


def size(t: Type) -> int:
    """Node count, every constructor included (Dual and Neg count)."""

    n = 0
    stack = [t]
    while stack:
        node = stack.pop()
        n += 1
        stack.extend(_children(node))
    return n


def free_type_vars(t: Type) -> set[str]:
    """Free type variables; Forall is the only type binder."""

    free: set[str] = set()
    bound: dict[str, int] = {}
    stack: list[object] = [t]
    while stack:
        item = stack.pop()
        if isinstance(item, str):  # scope exit marker
            bound[item] -= 1
            continue
        tag = item.tag
        if tag == TAG_VAR:
            if not bound.get(item.name):
                free.add(item.name)
        elif tag == TAG_FORALL:
            bound[item.var] = bound.get(item.var, 0) + 1
            stack.append(item.var)
            stack.append(item.body)
        else:
            stack.extend(_children(item))
    return free


_fresh_counter = itertools.count(1)


def fresh_name(base: str = "x") -> str:
    """Globally fresh name. The '#' separator cannot appear in source
    identifiers, so fresh names never collide with parsed ones."""

    return f"{base.split('#')[0]}#{next(_fresh_counter)}"


def subst_type(t: Type, mapping: dict[str, Type]) -> Type:
    """Capture-avoiding parallel substitution of type variables.

    Only used on checker-scale types (instantiation, not normalization), so
    plain recursion is fine.
    """

    if not mapping:
        return t

    fv_ranges: set[str] = set()
    for rep in mapping.values():
        fv_ranges |= free_type_vars(rep)

    def go(t: Type, mapping: dict[str, Type]) -> Type:
        tag = t.tag
        if tag == TAG_VAR:
            return mapping.get(t.name, t)
        if tag == TAG_FORALL:
            inner = {k: v for k, v in mapping.items() if k != t.var}
            if not inner:
                return t
            var = t.var
            body = t.body
            if var in fv_ranges:
                var = fresh_name(var)
                body = go(body, {t.var: Var(var)})
            return Forall(var, t.kind, go(body, inner), t.span)
        if tag == TAG_FUN:
            return Fun(go(t.dom, mapping), go(t.cod, mapping), t.span)
        if tag == TAG_PAIR:
            return Pair(go(t.fst, mapping), go(t.snd, mapping), t.span)
        if tag == TAG_IN:
            return In(go(t.payload, mapping), go(t.cont, mapping), t.span)
        if tag == TAG_OUT:
            return Out(go(t.payload, mapping), go(t.cont, mapping), t.span)
        if tag == TAG_DUAL:
            return Dual(go(t.body, mapping), t.span)
        if tag == TAG_NEG:
            return Neg(go(t.body, mapping), t.span)
        if tag == TAG_PROTO:
            return ProtoApp(t.name, tuple(go(a, mapping) for a in t.args), t.span)
        return t

    return go(t, mapping)


def alpha_equal(t: Type, u: Type) -> bool:
    """Alpha-equivalence of types, iterative so million-node session spines
    compare without touching the recursion limit."""

    amap: dict[str, int] = {}
    bmap: dict[str, int] = {}
    next_id = 0
    # Stack items: (t, u) pairs or ('pop', var_a, old_a, var_b, old_b).
    stack: list[tuple] = [(t, u)]
    while stack:
        item = stack.pop()
        if item[0] == "pop":
            _, va, olda, vb, oldb = item
            if olda is None:
                del amap[va]
            else:
                amap[va] = olda
            if oldb is None:
                del bmap[vb]
            else:
                bmap[vb] = oldb
            continue
        a, b = item
        tag = a.tag
        if tag != b.tag:
            return False
        if tag == TAG_VAR:
            if amap.get(a.name) != bmap.get(b.name):
                return False
            if a.name not in amap and a.name != b.name:
                return False
        elif tag == TAG_BASE:
            if a.name != b.name:
                return False
        elif tag == TAG_FORALL:
            if a.kind != b.kind:
                return False
            stack.append(("pop", a.var, amap.get(a.var), b.var, bmap.get(b.var)))
            stack.append((a.body, b.body))
            amap[a.var] = next_id
            bmap[b.var] = next_id
            next_id += 1
            continue
        elif tag == TAG_PROTO:
            if a.name != b.name or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
            continue
        ca = _children(a)
        cb = _children(b)
        if tag != TAG_FORALL:
            stack.extend(zip(ca, cb))
    return True


def canonical_key(t: Type) -> tuple:
    """Hashable alpha-canonical form (binders numbered by binding order).
    Used as a visited-set key by the conversion oracle."""

    def go(t: Type, bound: dict[str, int], depth: int) -> tuple:
        tag = t.tag
        if tag == TAG_VAR:
            if t.name in bound:
                return (TAG_VAR, bound[t.name])
            return (TAG_VAR, t.name)
        if tag == TAG_BASE:
            return (TAG_BASE, t.name)
        if tag == TAG_FORALL:
            inner = dict(bound)
            inner[t.var] = depth
            return (TAG_FORALL, int(t.kind), go(t.body, inner, depth + 1))
        if tag == TAG_PROTO:
            return (TAG_PROTO, t.name) + tuple(go(a, bound, depth) for a in t.args)
        return (tag,) + tuple(go(c, bound, depth) for c in _children(t))

    return go(t, {}, 0)


# ---------------------------------------------------------------------------
# Expressions

CONST_NAMES = ("unit", "fork", "new", "receive", "send", "wait", "terminate")


class Expr:
    __slots__ = ()

    def __repr__(self) -> str:
        from . import pretty

        s = pretty.expr_str(self)
        return s if len(s) < 400 else s[:400] + "..."


@dataclass(slots=True, eq=False, repr=False)
class Const(Expr):
    """One of the built-in constants (everything but select)."""

    name: str
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Select(Expr):
    """The `select C` constant family, indexed by constructor tag."""

    ctor: str
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Lit(Expr):
    value: Union[int, str]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class EVar(Expr):
    name: str
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Abs(Expr):
    """Lambda. `ann` is None for the unannotated form that only checks."""

    var: str
    ann: Optional[Type]
    body: Expr
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Rec(Expr):
    """Recursive binding; annotation must normalize to an arrow and the body
    must be a syntactic value."""

    var: str
    ann: Type
    body: Expr
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class TAbs(Expr):
    var: str
    kind: Kind
    body: Expr
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class App(Expr):
    fn: Expr
    arg: Expr
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class TApp(Expr):
    fn: Expr
    ty: Type
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class EPair(Expr):
    fst: Expr
    snd: Expr
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class LetPair(Expr):
    """let (x, y) = e1 in e2"""

    x: str
    y: str
    rhs: Expr
    body: Expr
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class LetUnit(Expr):
    """let () = e1 in e2"""

    rhs: Expr
    body: Expr
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Branch:
    """One match alternative. Channel matches bind exactly one variable (the
    continuation); data matches bind one variable per constructor field."""

    tag: str
    binders: tuple[str, ...]
    body: Expr
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Match(Expr):
    """match/case; covers both channel branching and data elimination, told
    apart by the scrutinee's type."""

    scrutinee: Expr
    branches: tuple[Branch, ...]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class Ctor(Expr):
    """Saturated data constructor application."""

    name: str
    args: tuple[Expr, ...] = ()
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class If(Expr):
    cond: Expr
    then: Expr
    other: Expr
    span: Optional[Span] = None


@dataclass(slots=True, eq=False, repr=False)
class BinOp(Expr):
    """Primitive integer operation: + - * == < >"""

    op: str
    left: Expr
    right: Expr
    span: Optional[Span] = None


# Constant expressions reused all over the runtime.
UNIT_E = Const("unit")

TRUE = Ctor("True")
FALSE = Ctor("False")


def _const_spine(e: Expr) -> Optional[tuple[Expr, int, list[Expr]]]:
    """Peel TApp/App off `e`; returns (head, n_type_args, value_args) when the
    head is a constant or select, None otherwise. Only canonical spines
    (type applications before value arguments) count."""

    targs = 0
    vargs: list[Expr] = []
    while True:
        if isinstance(e, TApp):
            e = e.fn
            targs += 1
        elif isinstance(e, App):
            if targs:  # type application outside a value argument
                return None
            vargs.append(e.arg)
            e = e.fn
        else:
            break
    if isinstance(e, (Const, Select)):
        vargs.reverse()
        return (e, targs, vargs)
    return None


def is_value(e: Expr) -> bool:
    """Syntactic value grammar; partial applications of the communication
    constants are values until their last argument arrives."""

    if isinstance(e, (EVar, Abs, TAbs, Lit)):
        return True
    if isinstance(e, Rec):
        return True
    if isinstance(e, Const):
        return True
    if isinstance(e, Select):
        return True
    if isinstance(e, EPair):
        return is_value(e.fst) and is_value(e.snd)
    if isinstance(e, Ctor):
        return all(is_value(a) for a in e.args)
    spine = _const_spine(e)
    if spine is None:
        return False
    head, targs, vargs = spine
    if not all(is_value(v) for v in vargs):
        return False
    if isinstance(head, Select):
        return len(vargs) == 0
    name = head.name
    if name == "receive":
        return targs <= 2 and len(vargs) == 0
    if name == "send":
        return targs <= 2 and len(vargs) <= 1
    if name in ("new", "fork", "wait", "terminate"):
        return targs == 0 and len(vargs) == 0
    return False


def free_expr_vars(e: Expr) -> set[str]:
    free: set[str] = set()

    def go(e: Expr, bound: frozenset[str]) -> None:
        if isinstance(e, EVar):
            if e.name not in bound:
                free.add(e.name)
        elif isinstance(e, Abs):
            go(e.body, bound | {e.var})
        elif isinstance(e, Rec):
            go(e.body, bound | {e.var})
        elif isinstance(e, TAbs):
            go(e.body, bound)
        elif isinstance(e, App):
            go(e.fn, bound)
            go(e.arg, bound)
        elif isinstance(e, TApp):
            go(e.fn, bound)
        elif isinstance(e, EPair):
            go(e.fst, bound)
            go(e.snd, bound)
        elif isinstance(e, LetPair):
            go(e.rhs, bound)
            go(e.body, bound | {e.x, e.y})
        elif isinstance(e, LetUnit):
            go(e.rhs, bound)
            go(e.body, bound)
        elif isinstance(e, Match):
            go(e.scrutinee, bound)
            for br in e.branches:
                go(br.body, bound | set(br.binders))
        elif isinstance(e, Ctor):
            for a in e.args:
                go(a, bound)
        elif isinstance(e, If):
            go(e.cond, bound)
            go(e.then, bound)
            go(e.other, bound)
        elif isinstance(e, BinOp):
            go(e.left, bound)
            go(e.right, bound)

    go(e, frozenset())
    return free


def subst_expr(e: Expr, var: str, value: Expr) -> Expr:
    """Capture-avoiding e[value/var]."""

    fv = free_expr_vars(value)

    def rename(e: Expr, old: str) -> tuple[str, Expr]:
        new = fresh_name(old)
        return new, subst_expr(e, old, EVar(new))

    def go(e: Expr) -> Expr:
        if isinstance(e, EVar):
            return value if e.name == var else e
        if isinstance(e, (Const, Select, Lit)):
            return e
        if isinstance(e, Abs):
            if e.var == var:
                return e
            v, body = (e.var, e.body)
            if v in fv:
                v, body = rename(body, v)
            return Abs(v, e.ann, go(body), e.span)
        if isinstance(e, Rec):
            if e.var == var:
                return e
            v, body = (e.var, e.body)
            if v in fv:
                v, body = rename(body, v)
            return Rec(v, e.ann, go(body), e.span)
        if isinstance(e, TAbs):
            return TAbs(e.var, e.kind, go(e.body), e.span)
        if isinstance(e, App):
            return App(go(e.fn), go(e.arg), e.span)
        if isinstance(e, TApp):
            return TApp(go(e.fn), e.ty, e.span)
        if isinstance(e, EPair):
            return EPair(go(e.fst), go(e.snd), e.span)
        if isinstance(e, LetPair):
            rhs = go(e.rhs)
            if var in (e.x, e.y):
                return LetPair(e.x, e.y, rhs, e.body, e.span)
            x, y, body = e.x, e.y, e.body
            if x in fv:
                x, body = rename(body, x)
            if y in fv:
                y, body = rename(body, y)
            return LetPair(x, y, rhs, go(body), e.span)
        if isinstance(e, LetUnit):
            return LetUnit(go(e.rhs), go(e.body), e.span)
        if isinstance(e, Match):
            scrut = go(e.scrutinee)
            branches = []
            for br in e.branches:
                if var in br.binders:
                    branches.append(br)
                    continue
                binders, body = list(br.binders), br.body
                for i, b in enumerate(binders):
                    if b in fv:
                        binders[i], body = rename(body, b)
                branches.append(Branch(br.tag, tuple(binders), go(body), br.span))
            return Match(scrut, tuple(branches), e.span)
        if isinstance(e, Ctor):
            return Ctor(e.name, tuple(go(a) for a in e.args), e.span)
        if isinstance(e, If):
            return If(go(e.cond), go(e.then), go(e.other), e.span)
        if isinstance(e, BinOp):
            return BinOp(e.op, go(e.left), go(e.right), e.span)
        raise TypeError(f"unknown expression node {type(e).__name__}")

    return go(e)


def subst_type_in_expr(e: Expr, var: str, ty: Type) -> Expr:
    """Substitute a type for a type variable throughout an expression
    (annotations included); the runtime uses it to step type applications."""

    mapping = {var: ty}
    fv = free_type_vars(ty)

    def go_ty(t: Optional[Type]) -> Optional[Type]:
        return None if t is None else subst_type(t, mapping)

    def go(e: Expr) -> Expr:
        if isinstance(e, (EVar, Const, Select, Lit)):
            return e
        if isinstance(e, Abs):
            return Abs(e.var, go_ty(e.ann), go(e.body), e.span)
        if isinstance(e, Rec):
            return Rec(e.var, go_ty(e.ann), go(e.body), e.span)
        if isinstance(e, TAbs):
            if e.var == var:
                return e
            v, body = e.var, e.body
            if v in fv:
                nv = fresh_name(v)
                body = subst_type_in_expr(body, v, Var(nv))
                v = nv
            return TAbs(v, e.kind, go(body), e.span)
        if isinstance(e, App):
            return App(go(e.fn), go(e.arg), e.span)
        if isinstance(e, TApp):
            return TApp(go(e.fn), go_ty(e.ty), e.span)
        if isinstance(e, EPair):
            return EPair(go(e.fst), go(e.snd), e.span)
        if isinstance(e, LetPair):
            return LetPair(e.x, e.y, go(e.rhs), go(e.body), e.span)
        if isinstance(e, LetUnit):
            return LetUnit(go(e.rhs), go(e.body), e.span)
        if isinstance(e, Match):
            return Match(
                go(e.scrutinee),
                tuple(Branch(b.tag, b.binders, go(b.body), b.span) for b in e.branches),
                e.span,
            )
        if isinstance(e, Ctor):
            return Ctor(e.name, tuple(go(a) for a in e.args), e.span)
        if isinstance(e, If):
            return If(go(e.cond), go(e.then), go(e.other), e.span)
        if isinstance(e, BinOp):
            return BinOp(e.op, go(e.left), go(e.right), e.span)
        raise TypeError(f"unknown expression node {type(e).__name__}")

    return go(e)


def alpha_equal_expr(a: Expr, b: Expr) -> bool:
    """Alpha-equivalence of expressions (type annotations compared up to
    alpha as well)."""

    def types_eq(t: Optional[Type], u: Optional[Type], tm: dict, um: dict, nid: list[int]) -> bool:
        if (t is None) != (u is None):
            return False
        if t is None:
            return True
        # Reuse the iterative comparator but seed it with the outer term-level
        # type binder maps.
        amap = dict(tm)
        bmap = dict(um)
        next_id = nid[0]
        stack: list[tuple] = [(t, u)]
        while stack:
            item = stack.pop()
            if item[0] == "pop":
                _, va, olda, vb, oldb = item
                if olda is None:
                    amap.pop(va, None)
                else:
                    amap[va] = olda
                if oldb is None:
                    bmap.pop(vb, None)
                else:
                    bmap[vb] = oldb
                continue
            x, y = item
            if x.tag != y.tag:
                return False
            if x.tag == TAG_VAR:
                if amap.get(x.name) != bmap.get(y.name):
                    return False
                if x.name not in amap and x.name != y.name:
                    return False
            elif x.tag == TAG_BASE:
                if x.name != y.name:
                    return False
            elif x.tag == TAG_FORALL:
                if x.kind != y.kind:
                    return False
                stack.append(("pop", x.var, amap.get(x.var), y.var, bmap.get(y.var)))
                stack.append((x.body, y.body))
                amap[x.var] = next_id
                bmap[y.var] = next_id
                next_id += 1
                continue
            elif x.tag == TAG_PROTO:
                if x.name != y.name or len(x.args) != len(y.args):
                    return False
                stack.extend(zip(x.args, y.args))
                continue
            stack.extend(zip(_children(x), _children(y)))
        return True

    nid = [0]

    def go(a: Expr, b: Expr, am: dict, bm: dict, tam: dict, tbm: dict) -> bool:
        if type(a) is not type(b):
            return False
        if isinstance(a, EVar):
            if am.get(a.name) != bm.get(b.name):
                return False
            return a.name in am or a.name == b.name
        if isinstance(a, Const):
            return a.name == b.name
        if isinstance(a, Select):
            return a.ctor == b.ctor
        if isinstance(a, Lit):
            return a.value == b.value and type(a.value) is type(b.value)
        if isinstance(a, Abs):
            if not types_eq(a.ann, b.ann, tam, tbm, nid):
                return False
            i = nid[0]
            nid[0] += 1
            return go(a.body, b.body, {**am, a.var: i}, {**bm, b.var: i}, tam, tbm)
        if isinstance(a, Rec):
            if not types_eq(a.ann, b.ann, tam, tbm, nid):
                return False
            i = nid[0]
            nid[0] += 1
            return go(a.body, b.body, {**am, a.var: i}, {**bm, b.var: i}, tam, tbm)
        if isinstance(a, TAbs):
            if a.kind != b.kind:
                return False
            i = nid[0]
            nid[0] += 1
            return go(a.body, b.body, am, bm, {**tam, a.var: i}, {**tbm, b.var: i})
        if isinstance(a, App):
            return go(a.fn, b.fn, am, bm, tam, tbm) and go(a.arg, b.arg, am, bm, tam, tbm)
        if isinstance(a, TApp):
            return go(a.fn, b.fn, am, bm, tam, tbm) and types_eq(a.ty, b.ty, tam, tbm, nid)
        if isinstance(a, EPair):
            return go(a.fst, b.fst, am, bm, tam, tbm) and go(a.snd, b.snd, am, bm, tam, tbm)
        if isinstance(a, LetPair):
            if not go(a.rhs, b.rhs, am, bm, tam, tbm):
                return False
            i, j = nid[0], nid[0] + 1
            nid[0] += 2
            return go(
                a.body, b.body,
                {**am, a.x: i, a.y: j}, {**bm, b.x: i, b.y: j}, tam, tbm,
            )
        if isinstance(a, LetUnit):
            return go(a.rhs, b.rhs, am, bm, tam, tbm) and go(a.body, b.body, am, bm, tam, tbm)
        if isinstance(a, Match):
            if not go(a.scrutinee, b.scrutinee, am, bm, tam, tbm):
                return False
            if len(a.branches) != len(b.branches):
                return False
            for x, y in zip(a.branches, b.branches):
                if x.tag != y.tag or len(x.binders) != len(y.binders):
                    return False
                am2, bm2 = dict(am), dict(bm)
                for xv, yv in zip(x.binders, y.binders):
                    am2[xv] = bm2[yv] = nid[0]
                    nid[0] += 1
                if not go(x.body, y.body, am2, bm2, tam, tbm):
                    return False
            return True
        if isinstance(a, Ctor):
            if a.name != b.name or len(a.args) != len(b.args):
                return False
            return all(go(x, y, am, bm, tam, tbm) for x, y in zip(a.args, b.args))
        if isinstance(a, If):
            return (
                go(a.cond, b.cond, am, bm, tam, tbm)
                and go(a.then, b.then, am, bm, tam, tbm)
                and go(a.other, b.other, am, bm, tam, tbm)
            )
        if isinstance(a, BinOp):
            return (
                a.op == b.op
                and go(a.left, b.left, am, bm, tam, tbm)
                and go(a.right, b.right, am, bm, tam, tbm)
            )
        raise TypeError(f"unknown expression node {type(a).__name__}")

    return go(a, b, {}, {}, {}, {})


# ---------------------------------------------------------------------------
# Declarations


@dataclass(slots=True, eq=False)
class CtorDecl:
    name: str
    fields: tuple[Type, ...]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False)
class ProtocolDecl:
    """`protocol P a b = C1 T ... | C2 ...`; constructors become the tags
    offered on channels of type `!P a b. _` and matched on `?P a b. _`."""

    name: str
    params: tuple[str, ...]
    ctors: tuple[CtorDecl, ...]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False)
class DataDecl:
    """`data D = C1 T ... | ...`: an ordinary value type with constructors,
    eliminated by match."""

    name: str
    ctors: tuple[CtorDecl, ...]
    span: Optional[Span] = None


@dataclass(slots=True, eq=False)
class AliasDecl:
    """`type N a b = T`, expanded syntactically wherever N is applied."""

    name: str
    params: tuple[str, ...]
    body: Type
    span: Optional[Span] = None


@dataclass(slots=True, eq=False)
class SigDecl:
    name: str
    ty: Type
    span: Optional[Span] = None


@dataclass(slots=True, eq=False)
class Def:
    """`name p [a] q = body`. Params are (is_type, name) in order; their
    annotations come from the signature when the definition is elaborated."""

    name: str
    params: tuple[tuple[bool, str], ...]
    body: Expr
    span: Optional[Span] = None


Decl = Union[ProtocolDecl, DataDecl, AliasDecl, SigDecl, Def]


@dataclass(slots=True, eq=False)
class Program:
    decls: list  # of Decl, in source order


# ---------------------------------------------------------------------------
# Processes


class Proc:
    __slots__ = ()

    def __repr__(self) -> str:
        from . import pretty

        s = pretty.proc_str(self)
        return s if len(s) < 400 else s[:400] + "..."


@dataclass(slots=True, eq=False, repr=False)
class Thread(Proc):
    expr: Expr


@dataclass(slots=True, eq=False, repr=False)
class Par(Proc):
    left: Proc
    right: Proc


@dataclass(slots=True, eq=False, repr=False)
class New(Proc):
    """Channel restriction binding both endpoints. `ann` records the session
    type chosen at creation, advanced as the session runs; the typing harness
    relies on it."""

    x: str
    y: str
    ann: Optional[Type]
    body: Proc


def threads(p: Proc) -> Iterator[Thread]:
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Thread):
            yield q
        elif isinstance(q, Par):
            stack.append(q.right)
            stack.append(q.left)
        else:
            stack.append(q.body)


# ---------------------------------------------------------------------------
# Transition labels


class Label:
    __slots__ = ()

    def render(self) -> str:
        raise NotImplementedError


@dataclass(slots=True, frozen=True)
class LBeta(Label):
    def render(self) -> str:
        return "beta"


@dataclass(slots=True, frozen=True)
class LTau(Label):
    def render(self) -> str:
        return "tau"


@dataclass(slots=True, eq=False)
class LFork(Label):
    value: Expr

    def render(self) -> str:
        return "fork"


@dataclass(slots=True, eq=False)
class LNew(Label):
    x: str
    y: str
    ann: Optional[Type]

    def render(self) -> str:
        return f"new({self.x},{self.y})"


@dataclass(slots=True, eq=False)
class LRecvV(Label):
    chan: str
    value: Expr

    def render(self) -> str:
        return f"{self.chan}?v"


@dataclass(slots=True, eq=False)
class LSendV(Label):
    chan: str
    value: Expr

    def render(self) -> str:
        return f"{self.chan}!v"


@dataclass(slots=True, frozen=True)
class LRecvC(Label):
    chan: str
    ctor: str

    def render(self) -> str:
        return f"{self.chan}?{self.ctor}"


@dataclass(slots=True, frozen=True)
class LSendC(Label):
    chan: str
    ctor: str

    def render(self) -> str:
        return f"{self.chan}!{self.ctor}"


@dataclass(slots=True, frozen=True)
class LClose(Label):
    """Waiting side of session close (x@)."""

    chan: str

    def render(self) -> str:
        return f"{self.chan}@"


@dataclass(slots=True, frozen=True)
class LTerm(Label):
    """Terminating side of session close (x checkmark)."""

    chan: str

    def render(self) -> str:
        return f"{self.chan}."


@dataclass(slots=True, eq=False)
class LScope(Label):
    """Bound-endpoint output (nu a b) chan!sent used during scope extrusion."""

    a: str
    b: str
    chan: str
    sent: str

    def render(self) -> str:
        return f"(nu {self.a} {self.b}){self.chan}!{self.sent}"


@dataclass(slots=True, eq=False)
class LParPair(Label):
    left: Label
    right: Label

    def render(self) -> str:
        return f"{self.left.render()} | {self.right.render()}"
