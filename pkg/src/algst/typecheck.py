"""Bidirectional type checking with leftover contexts.

Typing threads a linear context through each expression: synthesis returns a
type together with the entries it did not consume, and a binder's entry must
be gone by the time its scope closes. Entries of unit, base, function, and
quantified type are unrestricted (used any number of times, dropped freely);
everything else, sessions and pairs and type variables included, is linear.

Function and quantified values may only be duplicable if they capture no
linear values, so wherever such a value is supplied for later use (as an
application argument, pair component, or constructor field) it must type
without consuming linear entries. The one exception is the direct argument
of `fork`, which the runtime applies exactly once.

Checking resolves and normalizes every type annotation in place, so a
program that passed this checker carries resolved annotations the runtime
can trust.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .diagnostics import Diagnostic, DiagnosticSink, FatalDiagnostic
from .kinds import GlobalEnv, check_kind, check_program_kinds, resolve_type
from .normalize import negate, nf_neg, nf_pos, tosession
from .syntax import (
    Abs,
    App,
    Base,
    BinOp,
    Const,
    Ctor,
    Def,
    Dual,
    END_TERM,
    END_WAIT,
    EPair,
    EVar,
    Expr,
    Forall,
    Fun,
    If,
    In,
    Kind,
    LetPair,
    LetUnit,
    Lit,
    Match,
    New,
    Out,
    Pair,
    Par,
    Proc,
    Program,
    ProtoApp,
    Rec,
    Select,
    Span,
    TAbs,
    TApp,
    TAG_BASE,
    TAG_FORALL,
    TAG_FUN,
    TAG_IN,
    TAG_PAIR,
    TAG_PROTO,
    TAG_UNIT,
    Thread,
    Type,
    UNIT,
    Var,
    alpha_equal,
    is_value,
    subst_type,
)

BOOL_T = Base("Bool")
INT_T = Base("Int")
STRING_T = Base("String")

CONST_TYPES: dict[str, Type] = {
    "unit": UNIT,
    "fork": Fun(Fun(UNIT, UNIT), UNIT),
    "new": Forall("a", Kind.S, Pair(Var("a"), Dual(Var("a")))),
    "wait": Fun(END_WAIT, UNIT),
    "terminate": Fun(END_TERM, UNIT),
    "receive": Forall(
        "a", Kind.T, Forall("b", Kind.S, Fun(In(Var("a"), Var("b")), Pair(Var("a"), Var("b"))))
    ),
    "send": Forall(
        "a", Kind.T, Forall("b", Kind.S, Fun(Var("a"), Fun(Out(Var("a"), Var("b")), Var("b"))))
    ),
}


def typeof_const(name: str) -> Type:
    return CONST_TYPES[name]


def typeof_select(ctor: str, env: GlobalEnv) -> Optional[Type]:
    """Type of `select C` for a protocol constructor: quantifiers for the
    protocol parameters and the continuation, then a function from a channel
    about to send the protocol to the channel after this constructor's
    payloads."""

    owner = env.ctor_owner.get(ctor)
    if owner is None or env.ctor_is_data.get(ctor, True):
        return None
    info = env.protocols[owner]
    payloads = info.ctors[ctor]
    beta = "b"
    while beta in info.params:
        beta += "'"
    cont: Type = Var(beta)
    for u in reversed(payloads):
        cont = tosession(nf_pos(u), cont)
    head = ProtoApp(owner, tuple(Var(p) for p in info.params))
    ty: Type = Fun(Out(head, Var(beta)), cont)
    ty = Forall(beta, Kind.S, ty)
    for p in reversed(info.params):
        ty = Forall(p, Kind.P, ty)
    return ty


def unrestricted_type(t: Type) -> bool:
    """Entries of these (normal-form) types may be used many times or not at
    all; they can never hold a channel endpoint."""

    return t.tag in (TAG_UNIT, TAG_BASE, TAG_FUN, TAG_FORALL)


@dataclass(slots=True)
class Entry:
    ty: Type  # always in normal form
    unrestricted: bool


Gamma = dict[str, Entry]


class Checker:
    def __init__(self, env: GlobalEnv, sink: DiagnosticSink) -> None:
        self.env = env
        self.sink = sink
        self.globals: dict[str, Type] = {}

    # -- helpers --------------------------------------------------------

    def fatal(self, code: str, msg: str, span: Optional[Span]) -> None:
        raise FatalDiagnostic(self.sink.error(code, msg, span))

    def resolve_ann(self, raw: Type, delta: dict[str, Kind], span: Optional[Span]) -> Type:
        """Resolve, kind check (as a value type), and normalize an
        annotation; errors are fatal for the current definition."""

        before = len(self.sink.errors())
        ty = resolve_type(raw, self.env, self.sink)
        check_kind(ty, Kind.T, delta, self.env, self.sink)
        if len(self.sink.errors()) > before:
            raise FatalDiagnostic(self.sink.errors()[-1])
        return nf_pos(ty)

    def bind(self, g: Gamma, name: str, ty: Type) -> tuple[Gamma, Optional[Entry]]:
        g2 = dict(g)
        displaced = g.get(name)
        g2[name] = Entry(ty, unrestricted_type(ty))
        return g2, displaced

    def release(
        self, g: Gamma, name: str, displaced: Optional[Entry], span: Optional[Span]
    ) -> Gamma:
        g2 = dict(g)
        ent = g2.pop(name, None)
        if ent is not None and not ent.unrestricted:
            self.fatal(
                "type.linear-unconsumed",
                f"linear variable {name} of type {ent.ty!r} is not consumed",
                span,
            )
        if displaced is not None:
            g2[name] = displaced
        return g2

    def consumed_linear(self, before: Gamma, after: Gamma) -> list[str]:
        return [n for n, e in before.items() if not e.unrestricted and n not in after]

    def supply_check(self, e: Expr, ty: Type, before: Gamma, after: Gamma) -> None:
        """A value being stored or passed along at function or quantified
        type must not have consumed anything linear."""

        if ty.tag in (TAG_FUN, TAG_FORALL):
            used = self.consumed_linear(before, after)
            if used:
                self.fatal(
                    "type.linear-capture",
                    "a value of function type captures linear variable"
                    f"{'s' if len(used) > 1 else ''} {', '.join(sorted(used))}"
                    " but could be used more than once",
                    e.span,
                )

    def lookup_ctor_data(self, name: str) -> Optional[tuple[str, tuple[Type, ...]]]:
        owner = self.env.ctor_owner.get(name)
        if owner is None or not self.env.ctor_is_data.get(name, False):
            return None
        return owner, self.env.datas[owner].ctors[name]

    # -- synthesis -------------------------------------------------------

    def synth(self, e: Expr, g: Gamma, delta: dict[str, Kind]) -> tuple[Type, Gamma]:
        if isinstance(e, EVar):
            ent = g.get(e.name)
            if ent is not None:
                if ent.unrestricted:
                    return ent.ty, g
                g2 = dict(g)
                del g2[e.name]
                return ent.ty, g2
            ty = self.globals.get(e.name)
            if ty is not None:
                return ty, g
            self.fatal(
                "type.unbound",
                f"variable {e.name} is not in scope (never bound, or already consumed)",
                e.span,
            )
        if isinstance(e, Const):
            return typeof_const(e.name), g
        if isinstance(e, Select):
            ty = typeof_select(e.ctor, self.env)
            if ty is None:
                self.fatal(
                    "type.select",
                    f"select needs a protocol constructor, {e.ctor} is not one",
                    e.span,
                )
            return ty, g
        if isinstance(e, Lit):
            return (INT_T if isinstance(e.value, int) else STRING_T), g
        if isinstance(e, Abs):
            if e.ann is None:
                self.fatal(
                    "type.cannot-synth",
                    "unannotated lambda needs an expected type",
                    e.span,
                )
            dom = self.resolve_ann(e.ann, delta, e.span)
            e.ann = dom
            g2, displaced = self.bind(g, e.var, dom)
            body_ty, g3 = self.synth(e.body, g2, delta)
            g4 = self.release(g3, e.var, displaced, e.span)
            return Fun(dom, body_ty), g4
        if isinstance(e, TAbs):
            if not is_value(e.body):
                self.fatal(
                    "type.tabs-value",
                    "the body of a type abstraction must be a value",
                    e.span,
                )
            inner = dict(delta)
            inner[e.var] = e.kind
            body_ty, g2 = self.synth(e.body, g, inner)
            return Forall(e.var, e.kind, body_ty), g2
        if isinstance(e, Rec):
            ann = self.resolve_ann(e.ann, delta, e.span)
            e.ann = ann
            if ann.tag != TAG_FUN:
                self.fatal(
                    "type.rec-annotation",
                    f"rec annotation must be a function type, got {ann!r}",
                    e.span,
                )
            if not is_value(e.body):
                self.fatal("type.rec-value", "the body of rec must be a value", e.span)
            g2, displaced = self.bind(g, e.var, ann)
            g3 = self.check(e.body, ann, g2, delta)
            g4 = self.release(g3, e.var, displaced, e.span)
            used = self.consumed_linear(g, g4)
            if used:
                self.fatal(
                    "type.linear-capture",
                    f"recursive value captures linear variables: {', '.join(sorted(used))}",
                    e.span,
                )
            return ann, g4
        if isinstance(e, App):
            return self.synth_app(e, g, delta)
        if isinstance(e, TApp):
            fn_ty, g2 = self.synth(e.fn, g, delta)
            if fn_ty.tag != TAG_FORALL:
                self.fatal(
                    "type.tapp",
                    f"type application needs a quantified type, got {fn_ty!r}",
                    e.span,
                )
            before = len(self.sink.errors())
            arg = resolve_type(e.ty, self.env, self.sink)
            check_kind(arg, fn_ty.kind, delta, self.env, self.sink)
            if len(self.sink.errors()) > before:
                raise FatalDiagnostic(self.sink.errors()[-1])
            e.ty = arg
            return nf_pos(subst_type(fn_ty.body, {fn_ty.var: arg})), g2
        if isinstance(e, EPair):
            t1, g2 = self.synth(e.fst, g, delta)
            self.supply_check(e.fst, t1, g, g2)
            t2, g3 = self.synth(e.snd, g2, delta)
            self.supply_check(e.snd, t2, g2, g3)
            return Pair(t1, t2), g3
        if isinstance(e, LetPair):
            rhs_ty, g2 = self.synth(e.rhs, g, delta)
            if rhs_ty.tag != TAG_PAIR:
                self.fatal(
                    "type.let-pair",
                    f"pair elimination needs a pair, got {rhs_ty!r}",
                    e.span,
                )
            g3, disp_x = self.bind(g2, e.x, rhs_ty.fst)
            g3, disp_y = self.bind(g3, e.y, rhs_ty.snd)
            body_ty, g4 = self.synth(e.body, g3, delta)
            g5 = self.release(g4, e.y, disp_y, e.span)
            g5 = self.release(g5, e.x, disp_x, e.span)
            return body_ty, g5
        if isinstance(e, LetUnit):
            rhs_ty, g2 = self.synth(e.rhs, g, delta)
            if rhs_ty.tag != TAG_UNIT:
                self.fatal(
                    "type.let-unit",
                    f"unit elimination needs unit, got {rhs_ty!r}",
                    e.span,
                )
            return self.synth(e.body, g2, delta)
        if isinstance(e, Match):
            return self.type_match(e, None, g, delta)
        if isinstance(e, Ctor):
            found = self.lookup_ctor_data(e.name)
            if found is None:
                self.fatal(
                    "type.ctor",
                    f"{e.name} is not a data constructor",
                    e.span,
                )
            owner, fields = found
            if len(fields) != len(e.args):
                self.fatal(
                    "type.ctor-arity",
                    f"{e.name} takes {len(fields)} argument(s), got {len(e.args)}",
                    e.span,
                )
            for arg, fty in zip(e.args, fields):
                fty_nf = nf_pos(fty)
                g2 = self.check(arg, fty_nf, g, delta)
                self.supply_check(arg, fty_nf, g, g2)
                g = g2
            return Base(owner), g
        if isinstance(e, If):
            gc = self.check(e.cond, BOOL_T, g, delta)
            then_ty, gt = self.synth(e.then, gc, delta)
            ge = self.check(e.other, then_ty, gc, delta)
            self.match_leftovers(gt, ge, e.span)
            return then_ty, gt
        if isinstance(e, BinOp):
            g2 = self.check(e.left, INT_T, g, delta)
            g3 = self.check(e.right, INT_T, g2, delta)
            return (BOOL_T if e.op in ("==", "<", ">") else INT_T), g3
        raise TypeError(f"unknown expression node {type(e).__name__}")

    def synth_app(self, e: App, g: Gamma, delta: dict[str, Kind]) -> tuple[Type, Gamma]:
        fn_ty, g2 = self.synth(e.fn, g, delta)
        if fn_ty.tag != TAG_FUN:
            self.fatal(
                "type.app",
                f"application needs a function, got {fn_ty!r}",
                e.fn.span or e.span,
            )
        g3 = self.check(e.arg, fn_ty.dom, g2, delta)
        if not (isinstance(e.fn, Const) and e.fn.name == "fork"):
            self.supply_check(e.arg, fn_ty.dom, g2, g3)
        return fn_ty.cod, g3

    def match_leftovers(self, a: Gamma, b: Gamma, span: Optional[Span]) -> None:
        if set(a) != set(b):
            only_a = set(a) - set(b)
            only_b = set(b) - set(a)
            parts = []
            if only_b:
                parts.append(f"consumed in one branch only: {', '.join(sorted(only_b))}")
            if only_a:
                parts.append(f"consumed in another branch only: {', '.join(sorted(only_a))}")
            self.fatal("type.branch-mismatch", "; ".join(parts), span)
        for name, ent in a.items():
            other = b[name]
            if ent.ty is not other.ty and not alpha_equal(ent.ty, other.ty):
                self.fatal(
                    "type.branch-mismatch",
                    f"{name} ends with different types across branches:"
                    f" {ent.ty!r} versus {other.ty!r}",
                    span,
                )

    def type_match(
        self, e: Match, want: Optional[Type], g: Gamma, delta: dict[str, Kind]
    ) -> tuple[Type, Gamma]:
        scrut_ty, g2 = self.synth(e.scrutinee, g, delta)
        if scrut_ty.tag == TAG_IN and scrut_ty.payload.tag == TAG_PROTO:
            return self.type_match_channel(e, scrut_ty, want, g2, delta)
        if scrut_ty.tag == TAG_BASE and scrut_ty.name in self.env.datas:
            return self.type_match_data(e, scrut_ty.name, want, g2, delta)
        self.fatal(
            "type.match-scrutinee",
            f"match needs a receiving channel or a data value, got {scrut_ty!r}",
            e.scrutinee.span or e.span,
        )

    def type_match_channel(
        self,
        e: Match,
        scrut_ty: Type,
        want: Optional[Type],
        g: Gamma,
        delta: dict[str, Kind],
    ) -> tuple[Type, Gamma]:
        proto = scrut_ty.payload
        info = self.env.protocols.get(proto.name)
        if info is None:
            self.fatal("type.match-scrutinee", f"unknown protocol {proto.name}", e.span)
        inst = dict(zip(info.params, proto.args))
        declared = set(info.ctors)
        branch_tags = {b.tag for b in e.branches}
        if branch_tags != declared:
            missing = ", ".join(sorted(declared - branch_tags))
            extra = ", ".join(sorted(branch_tags - declared))
            parts = []
            if missing:
                parts.append(f"missing: {missing}")
            if extra:
                parts.append(f"not in protocol {proto.name}: {extra}")
            self.fatal("type.match-branches", "; ".join(parts), e.span)
        result: Optional[Type] = want
        out: Optional[Gamma] = None
        for b in e.branches:
            if len(b.binders) != 1:
                self.fatal(
                    "type.match-binders",
                    f"channel branch {b.tag} binds the continuation, exactly one name",
                    b.span,
                )
            cont_ty: Type = scrut_ty.cont
            for payload in reversed(info.ctors[b.tag]):
                step = nf_pos(subst_type(payload, inst))
                cont_ty = tosession(negate(step), cont_ty)
            g2, disp = self.bind(g, b.binders[0], cont_ty)
            if result is None:
                bt, g3 = self.synth(b.body, g2, delta)
                result = bt
            else:
                g3 = self.check(b.body, result, g2, delta)
            g3 = self.release(g3, b.binders[0], disp, b.span)
            if out is None:
                out = g3
            else:
                self.match_leftovers(out, g3, b.span)
        return result, out

    def type_match_data(
        self,
        e: Match,
        data_name: str,
        want: Optional[Type],
        g: Gamma,
        delta: dict[str, Kind],
    ) -> tuple[Type, Gamma]:
        info = self.env.datas[data_name]
        declared = set(info.ctors)
        branch_tags = {b.tag for b in e.branches}
        if branch_tags != declared:
            missing = ", ".join(sorted(declared - branch_tags))
            extra = ", ".join(sorted(branch_tags - declared))
            parts = []
            if missing:
                parts.append(f"missing: {missing}")
            if extra:
                parts.append(f"not constructors of {data_name}: {extra}")
            self.fatal("type.match-branches", "; ".join(parts), e.span)
        result: Optional[Type] = want
        out: Optional[Gamma] = None
        for b in e.branches:
            fields = info.ctors[b.tag]
            if len(b.binders) != len(fields):
                self.fatal(
                    "type.match-binders",
                    f"branch {b.tag} needs {len(fields)} binder(s), got {len(b.binders)}",
                    b.span,
                )
            g2 = g
            disps = []
            for name, fty in zip(b.binders, fields):
                g2, disp = self.bind(g2, name, nf_pos(fty))
                disps.append((name, disp))
            if result is None:
                bt, g3 = self.synth(b.body, g2, delta)
                result = bt
            else:
                g3 = self.check(b.body, result, g2, delta)
            for name, disp in reversed(disps):
                g3 = self.release(g3, name, disp, b.span)
            if out is None:
                out = g3
            else:
                self.match_leftovers(out, g3, b.span)
        return result, out

    # -- checking --------------------------------------------------------

    def check(self, e: Expr, want: Type, g: Gamma, delta: dict[str, Kind]) -> Gamma:
        if isinstance(e, Abs):
            if want.tag != TAG_FUN:
                self.fatal(
                    "type.mismatch",
                    f"expected {want!r}, found a lambda",
                    e.span,
                )
            if e.ann is not None:
                dom = self.resolve_ann(e.ann, delta, e.span)
                e.ann = dom
                if not alpha_equal(dom, want.dom):
                    self.fatal(
                        "type.mismatch",
                        f"parameter annotated {dom!r} where {want.dom!r} is expected",
                        e.span,
                    )
            else:
                e.ann = want.dom
            g2, disp = self.bind(g, e.var, want.dom)
            g3 = self.check(e.body, want.cod, g2, delta)
            return self.release(g3, e.var, disp, e.span)
        if isinstance(e, TAbs):
            if want.tag != TAG_FORALL:
                self.fatal(
                    "type.mismatch", f"expected {want!r}, found a type abstraction", e.span
                )
            if e.kind != want.kind:
                self.fatal(
                    "type.mismatch",
                    f"type parameter of kind {e.kind} where kind {want.kind} is expected",
                    e.span,
                )
            if not is_value(e.body):
                self.fatal(
                    "type.tabs-value",
                    "the body of a type abstraction must be a value",
                    e.span,
                )
            inner = dict(delta)
            inner[e.var] = e.kind
            body_want = (
                want.body
                if want.var == e.var
                else nf_pos(subst_type(want.body, {want.var: Var(e.var)}))
            )
            return self.check(e.body, body_want, g, inner)
        if isinstance(e, EPair) and want.tag == TAG_PAIR:
            g2 = self.check(e.fst, want.fst, g, delta)
            self.supply_check(e.fst, want.fst, g, g2)
            g3 = self.check(e.snd, want.snd, g2, delta)
            self.supply_check(e.snd, want.snd, g2, g3)
            return g3
        if isinstance(e, App) and isinstance(e.fn, Abs) and e.fn.ann is None:
            # Argument first, then the lambda against the resulting arrow.
            arg_ty, g2 = self.synth(e.arg, g, delta)
            self.supply_check(e.arg, arg_ty, g, g2)
            return self.check(e.fn, Fun(arg_ty, want), g2, delta)
        if isinstance(e, LetPair):
            rhs_ty, g2 = self.synth(e.rhs, g, delta)
            if rhs_ty.tag != TAG_PAIR:
                self.fatal(
                    "type.let-pair",
                    f"pair elimination needs a pair, got {rhs_ty!r}",
                    e.span,
                )
            g3, disp_x = self.bind(g2, e.x, rhs_ty.fst)
            g3, disp_y = self.bind(g3, e.y, rhs_ty.snd)
            g4 = self.check(e.body, want, g3, delta)
            g5 = self.release(g4, e.y, disp_y, e.span)
            return self.release(g5, e.x, disp_x, e.span)
        if isinstance(e, LetUnit):
            rhs_ty, g2 = self.synth(e.rhs, g, delta)
            if rhs_ty.tag != TAG_UNIT:
                self.fatal(
                    "type.let-unit", f"unit elimination needs unit, got {rhs_ty!r}", e.span
                )
            return self.check(e.body, want, g2, delta)
        if isinstance(e, If):
            gc = self.check(e.cond, BOOL_T, g, delta)
            gt = self.check(e.then, want, gc, delta)
            ge = self.check(e.other, want, gc, delta)
            self.match_leftovers(gt, ge, e.span)
            return gt
        if isinstance(e, Match):
            _, out = self.type_match(e, want, g, delta)
            return out
        got, g2 = self.synth(e, g, delta)
        if not alpha_equal(got, want):
            self.fatal(
                "type.mismatch",
                f"expected {want!r}, found {got!r}",
                e.span,
            )
        return g2


# ---------------------------------------------------------------------------
# Programs


def check_program(
    program: Program, sink: Optional[DiagnosticSink] = None
) -> tuple[GlobalEnv, DiagnosticSink]:
    """Kind check declarations, then type check every definition against its
    signature. Definitions see all signatures (so they can be mutually
    recursive) as unrestricted entries."""

    sink = sink or DiagnosticSink()
    env = check_program_kinds(program, sink)
    checker = Checker(env, sink)
    checker.globals = {name: nf_pos(ty) for name, ty in env.sigs.items()}

    for name, d in env.defs.items():
        sig = checker.globals.get(name)
        if sig is None:
            continue  # missing signature already reported
        try:
            _check_def(checker, d, sig)
        except FatalDiagnostic:
            continue
    return env, sink


def _check_def(checker: Checker, d: Def, sig: Type) -> None:
    g: Gamma = {}
    delta: dict[str, Kind] = {}
    rest = sig
    releases = []
    wrappers: list[tuple[bool, str, object]] = []
    for is_ty, pname in d.params:
        if is_ty:
            if rest.tag != TAG_FORALL:
                checker.fatal(
                    "type.def-params",
                    f"parameter [{pname}] has no matching quantifier in the signature",
                    d.span,
                )
            delta[pname] = rest.kind
            wrappers.append((True, pname, rest.kind))
            rest = (
                rest.body
                if rest.var == pname
                else nf_pos(subst_type(rest.body, {rest.var: Var(pname)}))
            )
        else:
            if rest.tag != TAG_FUN:
                checker.fatal(
                    "type.def-params",
                    f"parameter {pname} has no matching arrow in the signature",
                    d.span,
                )
            g, disp = checker.bind(g, pname, rest.dom)
            releases.append((pname, disp))
            wrappers.append((False, pname, rest.dom))
            rest = rest.cod
    g = checker.check(d.body, rest, g, delta)
    for pname, disp in reversed(releases):
        g = checker.release(g, pname, disp, d.span)
    expr: Expr = d.body
    for is_ty, pname, ann in reversed(wrappers):
        expr = TAbs(pname, ann, expr, d.span) if is_ty else Abs(pname, ann, expr, d.span)
    checker.env.def_exprs[d.name] = expr


# ---------------------------------------------------------------------------
# Processes


def type_process(
    p: Proc,
    env: GlobalEnv,
    sink: Optional[DiagnosticSink] = None,
    chans: Optional[Gamma] = None,
    root_ty: Type = UNIT,
) -> DiagnosticSink:
    """Type a process tree: each thread checks against unit, channel entries
    thread left to right through parallel compositions, and a restriction
    introduces its two endpoints at dual types taken from its annotation.
    Everything linear must be consumed by the end.

    The leftmost thread checks against `root_ty` instead of unit so a run
    whose entry point returns a result stays typeable while it executes.
    """

    sink = sink or DiagnosticSink()
    checker = Checker(env, sink)
    checker.globals = {name: nf_pos(ty) for name, ty in env.sigs.items()}
    first = [True]

    def go(p: Proc, g: Gamma) -> Gamma:
        if isinstance(p, Thread):
            want = root_ty if first[0] else UNIT
            first[0] = False
            return checker.check(p.expr, want, g, {})
        if isinstance(p, Par):
            return go(p.right, go(p.left, g))
        if isinstance(p, New):
            if p.ann is None:
                checker.fatal("type.new-annotation", "restriction lacks a session annotation", None)
            pos = nf_pos(p.ann)
            g2, disp_x = checker.bind(g, p.x, pos)
            g2, disp_y = checker.bind(g2, p.y, nf_neg(p.ann))
            g3 = go(p.body, g2)
            g3 = checker.release(g3, p.y, disp_y, None)
            return checker.release(g3, p.x, disp_x, None)
        raise TypeError(f"unknown process node {type(p).__name__}")

    try:
        left = go(p, chans or {})
        for name, ent in left.items():
            if not ent.unrestricted:
                sink.error(
                    "type.linear-unconsumed",
                    f"process leaves linear channel {name} of type {ent.ty!r} unused",
                    None,
                )
    except FatalDiagnostic:
        pass
    return sink
