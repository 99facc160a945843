"""Kind checking and name resolution.

The parser emits `ProtoApp` for every applied or bare capitalized name; this
module resolves those against the declared protocols, data types, aliases,
and the built-in base types, expands aliases, and then checks the kinding
rules. Kinds form the chain S < T < P: a session type is a value type, and
any value type can travel inside a protocol.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .diagnostics import DiagnosticSink
from .syntax import (
    AliasDecl,
    Base,
    DataDecl,
    Def,
    Kind,
    Program,
    ProtoApp,
    ProtocolDecl,
    SigDecl,
    Span,
    TAG_BASE,
    TAG_DUAL,
    TAG_ENDT,
    TAG_ENDW,
    TAG_FORALL,
    TAG_FUN,
    TAG_IN,
    TAG_NEG,
    TAG_OUT,
    TAG_PAIR,
    TAG_PROTO,
    TAG_UNIT,
    TAG_VAR,
    Type,
    Dual,
    Forall,
    Fun,
    In,
    Neg,
    Out,
    Pair,
    Var,
    subst_type,
)

BASE_TYPES = ("Int", "Char", "String", "Bool")


@dataclass(slots=True)
class ProtocolInfo:
    name: str
    params: tuple[str, ...]
    # constructor tag -> resolved payload types (protocol params appear as Var)
    ctors: dict[str, tuple[Type, ...]] = field(default_factory=dict)


@dataclass(slots=True)
class DataInfo:
    name: str
    ctors: dict[str, tuple[Type, ...]] = field(default_factory=dict)


@dataclass(slots=True)
class GlobalEnv:
    protocols: dict[str, ProtocolInfo] = field(default_factory=dict)
    datas: dict[str, DataInfo] = field(default_factory=dict)
    aliases: dict[str, AliasDecl] = field(default_factory=dict)
    ctor_owner: dict[str, str] = field(default_factory=dict)  # tag -> decl name
    ctor_is_data: dict[str, bool] = field(default_factory=dict)
    sigs: dict[str, Type] = field(default_factory=dict)  # resolved, kind-checked
    sig_spans: dict[str, Span] = field(default_factory=dict)
    defs: dict[str, Def] = field(default_factory=dict)
    # name -> definition body wrapped in lambdas for its parameters, with
    # resolved annotations; filled in by the type checker for the runtime
    def_exprs: dict = field(default_factory=dict)

    def type_names(self) -> set[str]:
        return (
            set(self.protocols)
            | set(self.datas)
            | set(self.aliases)
            | set(BASE_TYPES)
        )


def subkind(a: Kind, b: Kind) -> bool:
    return int(a) <= int(b)


# ---------------------------------------------------------------------------
# Name resolution and alias expansion


def resolve_type(
    t: Type,
    env: GlobalEnv,
    sink: DiagnosticSink,
    _alias_stack: tuple[str, ...] = (),
) -> Type:
    """Rewrite parser output into resolved form: alias applications expanded,
    data/base names turned into Base nodes, protocol applications arity
    checked. Unknown names are reported and left as Base so checking can
    continue."""

    def go(t: Type, stack: tuple[str, ...]) -> Type:
        tag = t.tag
        if tag == TAG_PROTO:
            name = t.name
            args = tuple(go(a, stack) for a in t.args)
            if name in env.aliases:
                alias = env.aliases[name]
                if name in stack:
                    sink.error(
                        "kind.alias-cycle",
                        f"type alias {name} expands through itself",
                        t.span,
                    )
                    return Base(name, t.span)
                if len(args) != len(alias.params):
                    sink.error(
                        "kind.arity",
                        f"alias {name} takes {len(alias.params)} argument(s), got {len(args)}",
                        t.span,
                    )
                    return Base(name, t.span)
                body = subst_type(alias.body, dict(zip(alias.params, args)))
                return go(body, stack + (name,))
            if name in env.protocols:
                arity = len(env.protocols[name].params)
                if len(args) != arity:
                    sink.error(
                        "kind.arity",
                        f"protocol {name} takes {arity} argument(s), got {len(args)}",
                        t.span,
                    )
                return ProtoApp(name, args, t.span)
            if name in env.datas or name in BASE_TYPES:
                if args:
                    sink.error(
                        "kind.arity",
                        f"type {name} takes no arguments",
                        t.span,
                    )
                return Base(name, t.span)
            sink.error("kind.unknown-name", f"unknown type name {name}", t.span)
            return Base(name, t.span)
        if tag == TAG_FUN:
            return Fun(go(t.dom, stack), go(t.cod, stack), t.span)
        if tag == TAG_PAIR:
            return Pair(go(t.fst, stack), go(t.snd, stack), t.span)
        if tag == TAG_FORALL:
            return Forall(t.var, t.kind, go(t.body, stack), t.span)
        if tag == TAG_IN:
            return In(go(t.payload, stack), go(t.cont, stack), t.span)
        if tag == TAG_OUT:
            return Out(go(t.payload, stack), go(t.cont, stack), t.span)
        if tag == TAG_DUAL:
            return Dual(go(t.body, stack), t.span)
        if tag == TAG_NEG:
            return Neg(go(t.body, stack), t.span)
        return t

    return go(t, _alias_stack)


# ---------------------------------------------------------------------------
# Kinding rules


def synth_kind(
    t: Type,
    delta: dict[str, Kind],
    env: GlobalEnv,
    sink: DiagnosticSink,
) -> Kind:
    """Kind of a resolved type. On error, reports and returns the kind the
    context most plausibly wanted, so checking can continue."""

    tag = t.tag
    if tag in (TAG_UNIT, TAG_BASE):
        return Kind.T
    if tag == TAG_VAR:
        k = delta.get(t.name)
        if k is None:
            sink.error("kind.unbound-var", f"unbound type variable {t.name}", t.span)
            return Kind.T
        return k
    if tag == TAG_FUN:
        check_kind(t.dom, Kind.T, delta, env, sink)
        check_kind(t.cod, Kind.T, delta, env, sink)
        return Kind.T
    if tag == TAG_PAIR:
        check_kind(t.fst, Kind.T, delta, env, sink)
        check_kind(t.snd, Kind.T, delta, env, sink)
        return Kind.T
    if tag == TAG_FORALL:
        inner = dict(delta)
        inner[t.var] = t.kind
        check_kind(t.body, Kind.T, inner, env, sink)
        return Kind.T
    if tag in (TAG_IN, TAG_OUT):
        check_kind(t.payload, Kind.P, delta, env, sink)
        check_kind(t.cont, Kind.S, delta, env, sink)
        return Kind.S
    if tag in (TAG_ENDW, TAG_ENDT):
        return Kind.S
    if tag == TAG_DUAL:
        check_kind(t.body, Kind.S, delta, env, sink)
        return Kind.S
    if tag == TAG_PROTO:
        for a in t.args:
            check_kind(a, Kind.P, delta, env, sink)
        return Kind.P
    if tag == TAG_NEG:
        check_kind(t.body, Kind.P, delta, env, sink)
        return Kind.P
    raise TypeError(f"unknown type node tag {tag}")


def check_kind(
    t: Type,
    k: Kind,
    delta: dict[str, Kind],
    env: GlobalEnv,
    sink: DiagnosticSink,
) -> bool:
    got = synth_kind(t, delta, env, sink)
    if not subkind(got, k):
        sink.error(
            "kind.mismatch",
            f"expected kind {k}, found kind {got}",
            t.span,
        )
        return False
    return True


# ---------------------------------------------------------------------------
# Program-level checking


def check_program_kinds(program: Program, sink: DiagnosticSink) -> GlobalEnv:
    """Build the global environment from a parsed program. Every declared
    type name is registered before any right-hand side is looked at, so
    protocols, data types, and aliases may refer to each other freely and in
    any order. A second pass then checks constructor payloads, alias bodies,
    and signatures."""

    env = GlobalEnv()
    env.datas["Bool"] = DataInfo("Bool", {"True": (), "False": ()})
    env.ctor_owner["True"] = env.ctor_owner["False"] = "Bool"
    env.ctor_is_data["True"] = env.ctor_is_data["False"] = True

    registered: list = []
    for d in program.decls:
        if isinstance(d, (ProtocolDecl, DataDecl, AliasDecl)):
            if d.name in env.type_names():
                sink.error(
                    "kind.duplicate-name",
                    f"type name {d.name} already declared",
                    d.span,
                )
                continue
            if isinstance(d, ProtocolDecl):
                env.protocols[d.name] = ProtocolInfo(d.name, d.params)
            elif isinstance(d, DataDecl):
                env.datas[d.name] = DataInfo(d.name)
            else:
                env.aliases[d.name] = d
            registered.append(d)

    for d in registered:
        if isinstance(d, (ProtocolDecl, DataDecl)):
            _fill_group_member(d, env, sink)
        else:
            # Validity of the body is checked at each expansion site; a
            # quick expansion here catches cycles and unknown names early.
            probe = DiagnosticSink()
            args = tuple(Var(p) for p in d.params)
            resolve_type(ProtoApp(d.name, args, d.span), env, probe)
            for diag in probe.items:
                sink.items.append(diag)

    for d in program.decls:
        if isinstance(d, SigDecl):
            if d.name in env.sigs:
                sink.error("kind.duplicate-name", f"duplicate signature for {d.name}", d.span)
            ty = resolve_type(d.ty, env, sink)
            check_kind(ty, Kind.T, {}, env, sink)
            env.sigs[d.name] = ty
            env.sig_spans[d.name] = d.span
        elif isinstance(d, Def):
            if d.name in env.defs:
                sink.error("kind.duplicate-name", f"duplicate definition of {d.name}", d.span)
            env.defs[d.name] = d

    for name, d in env.defs.items():
        if name not in env.sigs:
            sink.error(
                "kind.missing-signature",
                f"definition of {name} has no signature",
                d.span,
            )
    return env


def _fill_group_member(g, env: GlobalEnv, sink: DiagnosticSink) -> None:
    is_proto = isinstance(g, ProtocolDecl)
    if is_proto:
        info = env.protocols[g.name]
        if not g.ctors:
            sink.warn(
                "kind.empty-protocol",
                f"protocol {g.name} declares no constructors; no channel of this protocol can ever be used",
                g.span,
            )
        if len(set(g.params)) != len(g.params):
            sink.error(
                "kind.duplicate-name", f"repeated parameter in protocol {g.name}", g.span
            )
        delta = {p: Kind.P for p in g.params}
        want = Kind.P
    else:
        info = env.datas[g.name]
        delta = {}
        want = Kind.T
    for c in g.ctors:
        if c.name in env.ctor_owner:
            sink.error(
                "kind.duplicate-ctor",
                f"constructor {c.name} already declared by {env.ctor_owner[c.name]}",
                c.span,
            )
            continue
        fields = tuple(resolve_type(f, env, sink) for f in c.fields)
        for f in fields:
            check_kind(f, want, delta, env, sink)
        info.ctors[c.name] = fields
        env.ctor_owner[c.name] = g.name
        env.ctor_is_data[c.name] = not is_proto
