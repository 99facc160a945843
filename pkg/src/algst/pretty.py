"""Printers for types, expressions, declarations, and processes.

Printing mirrors the parser's precedence exactly, so feeding the output back
through the parser yields an alpha-equal tree; the round-trip tests rely on
this file and the parser agreeing about every parenthesization decision.
"""

from __future__ import annotations

from .syntax import (
    Abs,
    AliasDecl,
    App,
    BinOp,
    Const,
    Ctor,
    DataDecl,
    Def,
    EPair,
    EVar,
    Expr,
    If,
    LetPair,
    LetUnit,
    Lit,
    Match,
    New,
    Par,
    Proc,
    Program,
    ProtocolDecl,
    Rec,
    Select,
    SigDecl,
    TAbs,
    TApp,
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
    Thread,
    Type,
)

# Type contexts, loosest to tightest.
_TOP = 0      # arrows and foralls print bare
_PREFIX = 1   # continuation of ! / ? : no bare arrows or foralls
_ATOM = 2     # protocol argument / payload: single atoms only


def _type(t: Type, ctx: int) -> str:
    tag = t.tag
    if tag == TAG_UNIT:
        return "()"
    if tag == TAG_BASE:
        return t.name
    if tag == TAG_VAR:
        return t.name
    if tag == TAG_ENDW:
        return "End?"
    if tag == TAG_ENDT:
        return "End!"
    if tag == TAG_PAIR:
        return f"({_type(t.fst, _TOP)}, {_type(t.snd, _TOP)})"
    if tag == TAG_DUAL:
        return f"Dual {_type(t.body, _ATOM)}"
    if tag == TAG_FUN:
        s = f"{_type(t.dom, _PREFIX)} -> {_type(t.cod, _TOP)}"
        return s if ctx == _TOP else f"({s})"
    if tag == TAG_FORALL:
        binders = []
        body = t
        while body.tag == TAG_FORALL:
            binders.append(f"{body.var}:{body.kind}")
            body = body.body
        s = f"forall {' '.join(binders)}. {_type(body, _TOP)}"
        return s if ctx == _TOP else f"({s})"
    if tag in (TAG_IN, TAG_OUT):
        mark = "?" if tag == TAG_IN else "!"
        payload = t.payload
        if payload.tag == TAG_NEG:
            p = "-" + _payload_app(payload.body)
        else:
            p = _payload_app(payload)
        s = f"{mark}{p}.{_type(t.cont, _PREFIX)}"
        return s if ctx != _ATOM else f"({s})"
    if tag == TAG_NEG:
        s = "-" + _type(t.body, _ATOM)
        return s if ctx != _ATOM else f"({s})"
    if tag == TAG_PROTO:
        if not t.args:
            return t.name
        s = t.name + " " + " ".join(_proto_arg(a) for a in t.args)
        return s if ctx != _ATOM else f"({s})"
    raise TypeError(f"unknown type node tag {tag}")


def _payload_app(t: Type) -> str:
    """Message payloads admit a bare protocol application."""

    if t.tag == TAG_PROTO and t.args:
        return t.name + " " + " ".join(_proto_arg(a) for a in t.args)
    return _type(t, _ATOM)


def _proto_arg(t: Type) -> str:
    """Protocol arguments admit a bare sign on an atom."""

    if t.tag == TAG_NEG:
        return "-" + _type(t.body, _ATOM)
    return _type(t, _ATOM)


def type_str(t: Type) -> str:
    return _type(t, _TOP)


# Expression contexts, loosest to tightest.
_E_TOP = 0    # lambda, let, if, match, rec print bare
_E_PIPE = 1
_E_CMP = 2
_E_ARITH = 3
_E_MUL = 4
_E_APP = 5
_E_ATOM = 6

_BINOP_LEVEL = {"==": _E_CMP, "<": _E_CMP, ">": _E_CMP,
                "+": _E_ARITH, "-": _E_ARITH, "*": _E_MUL}


def _wrap(s: str, level: int, ctx: int) -> str:
    return s if level >= ctx else f"({s})"


def _expr(e: Expr, ctx: int) -> str:
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, Const):
        return "()" if e.name == "unit" else e.name
    if isinstance(e, Select):
        return _wrap(f"select {e.ctor}", _E_APP, ctx)
    if isinstance(e, Lit):
        if isinstance(e.value, str):
            body = e.value.replace("\\", "\\\\").replace('"', '\\"')
            body = body.replace("\n", "\\n").replace("\t", "\\t")
            return f'"{body}"'
        return str(e.value)
    if isinstance(e, Ctor):
        if not e.args:
            return e.name
        s = e.name + " " + " ".join(_expr(a, _E_ATOM) for a in e.args)
        return _wrap(s, _E_APP, ctx)
    if isinstance(e, EPair):
        return f"({_expr(e.fst, _E_TOP)}, {_expr(e.snd, _E_TOP)})"
    if isinstance(e, App):
        s = f"{_expr(e.fn, _E_APP)} {_expr(e.arg, _E_ATOM)}"
        return _wrap(s, _E_APP, ctx)
    if isinstance(e, TApp):
        s = f"{_expr(e.fn, _E_APP)} [{type_str(e.ty)}]"
        return _wrap(s, _E_APP, ctx)
    if isinstance(e, BinOp):
        lvl = _BINOP_LEVEL[e.op]
        if lvl == _E_CMP:
            s = f"{_expr(e.left, _E_ARITH)} {e.op} {_expr(e.right, _E_ARITH)}"
        else:
            s = f"{_expr(e.left, lvl)} {e.op} {_expr(e.right, lvl + 1)}"
        return _wrap(s, lvl, ctx)
    if isinstance(e, Abs):
        params = []
        body = e
        while True:
            if isinstance(body, Abs):
                if body.ann is None:
                    params.append(body.var)
                else:
                    params.append(f"({body.var} : {type_str(body.ann)})")
            elif isinstance(body, TAbs):
                params.append(f"[{body.var} : {body.kind}]")
            else:
                break
            body = body.body
        s = f"\\{' '.join(params)} -> {_expr(body, _E_TOP)}"
        return _wrap(s, _E_TOP, ctx)
    if isinstance(e, TAbs):
        s = f"\\[{e.var} : {e.kind}] -> {_expr(e.body, _E_TOP)}"
        return _wrap(s, _E_TOP, ctx)
    if isinstance(e, Rec):
        s = f"rec {e.var} : {type_str(e.ann)} . {_expr(e.body, _E_TOP)}"
        return _wrap(s, _E_TOP, ctx)
    if isinstance(e, LetPair):
        s = f"let ({e.x}, {e.y}) = {_expr(e.rhs, _E_TOP)} in {_expr(e.body, _E_TOP)}"
        return _wrap(s, _E_TOP, ctx)
    if isinstance(e, LetUnit):
        s = f"let () = {_expr(e.rhs, _E_TOP)} in {_expr(e.body, _E_TOP)}"
        return _wrap(s, _E_TOP, ctx)
    if isinstance(e, If):
        s = (
            f"if {_expr(e.cond, _E_TOP)} then {_expr(e.then, _E_TOP)}"
            f" else {_expr(e.other, _E_TOP)}"
        )
        return _wrap(s, _E_TOP, ctx)
    if isinstance(e, Match):
        branches = "; ".join(
            " ".join((b.tag,) + b.binders) + f" -> {_expr(b.body, _E_TOP)}"
            for b in e.branches
        )
        s = f"match {_expr(e.scrutinee, _E_PIPE)} with {{ {branches} }}"
        return _wrap(s, _E_TOP, ctx)
    raise TypeError(f"unknown expression node {type(e).__name__}")


def expr_str(e: Expr) -> str:
    return _expr(e, _E_TOP)


def _ctor_field(t: Type) -> str:
    if t.tag == TAG_NEG:
        return "-" + _type(t.body, _ATOM)
    return _type(t, _ATOM)


def decl_str(d) -> str:
    if isinstance(d, ProtocolDecl):
        head = "protocol " + " ".join((d.name,) + d.params)
        if not d.ctors:
            return head
        alts = " | ".join(
            " ".join((c.name,) + tuple(_ctor_field(f) for f in c.fields)) for c in d.ctors
        )
        return f"{head} = {alts}"
    if isinstance(d, DataDecl):
        alts = " | ".join(
            " ".join((c.name,) + tuple(_ctor_field(f) for f in c.fields)) for c in d.ctors
        )
        return f"data {d.name} = {alts}"
    if isinstance(d, AliasDecl):
        return "type " + " ".join((d.name,) + d.params) + f" = {type_str(d.body)}"
    if isinstance(d, SigDecl):
        return f"{d.name} : {type_str(d.ty)}"
    if isinstance(d, Def):
        params = "".join(
            f" [{name}]" if is_ty else f" {name}" for is_ty, name in d.params
        )
        return f"{d.name}{params} = {expr_str(d.body)}"
    raise TypeError(f"unknown declaration {type(d).__name__}")


def program_str(p: Program) -> str:
    return "\n".join(decl_str(d) for d in p.decls) + "\n"


def proc_str(p: Proc) -> str:
    if isinstance(p, Thread):
        return f"<{expr_str(p.expr)}>"
    if isinstance(p, Par):
        return f"({proc_str(p.left)} | {proc_str(p.right)})"
    if isinstance(p, New):
        ann = f" : {type_str(p.ann)}" if p.ann is not None else ""
        return f"(nu {p.x} {p.y}{ann}) {proc_str(p.body)}"
    raise TypeError(f"unknown process node {type(p).__name__}")
