"""Lexer and parser for the surface language.

Layout is line-oriented: a token in column 1 starts a new top-level
declaration, and everything belonging to a declaration must be indented
under it. On a parse error the parser reports a diagnostic and skips to the
next declaration, so one bad definition does not hide the rest of the file.

Surface sugar handled here: `let x = e in e'` becomes a pair let over
`(e, unit)`, lambda parameter lists unfold to nested abstractions, and
`[T, U]` applies two types in sequence. Definitions keep their parameter
names; annotations for them are recovered from the signature during type
checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .diagnostics import DiagnosticSink
from .syntax import (
    Abs,
    AliasDecl,
    App,
    BinOp,
    Branch,
    Const,
    Ctor,
    CtorDecl,
    DataDecl,
    Def,
    Dual,
    EPair,
    EVar,
    EndTerm,
    EndWait,
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
    Neg,
    Out,
    Pair,
    Program,
    ProtoApp,
    ProtocolDecl,
    Rec,
    Select,
    SigDecl,
    Span,
    TAbs,
    TApp,
    Type,
    Unit,
    Var,
    free_expr_vars,
)

KEYWORDS = {
    "protocol", "data", "type", "forall", "let", "in", "rec", "select",
    "fork", "new", "send", "receive", "wait", "terminate", "if", "then",
    "else", "match", "case", "with", "of", "unit", "Dual",
}

CONST_KEYWORDS = {"fork", "new", "send", "receive", "wait", "terminate", "unit"}

_OPS2 = ("->", "|>", "==")
_OPS1 = "()[]{},.:=|\\!?-+*<>&;"

MAX_NESTING = 900


@dataclass(slots=True)
class Token:
    kind: str  # LOWER UPPER INT STRING OP KW ENDW ENDT EOF
    text: str
    line: int
    col: int

    @property
    def span(self) -> Span:
        return Span(self.line, self.col, max(1, len(self.text)))


def tokenize(src: str, sink: DiagnosticSink) -> list[Token]:
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_col = col
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            word = src[i:j]
            col += j - i
            i = j
            if word == "End" and i < n and src[i] in "!?":
                kind = "ENDT" if src[i] == "!" else "ENDW"
                toks.append(Token(kind, word + src[i], line, start_col))
                i += 1
                col += 1
            elif word in KEYWORDS:
                toks.append(Token("KW", word, line, start_col))
            elif word[0].isupper():
                toks.append(Token("UPPER", word, line, start_col))
            else:
                toks.append(Token("LOWER", word, line, start_col))
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("INT", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            buf = []
            ok = False
            while j < n:
                if src[j] == "\\" and j + 1 < n:
                    esc = src[j + 1]
                    buf.append({"n": "\n", "t": "\t"}.get(esc, esc))
                    j += 2
                    continue
                if src[j] == '"':
                    ok = True
                    j += 1
                    break
                if src[j] == "\n":
                    break
                buf.append(src[j])
                j += 1
            if not ok:
                sink.error("parse.string", "unterminated string literal", Span(line, start_col, j - i))
            toks.append(Token("STRING", "".join(buf), line, start_col))
            col += j - i
            i = j
            continue
        two = src[i:i + 2]
        if two in _OPS2:
            toks.append(Token("OP", two, line, start_col))
            i += 2
            col += 2
            continue
        if c in _OPS1:
            toks.append(Token("OP", c, line, start_col))
            i += 1
            col += 1
            continue
        sink.error("parse.char", f"unexpected character {c!r}", Span(line, start_col, 1))
        i += 1
        col += 1
    toks.append(Token("EOF", "", line, col))
    return toks


class _Abort(Exception):
    """Raised to bail out of the current declaration after an error."""


class Parser:
    def __init__(self, toks: list[Token], sink: DiagnosticSink) -> None:
        self.toks = toks
        self.pos = 0
        self.sink = sink
        self.nesting = 0
        # Index of the current declaration's first token; any later token in
        # column 1 reads as end-of-declaration so expressions cannot swallow
        # the next definition. -1 disables layout (single-type entry points).
        self.guard = -1

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        idx = min(self.pos + ahead, len(self.toks) - 1)
        t = self.toks[idx]
        if self.guard >= 0 and idx > self.guard and t.kind != "EOF" and t.col == 1:
            return Token("EOF", "", t.line, t.col)
        return t

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at_op(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "OP" and t.text == text

    def at_kw(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "KW" and t.text == text

    def eat_op(self, text: str) -> bool:
        if self.at_op(text):
            self.pos += 1
            return True
        return False

    def eat_kw(self, text: str) -> bool:
        if self.at_kw(text):
            self.pos += 1
            return True
        return False

    def expect_op(self, text: str) -> Token:
        if self.at_op(text):
            return self.next()
        return self.fail(f"expected {text!r}")

    def expect_kw(self, text: str) -> Token:
        if self.at_kw(text):
            return self.next()
        return self.fail(f"expected keyword {text!r}")

    def expect(self, kind: str, what: str) -> Token:
        if self.peek().kind == kind:
            return self.next()
        return self.fail(f"expected {what}")

    def fail(self, msg: str, code: str = "parse.unexpected") -> Token:
        t = self.peek()
        found = repr(t.text) if t.kind != "EOF" else "end of input"
        self.sink.error(code, f"{msg}, found {found}", t.span)
        raise _Abort()

    def enter(self) -> None:
        self.nesting += 1
        if self.nesting > MAX_NESTING:
            self.fail("nesting too deep", "parse.too-deep")

    def leave(self) -> None:
        self.nesting -= 1

    # -- types -------------------------------------------------------------

    def parse_type(self) -> Type:
        self.enter()
        try:
            if self.at_kw("forall"):
                sp = self.next().span
                binders: list[tuple[str, Kind]] = []
                while not self.at_op("."):
                    parened = self.eat_op("(")
                    name = self.expect("LOWER", "type variable").text
                    self.expect_op(":")
                    binders.append((name, self.parse_kind()))
                    if parened:
                        self.expect_op(")")
                if not binders:
                    self.fail("forall needs at least one binder")
                self.expect_op(".")
                body = self.parse_type()
                for name, kind in reversed(binders):
                    body = Forall(name, kind, body, sp)
                return body
            left = self.parse_type_prefix()
            if self.eat_op("->"):
                return Fun(left, self.parse_type(), left.span)
            return left
        finally:
            self.leave()

    def parse_kind(self) -> Kind:
        t = self.expect("UPPER", "kind (S, T, or P)")
        if t.text in ("S", "T", "P"):
            return Kind[t.text]
        self.sink.error("parse.kind", f"expected kind S, T, or P, found {t.text!r}", t.span)
        return Kind.T

    def parse_type_prefix(self) -> Type:
        """Session prefixes `!T.S` / `?T.S`, else an application with an
        optional polarity sign."""

        self.enter()
        try:
            t = self.peek()
            if t.kind == "OP" and t.text in ("!", "?"):
                self.next()
                payload = self.parse_payload()
                self.expect_op(".")
                cont = self.parse_type_prefix()
                node = In if t.text == "?" else Out
                return node(payload, cont, t.span)
            if t.kind == "OP" and t.text in ("-", "+"):
                self.next()
                body = self.parse_type_app()
                return Neg(body, t.span) if t.text == "-" else body
            return self.parse_type_app()
        finally:
            self.leave()

    def parse_payload(self) -> Type:
        t = self.peek()
        if t.kind == "OP" and t.text in ("-", "+"):
            self.next()
            body = self.parse_type_app()
            return Neg(body, t.span) if t.text == "-" else body
        return self.parse_type_app()

    def parse_type_app(self) -> Type:
        head = self.peek()
        if head.kind == "UPPER":
            self.next()
            args = []
            while True:
                if self.at_type_atom():
                    args.append(self.parse_type_atom())
                elif self.at_op("-") or self.at_op("+"):
                    sign = self.next()
                    atom = self.parse_type_atom()
                    args.append(Neg(atom, sign.span) if sign.text == "-" else atom)
                else:
                    break
            return ProtoApp(head.text, tuple(args), head.span)
        return self.parse_type_atom()

    def at_type_atom(self) -> bool:
        t = self.peek()
        if t.kind in ("LOWER", "UPPER", "ENDW", "ENDT"):
            return True
        if t.kind == "KW" and t.text == "Dual":
            return True
        return t.kind == "OP" and t.text == "("

    def parse_type_atom(self) -> Type:
        self.enter()
        try:
            t = self.peek()
            if t.kind == "LOWER":
                self.next()
                return Var(t.text, t.span)
            if t.kind == "UPPER":
                if t.text in ("EndT", "EndW"):
                    self.next()
                    return EndTerm(t.span) if t.text == "EndT" else EndWait(t.span)
                self.next()
                return ProtoApp(t.text, (), t.span)
            if t.kind == "ENDW":
                self.next()
                return EndWait(t.span)
            if t.kind == "ENDT":
                self.next()
                return EndTerm(t.span)
            if t.kind == "KW" and t.text == "Dual":
                self.next()
                return Dual(self.parse_type_atom(), t.span)
            if self.at_op("("):
                self.next()
                if self.eat_op(")"):
                    return Unit(t.span)
                inner = self.parse_type()
                if self.eat_op(","):
                    snd = self.parse_type()
                    self.expect_op(")")
                    return Pair(inner, snd, t.span)
                self.expect_op(")")
                return inner
            self.fail("expected a type")
        finally:
            self.leave()

    # -- expressions ---------------------------------------------------

    def parse_expr(self) -> Expr:
        self.enter()
        try:
            t = self.peek()
            if t.kind == "OP" and t.text == "\\":
                return self.parse_lambda()
            if self.at_kw("let"):
                return self.parse_let()
            if self.at_kw("rec"):
                return self.parse_rec()
            if self.at_kw("if"):
                sp = self.next().span
                cond = self.parse_expr()
                self.expect_kw("then")
                then = self.parse_expr()
                self.expect_kw("else")
                other = self.parse_expr()
                return If(cond, then, other, sp)
            if self.at_kw("match") or self.at_kw("case"):
                return self.parse_match()
            return self.parse_pipeline()
        finally:
            self.leave()

    def parse_lambda(self) -> Expr:
        sp = self.expect_op("\\").span
        params: list[tuple] = []  # ('v', name, ann) or ('t', name, kind)
        while not self.at_op("->"):
            t = self.peek()
            if t.kind == "LOWER":
                self.next()
                params.append(("v", t.text, None))
            elif self.at_op("("):
                self.next()
                name = self.expect("LOWER", "parameter name").text
                self.expect_op(":")
                ann = self.parse_type()
                self.expect_op(")")
                params.append(("v", name, ann))
            elif self.at_op("["):
                self.next()
                name = self.expect("LOWER", "type parameter name").text
                self.expect_op(":")
                kind = self.parse_kind()
                self.expect_op("]")
                params.append(("t", name, kind))
            else:
                self.fail("expected a lambda parameter")
        if not params:
            self.fail("lambda needs at least one parameter")
        self.expect_op("->")
        body = self.parse_expr()
        for sort, name, extra in reversed(params):
            if sort == "v":
                body = Abs(name, extra, body, sp)
            else:
                body = TAbs(name, extra, body, sp)
        return body

    def parse_let(self) -> Expr:
        sp = self.expect_kw("let").span
        if self.at_op("("):
            self.next()
            if self.eat_op(")"):
                self.expect_op("=")
                rhs = self.parse_expr()
                self.expect_kw("in")
                return LetUnit(rhs, self.parse_expr(), sp)
            x = self.expect("LOWER", "variable").text
            self.expect_op(",")
            y = self.expect("LOWER", "variable").text
            if x == y:
                self.sink.error("parse.duplicate-binder", f"pair binders must differ, both are {x}", sp)
            self.expect_op(")")
            self.expect_op("=")
            rhs = self.parse_expr()
            self.expect_kw("in")
            return LetPair(x, y, rhs, self.parse_expr(), sp)
        x = self.expect("LOWER", "variable").text
        self.expect_op("=")
        rhs = self.parse_expr()
        self.expect_kw("in")
        body = self.parse_expr()
        # let x = e in e'  ==  let (x, u) = (e, unit) in let () = u in e'
        # The helper name must survive printing and re-parsing, so it is
        # drawn from the source alphabet and picked clear of the body.
        taken = free_expr_vars(body)
        u = "u'"
        while u in taken or u == x:
            u += "'"
        return LetPair(x, u, EPair(rhs, Const("unit", sp), sp), LetUnit(EVar(u, sp), body, sp), sp)

    def parse_rec(self) -> Expr:
        sp = self.expect_kw("rec").span
        name = self.expect("LOWER", "variable").text
        self.expect_op(":")
        ann = self.parse_type()
        self.expect_op(".")
        return Rec(name, ann, self.parse_expr(), sp)

    def parse_match(self) -> Expr:
        sp = self.next().span  # match | case
        scrut = self.parse_pipeline()
        if not (self.eat_kw("with") or self.eat_kw("of")):
            self.fail("expected 'with' or 'of'")
        self.expect_op("{")
        branches = []
        seen = set()
        while True:
            tag_tok = self.expect("UPPER", "constructor name")
            binders = []
            while self.peek().kind == "LOWER":
                binders.append(self.next().text)
            if len(set(binders)) != len(binders):
                self.sink.error("parse.duplicate-binder", "repeated binder in branch", tag_tok.span)
            self.expect_op("->")
            body = self.parse_expr()
            if tag_tok.text in seen:
                self.sink.error("parse.duplicate-branch", f"duplicate branch for {tag_tok.text}", tag_tok.span)
            seen.add(tag_tok.text)
            branches.append(Branch(tag_tok.text, tuple(binders), body, tag_tok.span))
            if self.eat_op(";") or self.eat_op(","):
                if self.at_op("}"):
                    break
                continue
            break
        self.expect_op("}")
        return Match(scrut, tuple(branches), sp)

    def parse_pipeline(self) -> Expr:
        left = self.parse_compare()
        while True:
            t = self.peek()
            if t.kind == "OP" and t.text in ("|>", "&"):
                self.next()
                right = self.parse_compare()
                left = App(right, left, t.span)
            else:
                return left

    def parse_compare(self) -> Expr:
        left = self.parse_arith()
        t = self.peek()
        if t.kind == "OP" and t.text in ("==", "<", ">"):
            self.next()
            return BinOp(t.text, left, self.parse_arith(), t.span)
        return left

    def parse_arith(self) -> Expr:
        left = self.parse_mul()
        while True:
            t = self.peek()
            if t.kind == "OP" and t.text in ("+", "-"):
                self.next()
                left = BinOp(t.text, left, self.parse_mul(), t.span)
            else:
                return left

    def parse_mul(self) -> Expr:
        left = self.parse_app()
        while True:
            t = self.peek()
            if t.kind == "OP" and t.text == "*":
                self.next()
                left = BinOp("*", left, self.parse_app(), t.span)
            else:
                return left

    def parse_app(self) -> Expr:
        head = self.parse_atom()
        args: list = []
        while True:
            if self.at_op("["):
                sp = self.next().span
                while True:
                    ty = self.parse_type()
                    args.append(("t", ty, sp))
                    if not self.eat_op(","):
                        break
                self.expect_op("]")
                continue
            if self.at_expr_atom():
                atom = self.parse_atom()
                args.append(("v", atom, atom.span if hasattr(atom, "span") else None))
                continue
            break
        if isinstance(head, Ctor) and args:
            if any(sort == "t" for sort, _, _ in args):
                self.fail("constructors take no type arguments")
            return Ctor(head.name, tuple(a for _, a, _ in args), head.span)
        e = head
        for sort, a, sp in args:
            e = TApp(e, a, sp) if sort == "t" else App(e, a, sp)
        return e

    def at_expr_atom(self) -> bool:
        t = self.peek()
        if t.kind in ("LOWER", "UPPER", "INT", "STRING"):
            return True
        if t.kind == "KW" and (t.text in CONST_KEYWORDS or t.text == "select"):
            return True
        return t.kind == "OP" and t.text == "("

    def parse_atom(self) -> Expr:
        self.enter()
        try:
            t = self.peek()
            if t.kind == "LOWER":
                self.next()
                return EVar(t.text, t.span)
            if t.kind == "UPPER":
                self.next()
                return Ctor(t.text, (), t.span)
            if t.kind == "INT":
                self.next()
                return Lit(int(t.text), t.span)
            if t.kind == "STRING":
                self.next()
                return Lit(t.text, t.span)
            if t.kind == "KW":
                if t.text in CONST_KEYWORDS:
                    self.next()
                    return Const(t.text, t.span)
                if t.text == "select":
                    self.next()
                    ctor = self.expect("UPPER", "constructor name")
                    return Select(ctor.text, t.span)
            if self.at_op("("):
                self.next()
                if self.eat_op(")"):
                    return Const("unit", t.span)
                inner = self.parse_expr()
                if self.eat_op(","):
                    snd = self.parse_expr()
                    self.expect_op(")")
                    return EPair(inner, snd, t.span)
                self.expect_op(")")
                return inner
            self.fail("expected an expression")
        finally:
            self.leave()

    # -- declarations --------------------------------------------------

    def decl_end(self, start_index: int) -> bool:
        """True when the current declaration has no tokens left (the guard in
        `peek` turns a column-1 token into a virtual EOF)."""

        return self.peek().kind == "EOF"

    def parse_ctor_decl(self) -> CtorDecl:
        name = self.expect("UPPER", "constructor name")
        fields = []
        while True:
            t = self.peek()
            if t.kind == "OP" and t.text in ("-", "+"):
                nxt = self.peek(1)
                if nxt.kind in ("LOWER", "UPPER", "ENDW", "ENDT") or (
                    nxt.kind == "OP" and nxt.text == "("
                ) or (nxt.kind == "KW" and nxt.text == "Dual"):
                    self.next()
                    body = self.parse_type_atom()
                    fields.append(Neg(body, t.span) if t.text == "-" else body)
                    continue
                break
            if self.at_type_atom():
                fields.append(self.parse_type_atom())
                continue
            break
        return CtorDecl(name.text, tuple(fields), name.span)

    def parse_decl(self):
        start = self.pos
        t = self.peek()
        if self.eat_kw("protocol") or (t.kind == "KW" and t.text == "data" and self.eat_kw("data")):
            is_proto = t.text == "protocol"
            name = self.expect("UPPER", "declaration name")
            params: list[str] = []
            while self.peek().kind == "LOWER":
                params.append(self.next().text)
            if not is_proto and params:
                self.sink.error("parse.data-params", "data declarations take no parameters", name.span)
            ctors: list[CtorDecl] = []
            if self.eat_op("="):
                ctors.append(self.parse_ctor_decl())
                while self.eat_op("|"):
                    ctors.append(self.parse_ctor_decl())
            if not self.decl_end(start):
                self.fail("unexpected input after declaration")
            if is_proto:
                return ProtocolDecl(name.text, tuple(params), tuple(ctors), t.span)
            if not ctors:
                self.sink.error("parse.empty-data", f"data {name.text} needs at least one constructor", name.span)
            return DataDecl(name.text, tuple(ctors), t.span)
        if self.eat_kw("type"):
            name = self.expect("UPPER", "alias name")
            params = []
            while self.peek().kind == "LOWER":
                params.append(self.next().text)
            self.expect_op("=")
            body = self.parse_type()
            if not self.decl_end(start):
                self.fail("unexpected input after type alias")
            return AliasDecl(name.text, tuple(params), body, t.span)
        if t.kind == "LOWER":
            name = self.next()
            if self.eat_op(":"):
                ty = self.parse_type()
                if not self.decl_end(start):
                    self.fail("unexpected input after signature")
                return SigDecl(name.text, ty, name.span)
            params = []
            while True:
                p = self.peek()
                if p.kind == "LOWER":
                    self.next()
                    params.append((False, p.text))
                elif self.at_op("["):
                    self.next()
                    tp = self.expect("LOWER", "type parameter")
                    self.expect_op("]")
                    params.append((True, tp.text))
                else:
                    break
            self.expect_op("=")
            body = self.parse_expr()
            if not self.decl_end(start):
                self.fail("unexpected input after definition")
            return Def(name.text, tuple(params), body, name.span)
        self.fail("expected a declaration")

    def skip_to_next_decl(self, start: int) -> None:
        self.guard = -1
        while True:
            t = self.toks[min(self.pos, len(self.toks) - 1)]
            if t.kind == "EOF":
                return
            if t.col == 1 and self.pos > start:
                return
            self.pos += 1

    def parse_program(self) -> Program:
        decls = []
        while self.toks[min(self.pos, len(self.toks) - 1)].kind != "EOF":
            start = self.pos
            if self.toks[start].col != 1:
                self.sink.error(
                    "parse.layout",
                    "declarations must start in column 1",
                    self.toks[start].span,
                )
                self.skip_to_next_decl(start)
                continue
            self.guard = start
            try:
                decls.append(self.parse_decl())
            except _Abort:
                self.skip_to_next_decl(start)
            finally:
                self.guard = -1
        return Program(decls)


def parse_program(src: str, sink: Optional[DiagnosticSink] = None) -> tuple[Program, DiagnosticSink]:
    sink = sink or DiagnosticSink()
    toks = tokenize(src, sink)
    prog = Parser(toks, sink).parse_program()
    return prog, sink


def parse_type(src: str, sink: Optional[DiagnosticSink] = None) -> tuple[Optional[Type], DiagnosticSink]:
    """Parse a single type, for the CLI normal-form command."""

    sink = sink or DiagnosticSink()
    toks = tokenize(src, sink)
    p = Parser(toks, sink)
    try:
        t = p.parse_type()
        if p.peek().kind != "EOF":
            p.fail("unexpected input after type")
        return t, sink
    except _Abort:
        return None, sink


def parse_expr(src: str, sink: Optional[DiagnosticSink] = None) -> tuple[Optional[Expr], DiagnosticSink]:
    sink = sink or DiagnosticSink()
    toks = tokenize(src, sink)
    p = Parser(toks, sink)
    try:
        e = p.parse_expr()
        if p.peek().kind != "EOF":
            p.fail("unexpected input after expression")
        return e, sink
    except _Abort:
        return None, sink
