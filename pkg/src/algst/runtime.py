"""Process execution.

Each thread is an expression reduced under call-by-value, left to right.
A thread either takes an internal step (beta, unfolding a definition,
arithmetic, let, data match, conditional), performs a thread-local process
action (fork, channel creation), or blocks offering a communication on a
channel endpoint: send or receive a value, select or branch on a
constructor tag, terminate or wait. A restriction node binds the two
endpoints of one channel and carries the session type of its first
endpoint; a synchronization needs its two names offered with matching
actions by two threads underneath it, and it advances the annotation the
same way the endpoint types advance, so the whole process can be re-typed
between steps.

Sending a value that mentions a channel bound below the synchronizing
restriction would move a name out of its scope. When the value is exactly
such an endpoint the machine widens that channel's restriction to sit just
inside the synchronizing one and the send goes ahead; any other escaping
value leaves the offer disabled. Channel names are never reused, so the
widening cannot capture anything.

The machine rewrites the process tree in place, one transition per step;
there is no hidden channel store, so printing the root shows the whole
machine state. Performance is not a goal here, faithfulness to the typing
harness is.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Callable, Iterator, Optional, Union

from .kinds import GlobalEnv
from .normalize import negate, nf_neg, nf_pos, tosession
from .pretty import expr_str, type_str
from .syntax import (
    Abs,
    App,
    BinOp,
    Const,
    Ctor,
    EPair,
    EVar,
    Expr,
    FALSE,
    If,
    LBeta,
    LClose,
    LFork,
    LNew,
    LParPair,
    LRecvC,
    LRecvV,
    LScope,
    LSendC,
    LSendV,
    LTau,
    LTerm,
    Label,
    LetPair,
    LetUnit,
    Lit,
    Match,
    New,
    Par,
    Proc,
    Rec,
    Select,
    TAbs,
    TApp,
    TAG_ENDT,
    TAG_ENDW,
    TAG_IN,
    TAG_OUT,
    TAG_PROTO,
    TRUE,
    Thread,
    Type,
    UNIT_E,
    _const_spine,
    alpha_equal,
    free_expr_vars,
    fresh_name,
    is_value,
    subst_expr,
    subst_type,
    subst_type_in_expr,
    threads,
)


# ---------------------------------------------------------------------------
# Stepping one expression
#
# The result of looking for a redex. Communication does not step on its own:
# it comes back as an offer holding a continuation closure and fires only
# when the process layer pairs it with the dual offer under a restriction.


@dataclass(slots=True)
class StepValue:
    pass


@dataclass(slots=True)
class StepStuck:
    reason: str


@dataclass(slots=True)
class StepTau:
    """Internal reduction; `rule` names the axiom for the trace."""

    expr: Expr
    rule: str


@dataclass(slots=True)
class OfferSend:
    chan: str
    value: Expr
    k: Callable[[], Expr]


@dataclass(slots=True)
class OfferRecv:
    chan: str
    k: Callable[[Expr], Expr]


@dataclass(slots=True)
class OfferSelect:
    chan: str
    ctor: str
    k: Callable[[], Expr]


@dataclass(slots=True)
class OfferBranch:
    chan: str
    arms: dict[str, Callable[[], Expr]]


@dataclass(slots=True)
class OfferWait:
    chan: str
    k: Callable[[], Expr]


@dataclass(slots=True)
class OfferTerminate:
    chan: str
    k: Callable[[], Expr]


@dataclass(slots=True)
class ActFork:
    thunk: Expr
    k: Callable[[], Expr]


@dataclass(slots=True)
class ActNew:
    ann: Type
    k: Callable[[str, str], Expr]


StepResult = Union[
    StepValue, StepStuck, StepTau,
    OfferSend, OfferRecv, OfferSelect, OfferBranch, OfferWait, OfferTerminate,
    ActFork, ActNew,
]


def _wrap(res: StepResult, ctx: Callable[[Expr], Expr]) -> StepResult:
    """Lift a step found in a subexpression through one evaluation-context
    frame by composing the frame onto every continuation."""

    if isinstance(res, StepTau):
        return StepTau(ctx(res.expr), res.rule)
    if isinstance(res, (StepValue, StepStuck)):
        return res
    if isinstance(res, OfferBranch):
        return OfferBranch(
            res.chan, {tag: (lambda k=k: ctx(k())) for tag, k in res.arms.items()}
        )
    old = res.k
    wrapped = lambda *a: ctx(old(*a))  # noqa: E731
    if isinstance(res, OfferSend):
        return OfferSend(res.chan, res.value, wrapped)
    if isinstance(res, OfferRecv):
        return OfferRecv(res.chan, wrapped)
    if isinstance(res, OfferSelect):
        return OfferSelect(res.chan, res.ctor, wrapped)
    if isinstance(res, OfferWait):
        return OfferWait(res.chan, wrapped)
    if isinstance(res, OfferTerminate):
        return OfferTerminate(res.chan, wrapped)
    if isinstance(res, ActFork):
        return ActFork(res.thunk, wrapped)
    if isinstance(res, ActNew):
        return ActNew(res.ann, wrapped)
    raise TypeError(f"cannot wrap {type(res).__name__}")


def _subst_many(body: Expr, pairs: list[tuple[str, Expr]]) -> Expr:
    """Simultaneous substitution: route through fresh intermediates so an
    earlier replacement can never be rewritten by a later one."""

    temps = [(old, fresh_name(old)) for old, _ in pairs]
    for old, tmp in temps:
        body = subst_expr(body, old, EVar(tmp))
    for (_, value), (_, tmp) in zip(pairs, temps):
        body = subst_expr(body, tmp, value)
    return body


def _global_ref(e: Expr, globals_: dict[str, Expr]) -> Optional[Expr]:
    """Definition body when `e` refers to a top-level definition. References
    are values, so strict positions unfold them explicitly before giving up
    on a shape mismatch."""

    if isinstance(e, EVar) and e.name in globals_:
        return globals_[e.name]
    return None


def step_expr(e: Expr, globals_: dict[str, Expr]) -> StepResult:
    """Locate the unique left-to-right call-by-value redex of `e`."""

    if _global_ref(e, globals_) is not None:
        return StepTau(globals_[e.name], "unfold")
    if is_value(e):
        return StepValue()

    if isinstance(e, App):
        if not is_value(e.fn):
            return _wrap(step_expr(e.fn, globals_), lambda r: App(r, e.arg, e.span))
        if not is_value(e.arg):
            return _wrap(step_expr(e.arg, globals_), lambda r: App(e.fn, r, e.span))
        f = e.fn
        if isinstance(f, Abs):
            return StepTau(subst_expr(f.body, f.var, e.arg), "beta")
        if isinstance(f, Rec):
            # Unroll once and re-apply; the argument is already a value, so
            # this stays call-by-value.
            return StepTau(App(subst_expr(f.body, f.var, f), e.arg, e.span), "rec")
        g = _global_ref(f, globals_)
        if g is not None:
            return StepTau(App(g, e.arg, e.span), "unfold")
        spine = _const_spine(e)
        if spine is not None:
            head, targs, vargs = spine
            if isinstance(head, Select):
                chan = _endpoint(vargs[0])
                if chan is None:
                    return StepStuck("select applied to a non-endpoint")
                return OfferSelect(chan, head.ctor, lambda c=chan: EVar(c))
            name = head.name
            if name == "fork" and len(vargs) == 1:
                return ActFork(vargs[0], lambda: UNIT_E)
            if name in ("wait", "terminate") and len(vargs) == 1:
                chan = _endpoint(vargs[0])
                if chan is None:
                    return StepStuck(f"{name} applied to a non-endpoint")
                cls = OfferWait if name == "wait" else OfferTerminate
                return cls(chan, lambda: UNIT_E)
            if name == "send" and targs == 2 and len(vargs) == 2:
                chan = _endpoint(vargs[1])
                if chan is None:
                    return StepStuck("send applied to a non-endpoint")
                return OfferSend(chan, vargs[0], lambda c=chan: EVar(c))
            if name == "receive" and targs == 2 and len(vargs) == 1:
                chan = _endpoint(vargs[0])
                if chan is None:
                    return StepStuck("receive applied to a non-endpoint")
                return OfferRecv(chan, lambda v, c=chan: EPair(v, EVar(c)))
        return StepStuck("application of a non-function value")

    if isinstance(e, TApp):
        if not is_value(e.fn):
            return _wrap(step_expr(e.fn, globals_), lambda r: TApp(r, e.ty, e.span))
        f = e.fn
        if isinstance(f, TAbs):
            return StepTau(subst_type_in_expr(f.body, f.var, e.ty), "beta")
        g = _global_ref(f, globals_)
        if g is not None:
            return StepTau(TApp(g, e.ty, e.span), "unfold")
        spine = _const_spine(e)
        if spine is not None:
            head, targs, vargs = spine
            if isinstance(head, Const) and head.name == "new" and targs == 1 and not vargs:
                return ActNew(e.ty, lambda x, y: EPair(EVar(x), EVar(y)))
        return StepStuck("type application of a non-polymorphic value")

    if isinstance(e, LetPair):
        if not is_value(e.rhs):
            return _wrap(
                step_expr(e.rhs, globals_),
                lambda r: LetPair(e.x, e.y, r, e.body, e.span),
            )
        g = _global_ref(e.rhs, globals_)
        if g is not None:
            return StepTau(LetPair(e.x, e.y, g, e.body, e.span), "unfold")
        if isinstance(e.rhs, EPair):
            return StepTau(
                _subst_many(e.body, [(e.x, e.rhs.fst), (e.y, e.rhs.snd)]), "let"
            )
        return StepStuck("pair elimination of a non-pair value")

    if isinstance(e, LetUnit):
        if not is_value(e.rhs):
            return _wrap(
                step_expr(e.rhs, globals_), lambda r: LetUnit(r, e.body, e.span)
            )
        g = _global_ref(e.rhs, globals_)
        if g is not None:
            return StepTau(LetUnit(g, e.body, e.span), "unfold")
        if isinstance(e.rhs, Const) and e.rhs.name == "unit":
            return StepTau(e.body, "let")
        return StepStuck("unit elimination of a non-unit value")

    if isinstance(e, Match):
        if not is_value(e.scrutinee):
            return _wrap(
                step_expr(e.scrutinee, globals_),
                lambda r: Match(r, e.branches, e.span),
            )
        s = e.scrutinee
        g = _global_ref(s, globals_)
        if g is not None:
            return StepTau(Match(g, e.branches, e.span), "unfold")
        if isinstance(s, Ctor):
            for b in e.branches:
                if b.tag == s.name:
                    if len(b.binders) != len(s.args):
                        return StepStuck(
                            f"branch {b.tag} binds {len(b.binders)} of {len(s.args)} fields"
                        )
                    return StepTau(
                        _subst_many(b.body, list(zip(b.binders, s.args))), "match"
                    )
            return StepStuck(f"no branch for constructor {s.name}")
        if isinstance(s, EVar):
            arms = {
                b.tag: (lambda b=b, c=s.name: subst_expr(b.body, b.binders[0], EVar(c)))
                for b in e.branches
                if len(b.binders) == 1
            }
            return OfferBranch(s.name, arms)
        return StepStuck("match on a value that is neither data nor an endpoint")

    if isinstance(e, If):
        if not is_value(e.cond):
            return _wrap(
                step_expr(e.cond, globals_),
                lambda r: If(r, e.then, e.other, e.span),
            )
        c = e.cond
        g = _global_ref(c, globals_)
        if g is not None:
            return StepTau(If(g, e.then, e.other, e.span), "unfold")
        if isinstance(c, Ctor) and c.name in ("True", "False") and not c.args:
            return StepTau(e.then if c.name == "True" else e.other, "if")
        return StepStuck("condition is not a boolean")

    if isinstance(e, BinOp):
        if not is_value(e.left):
            return _wrap(
                step_expr(e.left, globals_),
                lambda r: BinOp(e.op, r, e.right, e.span),
            )
        g = _global_ref(e.left, globals_)
        if g is not None:
            return StepTau(BinOp(e.op, g, e.right, e.span), "unfold")
        if not is_value(e.right):
            return _wrap(
                step_expr(e.right, globals_),
                lambda r: BinOp(e.op, e.left, r, e.span),
            )
        g = _global_ref(e.right, globals_)
        if g is not None:
            return StepTau(BinOp(e.op, e.left, g, e.span), "unfold")
        if isinstance(e.left, Lit) and isinstance(e.right, Lit):
            a, b = e.left.value, e.right.value
            if isinstance(a, int) and isinstance(b, int):
                if e.op == "+":
                    return StepTau(Lit(a + b), "arith")
                if e.op == "-":
                    return StepTau(Lit(a - b), "arith")
                if e.op == "*":
                    return StepTau(Lit(a * b), "arith")
                if e.op == "==":
                    return StepTau(TRUE if a == b else FALSE, "arith")
                if e.op == "<":
                    return StepTau(TRUE if a < b else FALSE, "arith")
                if e.op == ">":
                    return StepTau(TRUE if a > b else FALSE, "arith")
        return StepStuck(f"operator {e.op} needs integer operands")

    if isinstance(e, EPair):
        if not is_value(e.fst):
            return _wrap(step_expr(e.fst, globals_), lambda r: EPair(r, e.snd, e.span))
        return _wrap(step_expr(e.snd, globals_), lambda r: EPair(e.fst, r, e.span))

    if isinstance(e, Ctor):
        for i, a in enumerate(e.args):
            if not is_value(a):
                def ctx(r: Expr, i: int = i) -> Expr:
                    args = list(e.args)
                    args[i] = r
                    return Ctor(e.name, tuple(args), e.span)

                return _wrap(step_expr(a, globals_), ctx)

    return StepStuck(f"no rule for {type(e).__name__}")


def _endpoint(v: Expr) -> Optional[str]:
    return v.name if isinstance(v, EVar) else None


# ---------------------------------------------------------------------------
# The context transition system
#
# Session labels advance the types of the endpoints they mention. The same
# function advances the restriction annotations inside the machine and the
# endpoint context replayed by the preservation harness, so a polarity slip
# here is caught when the process no longer types against its own
# annotations.

_REMOVE = object()


def advance_endpoint(ty: Type, label: Label, env: GlobalEnv) -> object:
    """One endpoint's session type after performing `label` on it: the new
    type, the _REMOVE sentinel when the session closed, or None when the
    label does not apply at this type."""

    if ty is None:
        return None
    if isinstance(label, (LSendV, LScope)):
        return ty.cont if ty.tag == TAG_OUT else None
    if isinstance(label, LRecvV):
        return ty.cont if ty.tag == TAG_IN else None
    if isinstance(label, (LSendC, LRecvC)):
        sending = isinstance(label, LSendC)
        if ty.tag != (TAG_OUT if sending else TAG_IN) or ty.payload.tag != TAG_PROTO:
            return None
        proto = ty.payload
        info = env.protocols.get(proto.name)
        if info is None or label.ctor not in info.ctors:
            return None
        inst = dict(zip(info.params, proto.args))
        acc = ty.cont
        # The chosen constructor's payloads become a prefix of the session.
        # The selecting endpoint reads them at face polarity; the branching
        # endpoint sees every polarity flipped.
        for payload in reversed(info.ctors[label.ctor]):
            step = nf_pos(subst_type(payload, inst))
            if not sending:
                step = negate(step)
            acc = tosession(step, acc)
        return acc
    if isinstance(label, LTerm):
        return _REMOVE if ty.tag == TAG_ENDT else None
    if isinstance(label, LClose):
        return _REMOVE if ty.tag == TAG_ENDW else None
    return None


def step_ctx(
    gamma: dict[str, Type], label: Label, env: GlobalEnv
) -> Optional[dict[str, Type]]:
    """Advance a channel-endpoint context along a transition label; None when
    the label does not apply to the context."""

    if isinstance(label, (LTau, LBeta, LFork)):
        return gamma
    if isinstance(label, LParPair):
        mid = step_ctx(gamma, label.left, env)
        return None if mid is None else step_ctx(mid, label.right, env)
    if isinstance(label, LNew):
        out = dict(gamma)
        out[label.x] = nf_pos(label.ann)
        out[label.y] = nf_neg(label.ann)
        return out
    chan = getattr(label, "chan", None)
    if chan is None or chan not in gamma:
        return None
    after = advance_endpoint(gamma[chan], label, env)
    if after is None:
        return None
    out = dict(gamma)
    if after is _REMOVE:
        del out[chan]
    else:
        out[chan] = after
    return out


# ---------------------------------------------------------------------------
# The machine


@dataclass(slots=True)
class Outcome:
    kind: str  # "completed" | "deadlock" | "fuel" | "stuck"
    steps: int
    final: Proc
    witness: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return {"completed": 0, "deadlock": 2, "fuel": 3, "stuck": 4}[self.kind]


@dataclass(slots=True)
class _Transition:
    label: Label
    rule: str
    apply: Callable[[], None]


class Machine:
    """Scheduler over one process tree.

    roundRobin rotates through the enabled transitions in syntactic order,
    deterministically for a given program and fuel; random draws from a
    seeded generator. Channel names come from a per-run counter, so traces
    are reproducible run to run.
    """

    def __init__(
        self,
        proc: Proc,
        env: GlobalEnv,
        fuel: int = 10_000,
        policy: str = "roundRobin",
        seed: int = 0,
        on_step: Optional[Callable[[dict], None]] = None,
        keep_trace: bool = False,
    ) -> None:
        self.proc = proc
        self.env = env
        self.globals = env.def_exprs
        self.fuel = fuel
        self.policy = policy
        self.rng = Random(seed)
        self.on_step = on_step
        self.trace: Optional[list[Label]] = [] if keep_trace else None
        self.steps = 0
        self._rr = 0
        self._next_name = 1

    def _scan_names(self) -> tuple[int, str, str]:
        n = self._next_name
        while f"c{n}" in self.globals or f"d{n}" in self.globals:
            n += 1
        return n, f"c{n}", f"d{n}"

    def _fresh_pair(self) -> tuple[str, str]:
        n, x, y = self._scan_names()
        self._next_name = n + 1
        return x, y

    # -- enumerating transitions ----------------------------------------

    def _survey(self):
        """One walk of the tree: each thread's step result, offers with the
        restrictions standing between them and the root, and every
        restriction node."""

        taus: list[tuple[Thread, StepTau]] = []
        acts: list[tuple[Thread, StepResult]] = []
        offers: list[tuple[Thread, StepResult, tuple[New, ...]]] = []
        stucks: list[tuple[Thread, str]] = []
        nus: list[New] = []
        all_values = True

        def walk(p: Proc, path: tuple[New, ...]) -> None:
            nonlocal all_values
            if isinstance(p, Thread):
                res = step_expr(p.expr, self.globals)
                if isinstance(res, StepValue):
                    return
                all_values = False
                if isinstance(res, StepTau):
                    taus.append((p, res))
                elif isinstance(res, (ActFork, ActNew)):
                    acts.append((p, res))
                elif isinstance(res, StepStuck):
                    stucks.append((p, res.reason))
                else:
                    offers.append((p, res, path))
            elif isinstance(p, Par):
                walk(p.left, path)
                walk(p.right, path)
            elif isinstance(p, New):
                nus.append(p)
                walk(p.body, path + (p,))
            else:
                raise TypeError(f"unknown process node {type(p).__name__}")

        walk(self.proc, ())
        return taus, acts, offers, stucks, nus, all_values

    def enabled(self) -> list[_Transition]:
        return self._enabled_full()[0]

    def _enabled_full(self):
        taus, acts, offers, stucks, nus, all_values = self._survey()
        trans: list[_Transition] = []
        for thread, res in taus:
            trans.append(_Transition(LTau(), res.rule, self._apply_tau(thread, res)))
        for thread, act in acts:
            if isinstance(act, ActFork):
                trans.append(
                    _Transition(LFork(act.thunk), "fork", self._apply_fork(thread, act))
                )
            else:
                _, x, y = self._scan_names()
                trans.append(
                    _Transition(LNew(x, y, act.ann), "new", self._apply_new(thread, act))
                )
        by_chan: dict[str, tuple[Thread, StepResult, tuple[New, ...]]] = {}
        for entry in offers:
            by_chan.setdefault(entry[1].chan, entry)
        for nu in nus:
            a = by_chan.get(nu.x)
            b = by_chan.get(nu.y)
            if a is None or b is None:
                continue
            for sender, receiver, x_sends in ((a, b, True), (b, a, False)):
                s_off, r_off = sender[1], receiver[1]
                if isinstance(s_off, OfferSend) and isinstance(r_off, OfferRecv):
                    t = self._msg_transition(nu, sender, receiver, x_sends)
                    if t is not None:
                        trans.append(t)
                elif isinstance(s_off, OfferSelect) and isinstance(r_off, OfferBranch):
                    if s_off.ctor in r_off.arms:
                        trans.append(self._tag_transition(nu, sender, receiver, x_sends))
                elif isinstance(s_off, OfferTerminate) and isinstance(r_off, OfferWait):
                    trans.append(self._close_transition(nu, sender, receiver))
        return trans, (offers, stucks, nus, by_chan), all_values

    # -- applying transitions --------------------------------------------

    def _apply_tau(self, thread: Thread, res: StepTau) -> Callable[[], None]:
        def apply() -> None:
            thread.expr = res.expr

        return apply

    def _apply_fork(self, thread: Thread, act: ActFork) -> Callable[[], None]:
        def apply() -> None:
            child = Thread(App(act.thunk, UNIT_E))
            self.proc = _replace(self.proc, thread, Par(Thread(act.k()), child))

        return apply

    def _apply_new(self, thread: Thread, act: ActNew) -> Callable[[], None]:
        def apply() -> None:
            x, y = self._fresh_pair()
            wrapped = New(x, y, nf_pos(act.ann), Thread(act.k(x, y)))
            self.proc = _replace(self.proc, thread, wrapped)

        return apply

    def _msg_transition(
        self, nu: New, sender, receiver, x_sends: bool
    ) -> Optional[_Transition]:
        s_thread, s_off, s_path = sender
        r_thread, r_off, _ = receiver
        idx = next(i for i, n in enumerate(s_path) if n is nu)
        below = s_path[idx + 1 :]
        bound_below = {n for inner in below for n in (inner.x, inner.y)}
        escaping = free_expr_vars(s_off.value) & bound_below
        lifted: Optional[New] = None
        if escaping:
            v = s_off.value
            if not (isinstance(v, EVar) and escaping == {v.name}):
                return None  # the value drags a bound endpoint out of its scope
            lifted = next(n for n in below if v.name in (n.x, n.y))
        if lifted is not None:
            send_lbl: Label = LScope(lifted.x, lifted.y, s_off.chan, s_off.value.name)
            rule = "open"
        else:
            send_lbl = LSendV(s_off.chan, s_off.value)
            rule = "msg"
        label = LParPair(send_lbl, LRecvV(r_off.chan, s_off.value))

        def apply() -> None:
            s_thread.expr = s_off.k()
            r_thread.expr = r_off.k(s_off.value)
            x_lbl = (
                LSendV(nu.x, s_off.value) if x_sends else LRecvV(nu.x, s_off.value)
            )
            nu.ann = advance_endpoint(nu.ann, x_lbl, self.env)
            if lifted is not None:
                nu.body = New(lifted.x, lifted.y, lifted.ann, _unwrap(nu.body, lifted))

        return _Transition(label, rule, apply)

    def _tag_transition(self, nu: New, sender, receiver, x_sends: bool) -> _Transition:
        s_thread, s_off, _ = sender
        r_thread, r_off, _ = receiver
        label = LParPair(LSendC(s_off.chan, s_off.ctor), LRecvC(r_off.chan, s_off.ctor))

        def apply() -> None:
            s_thread.expr = s_off.k()
            r_thread.expr = r_off.arms[s_off.ctor]()
            x_lbl = LSendC(nu.x, s_off.ctor) if x_sends else LRecvC(nu.x, s_off.ctor)
            nu.ann = advance_endpoint(nu.ann, x_lbl, self.env)

        return _Transition(label, "bra", apply)

    def _close_transition(self, nu: New, sender, receiver) -> _Transition:
        s_thread, s_off, _ = sender
        r_thread, r_off, _ = receiver
        label = LParPair(LTerm(s_off.chan), LClose(r_off.chan))

        def apply() -> None:
            s_thread.expr = s_off.k()
            r_thread.expr = r_off.k()
            self.proc = _unwrap(self.proc, nu)

        return _Transition(label, "close", apply)

    # -- driving ---------------------------------------------------------

    def step(self) -> Optional[dict]:
        """Perform one enabled transition; None when there is none."""

        trans = self.enabled()
        if not trans:
            return None
        if self.policy == "random":
            t = self.rng.choice(trans)
        else:
            t = trans[self._rr % len(trans)]
            self._rr += 1
        t.apply()
        self.steps += 1
        self.fuel -= 1
        if self.trace is not None:
            self.trace.append(t.label)
        record = {
            "step": self.steps,
            "label": t.label.render(),
            "rule": t.rule,
            "fuel": self.fuel,
        }
        if self.on_step is not None:
            self.on_step(record)
        return record

    def classify(self) -> Outcome:
        """Name the current halted state."""

        trans, (offers, stucks, nus, by_chan), all_values = self._enabled_full()
        if all_values:
            return Outcome("completed", self.steps, self.proc)
        if trans:
            return Outcome("fuel", self.steps, self.proc)
        if stucks:
            reasons = [f"{expr_str(t.expr)}: {r}" for t, r in stucks]
            return Outcome("stuck", self.steps, self.proc, witness=reasons)
        # Every restriction gets one line of evidence that nothing in its
        # progress set is enabled.
        witness = []
        for nu in nus:
            sides = []
            for name in (nu.x, nu.y):
                entry = by_chan.get(name)
                sides.append(f"{name} {_offer_desc(entry[1]) if entry else 'not offered'}")
            witness.append(f"nu {nu.x} {nu.y} [{type_str(nu.ann)}]: " + ", ".join(sides))
        bound = {n for nu in nus for n in (nu.x, nu.y)}
        for chan, (_, off, _) in sorted(by_chan.items()):
            if chan not in bound:
                witness.append(f"{chan} {_offer_desc(off)}, endpoint not under any restriction")
        return Outcome("deadlock", self.steps, self.proc, witness=witness)

    def run(self, after_step: Optional[Callable[[dict], None]] = None) -> Outcome:
        while self.fuel > 0:
            record = self.step()
            if record is None:
                return self.classify()
            if after_step is not None:
                after_step(record)
        return self.classify()

    def endpoint_census(self) -> dict[str, int]:
        """How many threads mention each restricted endpoint; linearity at
        runtime means no count exceeds one."""

        counts: dict[str, int] = {}
        bound: set[str] = set()

        def collect(p: Proc) -> None:
            if isinstance(p, New):
                bound.update((p.x, p.y))
                collect(p.body)
            elif isinstance(p, Par):
                collect(p.left)
                collect(p.right)

        collect(self.proc)
        for t in threads(self.proc):
            for name in free_expr_vars(t.expr) & bound:
                counts[name] = counts.get(name, 0) + 1
        return counts


def _offer_desc(off: StepResult) -> str:
    if isinstance(off, OfferSend):
        return f"offers send of {expr_str(off.value)}"
    if isinstance(off, OfferRecv):
        return "offers receive"
    if isinstance(off, OfferSelect):
        return f"offers select {off.ctor}"
    if isinstance(off, OfferBranch):
        return f"offers branches {{{', '.join(sorted(off.arms))}}}"
    if isinstance(off, OfferWait):
        return "offers wait"
    if isinstance(off, OfferTerminate):
        return "offers terminate"
    return "is blocked"


def _replace(p: Proc, target: Thread, replacement: Proc) -> Proc:
    if p is target:
        return replacement
    if isinstance(p, Par):
        return Par(
            _replace(p.left, target, replacement),
            _replace(p.right, target, replacement),
        )
    if isinstance(p, New):
        p.body = _replace(p.body, target, replacement)
        return p
    return p


def _unwrap(p: Proc, target: New) -> Proc:
    """Splice a restriction node out, leaving its body."""

    if p is target:
        return p.body
    if isinstance(p, Par):
        return Par(_unwrap(p.left, target), _unwrap(p.right, target))
    if isinstance(p, New):
        p.body = _unwrap(p.body, target)
        return p
    return p


# ---------------------------------------------------------------------------
# Entry points


def run_program(
    env: GlobalEnv,
    entry: str = "main",
    fuel: int = 10_000,
    policy: str = "roundRobin",
    seed: int = 0,
    on_step: Optional[Callable[[dict], None]] = None,
    keep_trace: bool = False,
) -> Outcome:
    """Run a checked program from a top-level definition."""

    if entry not in env.def_exprs:
        raise KeyError(f"no definition named {entry}")
    machine = Machine(
        Thread(EVar(entry)), env,
        fuel=fuel, policy=policy, seed=seed,
        on_step=on_step, keep_trace=keep_trace,
    )
    return machine.run()


def check_preservation(
    env: GlobalEnv,
    entry: str = "main",
    fuel: int = 10_000,
    policy: str = "roundRobin",
    seed: int = 0,
) -> tuple[Outcome, list[str]]:
    """Run a program and re-type the whole process after every transition.

    Two independent records of the endpoint types are compared at every
    step: the annotations on the restriction nodes, advanced by the machine,
    and a context replayed label by label through step_ctx. Any step after
    which re-typing fails, the label fails to apply, or the two records
    disagree produces a report line. A correct machine on a well-typed
    program reports nothing.
    """

    from .typecheck import type_process

    if entry not in env.def_exprs:
        raise KeyError(f"no definition named {entry}")
    machine = Machine(
        Thread(EVar(entry)), env,
        fuel=fuel, policy=policy, seed=seed, keep_trace=True,
    )
    root_ty = nf_pos(env.sigs[entry])
    report: list[str] = []
    gamma: dict[str, Type] = {}

    def after(record: dict) -> None:
        nonlocal gamma
        label = machine.trace[-1]
        shown = record["label"]
        step_no = record["step"]
        # A transition that does not apply to its own annotation leaves None
        # behind; report it here instead of tripping over it below.
        lost = [
            f"step {step_no} [{shown}]: restriction {nu.x} {nu.y} lost its annotation"
            for nu in _restrictions(machine.proc)
            if nu.ann is None
        ]
        if lost:
            report.extend(lost)
            return
        sink = type_process(machine.proc, env, root_ty=root_ty)
        if sink.has_errors:
            msgs = "; ".join(d.msg for d in sink.errors())
            report.append(f"step {step_no} [{shown}]: process no longer types: {msgs}")
        nxt = step_ctx(gamma, label, env)
        if nxt is None:
            report.append(f"step {step_no} [{shown}]: label does not apply to the endpoint context")
            return
        gamma = nxt
        live = _live_context(machine.proc)
        if set(gamma) != set(live):
            report.append(
                f"step {step_no} [{shown}]: context names {sorted(gamma)} "
                f"!= restriction names {sorted(live)}"
            )
            return
        for name, ty in live.items():
            if not alpha_equal(gamma[name], ty):
                report.append(
                    f"step {step_no} [{shown}]: {name} is {type_str(gamma[name])} "
                    f"by label replay but {type_str(ty)} by annotation"
                )

    outcome = machine.run(after_step=after)
    return outcome, report


def _restrictions(p: Proc) -> Iterator[New]:
    stack = [p]
    while stack:
        node = stack.pop()
        if isinstance(node, New):
            yield node
            stack.append(node.body)
        elif isinstance(node, Par):
            stack.append(node.left)
            stack.append(node.right)


def _live_context(p: Proc) -> dict[str, Type]:
    """Endpoint context read off the restriction annotations."""

    out: dict[str, Type] = {}

    def go(p: Proc) -> None:
        if isinstance(p, New):
            out[p.x] = p.ann
            out[p.y] = nf_neg(p.ann)
            go(p.body)
        elif isinstance(p, Par):
            go(p.left)
            go(p.right)

    go(p)
    return out
