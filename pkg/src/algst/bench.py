"""Random instances and the timing harness for type equivalence.

An instance is a family of (possibly mutually recursive) protocol
declarations plus one closed session type referencing them. From a subject
type the harness derives a guaranteed-equivalent variant, by re-encoding it
through the conversion identities (duality pushed across prefixes, polarity
flips compensated with a negation, double negations), and a guaranteed
non-equivalent one, by mutating a single site. Timing `equiv` on such pairs
over growing sizes and fitting a log-log line checks that deciding
equivalence scales linearly.

Randomness comes from `random.Random` (Mersenne Twister), one private
instance per call seeded from the arguments, so every generated artifact is
reproducible from its seed alone and independent calls cannot disturb each
other.

Subjects are long chains of communication prefixes. All code here walks
those chains with loops, only payloads (which the generator keeps shallow)
are handled recursively; the same types would blow the recursion limit in
the declaration-sized checker, so the subject's kinding is verified by the
iterative `subject_is_session` twin below, which tests cross-check against
the checker on small instances.
"""

from __future__ import annotations

import csv
import gc
import io
import statistics
import time
from dataclasses import dataclass
from math import log2
from random import Random
from typing import Optional

from .diagnostics import DiagnosticSink
from .kinds import GlobalEnv, check_kind, check_program_kinds
from .normalize import equiv as default_equiv
from .normalize import BACKEND, get_kernel
from .syntax import (
    Base,
    CtorDecl,
    Dual,
    EndTerm,
    EndWait,
    Forall,
    Fun,
    In,
    Kind,
    Neg,
    Out,
    Pair,
    Program,
    ProtoApp,
    ProtocolDecl,
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
    Unit,
    Var,
    size,
)

_BASES = ("Int", "Char", "String", "Bool")


@dataclass(slots=True)
class Instance:
    decls: list[ProtocolDecl]
    env: GlobalEnv
    subject: Type
    size: int


# ---------------------------------------------------------------------------
# Instance generation


def _gen_decls(rng: Random) -> list[ProtocolDecl]:
    n = rng.randint(1, 4)
    arities = [rng.randint(0, 2) for _ in range(n)]
    names = [f"P{i}" for i in range(n)]
    decls = []
    for i, name in enumerate(names):
        params = tuple(f"a{j}" for j in range(arities[i]))
        ctors = []
        for j in range(rng.randint(1, 4)):
            fields = tuple(
                _gen_field(rng, params, names, arities)
                for _ in range(rng.randint(0, 3))
            )
            ctors.append(CtorDecl(f"{name}C{j}", fields))
        decls.append(ProtocolDecl(name, params, tuple(ctors)))
    return decls


def _gen_field(rng: Random, params, names, arities) -> Type:
    inner = _gen_field_atom(rng, params, names, arities)
    if rng.random() < 0.3:  # negation allowed at payload top level only
        return Neg(inner)
    return inner


def _gen_field_atom(rng: Random, params, names, arities) -> Type:
    r = rng.random()
    if r < 0.40 or (r < 0.60 and not params):
        return Base(rng.choice(_BASES))
    if r < 0.60:
        return Var(rng.choice(params))
    if r < 0.85:
        i = rng.randrange(len(names))
        args = tuple(
            Base(rng.choice(_BASES))
            if (rng.random() < 0.6 or not params)
            else Var(rng.choice(params))
            for _ in range(arities[i])
        )
        return ProtoApp(names[i], args)
    return EndWait() if rng.random() < 0.5 else EndTerm()


def _gen_payload(rng: Random, budget: int, env: GlobalEnv, depth: int = 0) -> Type:
    """A closed protocol-kinded payload of at most `budget` nodes."""

    if budget >= 2 and depth == 0 and rng.random() < 0.35:
        return Neg(_gen_payload_body(rng, budget - 1, env, depth))
    return _gen_payload_body(rng, budget, env, depth)


def _gen_payload_body(rng: Random, budget: int, env: GlobalEnv, depth: int) -> Type:
    choices = list(env.protocols.values())
    r = rng.random()
    if budget >= 3 and depth < 2 and r < 0.25:
        inner = _gen_payload(rng, budget - 2, env, depth + 1)
        end = EndWait() if rng.random() < 0.5 else EndTerm()
        return (In if rng.random() < 0.5 else Out)(inner, end)
    if r < 0.55:
        fitting = [p for p in choices if 1 + len(p.params) <= budget]
        if fitting:
            p = rng.choice(fitting)
            return ProtoApp(p.name, tuple(Base(rng.choice(_BASES)) for _ in p.params))
    if r < 0.65:
        return EndWait() if rng.random() < 0.5 else EndTerm()
    return Base(rng.choice(_BASES))


def gen_instance(seed: int, target_size: int) -> Instance:
    """Deterministic random instance whose subject lands within 10% of
    `target_size` nodes (exact for everything but the smallest targets)."""

    if target_size < 3:
        raise ValueError("target_size must be at least 3")
    rng = Random(seed)
    for _attempt in range(20):
        decls = _gen_decls(rng)
        sink = DiagnosticSink()
        env = check_program_kinds(Program(list(decls)), sink)
        if sink.has_errors:  # out-of-contract; regenerate
            continue
        subject = _gen_subject(rng, target_size, env)
        n = size(subject)
        if abs(n - target_size) <= max(1, target_size // 10) and subject_is_session(
            subject, env
        ):
            return Instance(decls, env, subject, n)
        target_size = max(3, target_size - 1)  # shrink a little and retry
    raise RuntimeError("instance generation kept missing its size window")


def _gen_subject(rng: Random, target: int, env: GlobalEnv) -> Type:
    acc: Type = EndWait() if rng.random() < 0.5 else EndTerm()
    prefixes: list[tuple[bool, Type]] = []
    remaining = target - 1
    while remaining >= 2:
        cap = min(remaining - 1, 9)
        payload = _gen_payload(rng, max(1, cap), env)
        prefixes.append((rng.random() < 0.5, payload))
        remaining -= 1 + size(payload)
        if remaining > 1 and rng.random() < 0.08:
            prefixes.append((True, None))  # a duality wrapper, one node
            remaining -= 1
    for is_in, payload in reversed(prefixes):
        if payload is None:
            acc = Dual(acc)
        else:
            acc = In(payload, acc) if is_in else Out(payload, acc)
    return acc


def subject_is_session(t: Type, env: GlobalEnv) -> bool:
    """Session-kinding of a closed subject, iterative along the prefix chain
    so million-node chains are fine; payload checking reuses the checker,
    which is safe because generated payloads are shallow."""

    sink = DiagnosticSink()
    while True:
        tag = t.tag
        if tag in (TAG_IN, TAG_OUT):
            check_kind(t.payload, Kind.P, {}, env, sink)
            if sink.has_errors:
                return False
            t = t.cont
        elif tag == TAG_DUAL:
            t = t.body
        elif tag in (TAG_ENDW, TAG_ENDT):
            return True
        else:
            return False


# ---------------------------------------------------------------------------
# Equivalent and non-equivalent variants


def _split_spine(t: Type) -> tuple[list[tuple[bool, Type]], Type, int]:
    """Decompose a subject into semantic prefixes and terminator: duality
    wrappers are folded away into the direction bits (a wrapper flips every
    direction underneath it and the terminator, payloads are untouched)."""

    sem: list[tuple[bool, Type]] = []
    parity = 0
    while True:
        tag = t.tag
        if tag == TAG_DUAL:
            parity ^= 1
            t = t.body
        elif tag in (TAG_IN, TAG_OUT):
            is_in = (tag == TAG_IN) ^ bool(parity)
            sem.append((is_in, t.payload))
            t = t.cont
        else:
            return sem, t, parity


def _flip_end(t: Type) -> Type:
    return EndTerm() if t.tag == TAG_ENDW else EndWait()


def _reencode_payload(p: Type, rng: Random) -> Type:
    """An equivalent payload: double negations dropped or inserted, children
    rewritten the same way."""

    if p.tag == TAG_NEG and p.body.tag == TAG_NEG and rng.random() < 0.6:
        return _reencode_payload(p.body.body, rng)
    if rng.random() < 0.15:
        return Neg(Neg(_reencode_payload(p, rng)))
    if p.tag == TAG_NEG:
        return Neg(_reencode_payload(p.body, rng))
    if p.tag == TAG_PROTO and p.args:
        return ProtoApp(p.name, tuple(_reencode_payload(a, rng) for a in p.args))
    if p.tag in (TAG_IN, TAG_OUT):
        mk = In if p.tag == TAG_IN else Out
        return mk(_reencode_payload(p.payload, rng), _reencode_payload(p.cont, rng))
    return p


def gen_equivalent(inst: Instance, seed: int) -> Type:
    """A type equivalent to the subject by construction: same semantic
    prefix sequence, re-encoded with fresh duality wrappers, direction flips
    compensated by a negation, and double negations sprinkled into
    payloads."""

    rng = Random(seed)
    sem, term, parity = _split_spine(inst.subject)
    if parity:
        term = _flip_end(term)
    n = len(sem)
    # Duality wrappers start at random positions; each one flips the
    # encoding of everything after it.
    toggle_p = min(0.15, 6 / (n + 1))
    toggles = [rng.random() < toggle_p for _ in range(n + 1)]
    depth = [0] * (n + 1)
    run = 0
    for i in range(n + 1):
        if toggles[i]:
            run ^= 1
        depth[i] = run
    acc = _flip_end(term) if depth[n] else term
    if toggles[n]:
        acc = Dual(acc)
    for i in range(n - 1, -1, -1):
        is_in, payload = sem[i]
        is_in ^= bool(depth[i])
        payload = _reencode_payload(payload, rng)
        if rng.random() < 0.4:  # flip the direction, negate to compensate
            is_in = not is_in
            if payload.tag == TAG_NEG:
                payload = payload.body
            else:
                payload = Neg(payload)
        acc = In(payload, acc) if is_in else Out(payload, acc)
        if toggles[i]:
            acc = Dual(acc)
    return acc


def _payload_sites(p: Type, kind: str) -> int:
    """Count mutation sites of one kind inside a payload: "base" counts base
    nodes, "end" terminators, "wrap" value-kinded subterms."""

    n = 0
    stack = [p]
    while stack:
        t = stack.pop()
        tag = t.tag
        if kind == "base" and tag == TAG_BASE:
            n += 1
        elif kind == "end" and tag in (TAG_ENDW, TAG_ENDT):
            n += 1
        elif kind == "wrap" and tag in (
            TAG_BASE, TAG_UNIT, TAG_ENDW, TAG_ENDT, TAG_IN, TAG_OUT, TAG_DUAL,
            TAG_FUN, TAG_PAIR, TAG_FORALL,
        ):
            n += 1
        if tag == TAG_NEG:
            stack.append(t.body)
        elif tag == TAG_PROTO:
            stack.extend(t.args)
        elif tag in (TAG_IN, TAG_OUT):
            stack.append(t.payload)
            stack.append(t.cont)
        elif tag == TAG_DUAL:
            stack.append(t.body)
    return n


def _mutate_payload(p: Type, kind: str, idx: int, rng: Random) -> tuple[Type, int]:
    """Rebuild `p` with the idx-th site of the kind mutated; returns the new
    payload and how many sites were passed (idx < 0 once it fired)."""

    def hit(t: Type) -> Type:
        if kind == "base":
            return Base(rng.choice([b for b in _BASES if b != t.name]))
        if kind == "end":
            return _flip_end(t)
        return Forall("q", Kind.S, t)

    def go(t: Type, idx: int) -> tuple[Type, int]:
        tag = t.tag
        matches = (
            (kind == "base" and tag == TAG_BASE)
            or (kind == "end" and tag in (TAG_ENDW, TAG_ENDT))
            or (
                kind == "wrap"
                and tag in (
                    TAG_BASE, TAG_UNIT, TAG_ENDW, TAG_ENDT, TAG_IN, TAG_OUT,
                    TAG_DUAL, TAG_FUN, TAG_PAIR, TAG_FORALL,
                )
            )
        )
        if matches:
            if idx == 0:
                return hit(t), -1
            idx -= 1
        if tag == TAG_NEG:
            body, idx = go(t.body, idx)
            return Neg(body), idx
        if tag == TAG_PROTO:
            args = []
            for a in t.args:
                a2, idx = go(a, idx)
                args.append(a2)
            return ProtoApp(t.name, tuple(args)), idx
        if tag in (TAG_IN, TAG_OUT):
            payload, idx = go(t.payload, idx)
            cont, idx = go(t.cont, idx)
            return (In if tag == TAG_IN else Out)(payload, cont), idx
        if tag == TAG_DUAL:
            body, idx = go(t.body, idx)
            return Dual(body), idx
        return t, idx

    return go(p, idx)


def gen_nonequivalent(inst: Instance, seed: int) -> Type:
    """A type differing from the subject at exactly one site: a base type
    replaced, a terminator flipped, or a value-kinded subterm wrapped in a
    fresh quantifier. Checked non-equivalent before being returned."""

    rng = Random(seed)
    for _ in range(20):
        candidate = _mutate_once(inst.subject, rng)
        if not default_equiv(inst.subject, candidate):
            return candidate
    raise RuntimeError("mutation kept producing equivalent types")


def _mutate_once(subject: Type, rng: Random) -> Type:
    sem, term, parity = _split_spine(subject)
    # Raw prefixes, wrappers preserved, so the rebuild is exact.
    raw: list[tuple[int, Type]] = []
    t = subject
    while t.tag in (TAG_IN, TAG_OUT, TAG_DUAL):
        if t.tag == TAG_DUAL:
            raw.append((TAG_DUAL, None))
            t = t.body
        else:
            raw.append((t.tag, t.payload))
            t = t.cont
    raw_term = t

    kind = rng.choice(["base", "end", "wrap"])
    counts = [
        _payload_sites(p, kind) if p is not None else 0 for _, p in raw
    ]
    total = sum(counts)
    term_site = 1 if kind in ("end", "wrap") else 0
    if total + term_site == 0:
        kind = "end"
        counts = [0] * len(raw)
        total, term_site = 0, 1
    pick = rng.randrange(total + term_site)
    if pick >= total:  # mutate the terminator itself
        new_term = (
            _flip_end(raw_term) if kind != "wrap" else Forall("q", Kind.S, raw_term)
        )
        return _rebuild(raw, new_term)
    out = list(raw)
    for i, c in enumerate(counts):
        if pick < c:
            mutated, left = _mutate_payload(raw[i][1], kind, pick, rng)
            assert left < 0
            out[i] = (raw[i][0], mutated)
            break
        pick -= c
    return _rebuild(out, raw_term)


def _rebuild(raw: list[tuple[int, Type]], term: Type) -> Type:
    acc = term
    for tag, payload in reversed(raw):
        if tag == TAG_DUAL:
            acc = Dual(acc)
        else:
            acc = (In if tag == TAG_IN else Out)(payload, acc)
    return acc


# ---------------------------------------------------------------------------
# Small closed types for cross-checking against the conversion oracle

_SMALL_DECLS = [
    ProtocolDecl("Q0", (), (CtorDecl("Q0A", ()), CtorDecl("Q0B", (Base("Int"),)))),
    ProtocolDecl(
        "Q1",
        ("a",),
        (CtorDecl("Q1A", (Var("a"), Neg(ProtoApp("Q1", (Var("a"),))))),),
    ),
]

_small_env: Optional[GlobalEnv] = None


def small_env() -> GlobalEnv:
    """Fixed two-protocol context shared by all small generated types."""

    global _small_env
    if _small_env is None:
        sink = DiagnosticSink()
        env = check_program_kinds(Program(list(_SMALL_DECLS)), sink)
        assert not sink.has_errors, sink.render_all()
        _small_env = env
    return _small_env


def gen_small_type(rng: Random, budget: int, want: Kind, delta=None) -> Type:
    """A closed well-kinded type of at most `budget` nodes at kind `want`,
    over small_env(); quantifiers introduce the only variables."""

    delta = delta or {}
    if want == Kind.S:
        return _small_session(rng, budget, delta)
    if want == Kind.T:
        return _small_value(rng, budget, delta)
    return _small_proto(rng, budget, delta)


def _svars(delta, k: Kind):
    return [v for v, kk in delta.items() if kk == k]


def _small_session(rng: Random, budget: int, delta) -> Type:
    svs = _svars(delta, Kind.S)
    r = rng.random()
    if budget >= 2 and svs and r < 0.15:
        return Dual(Var(rng.choice(svs)))
    if svs and r < 0.3:
        return Var(rng.choice(svs))
    if budget >= 3 and r < 0.75:
        pb = rng.randint(1, max(1, min(budget - 2, 5)))
        payload = _small_proto(rng, pb, delta)
        cont = _small_session(rng, budget - 1 - size(payload), delta)
        return (In if rng.random() < 0.5 else Out)(payload, cont)
    if budget >= 2 and r < 0.85:
        return Dual(_small_session(rng, budget - 1, delta))
    return EndWait() if rng.random() < 0.5 else EndTerm()


def _small_value(rng: Random, budget: int, delta) -> Type:
    tvs = _svars(delta, Kind.T)
    r = rng.random()
    if tvs and r < 0.15:
        return Var(rng.choice(tvs))
    if budget >= 3 and r < 0.35:
        mk = Fun if rng.random() < 0.5 else Pair
        a = _small_value(rng, (budget - 1) // 2, delta)
        b = _small_value(rng, budget - 1 - size(a), delta)
        return mk(a, b)
    if budget >= 3 and r < 0.5:
        var = f"v{len(delta)}"
        k = rng.choice((Kind.S, Kind.T, Kind.P))
        inner = dict(delta)
        inner[var] = k
        return Forall(var, k, _small_value(rng, budget - 1, inner))
    if r < 0.7:
        return _small_session(rng, budget, delta)
    if r < 0.85:
        return Base(rng.choice(_BASES))
    return Unit()


def _small_proto(rng: Random, budget: int, delta) -> Type:
    pvs = _svars(delta, Kind.P)
    r = rng.random()
    if budget >= 2 and r < 0.3:
        return Neg(_small_proto(rng, budget - 1, delta))
    if pvs and r < 0.45:
        return Var(rng.choice(pvs))
    if r < 0.6:
        if budget >= 2 and rng.random() < 0.5:
            return ProtoApp("Q1", (_small_proto(rng, budget - 1, delta),))
        return ProtoApp("Q0", ())
    if r < 0.8:
        return _small_session(rng, budget, delta)
    return _small_value(rng, budget, delta)


def gen_small_pair(seed: int) -> tuple[Type, Type]:
    """A pair of closed types of at most 12 nodes each. Mixes unrelated
    draws, single-site mutations, and equivalence-preserving re-encodings,
    so both verdicts show up with plenty of near misses."""

    rng = Random(seed)
    want = rng.choice((Kind.S, Kind.S, Kind.P, Kind.T))
    t = gen_small_type(rng, rng.randint(1, 12), want)
    mode = rng.random()
    if mode < 0.35:
        u = gen_small_type(rng, rng.randint(1, 12), want)
    elif mode < 0.7:
        u = _small_variant(t, rng)
    else:
        u = _small_mutant(t, rng)
    return t, u


def _small_variant(t: Type, rng: Random) -> Type:
    """Equivalent by construction, via a handful of local re-encodings."""

    def go(t: Type, depth: int) -> Type:
        tag = t.tag
        r = rng.random()
        if tag == TAG_IN or tag == TAG_OUT:
            payload, cont = go(t.payload, depth + 1), go(t.cont, depth + 1)
            if r < 0.3:  # flip direction, negate payload
                mk = Out if tag == TAG_IN else In
                if payload.tag == TAG_NEG:
                    return mk(payload.body, cont)
                return mk(Neg(payload), cont)
            if r < 0.45:  # hide under a double dual
                return Dual((Out if tag == TAG_IN else In)(payload, Dual(cont)))
            return (In if tag == TAG_IN else Out)(payload, cont)
        if tag == TAG_ENDW:
            return Dual(EndTerm()) if r < 0.3 else t
        if tag == TAG_ENDT:
            return Dual(EndWait()) if r < 0.3 else t
        if tag == TAG_DUAL:
            body = t.body
            if body.tag == TAG_IN or body.tag == TAG_OUT:  # push inward
                mk = Out if body.tag == TAG_IN else In
                return go(mk(body.payload, Dual(body.cont)), depth)
            if body.tag == TAG_ENDW:
                return EndTerm()
            if body.tag == TAG_ENDT:
                return EndWait()
            if body.tag == TAG_DUAL:
                return go(body.body, depth)
            return Dual(go(body, depth + 1))
        if tag == TAG_NEG:
            if t.body.tag == TAG_NEG and r < 0.5:
                return go(t.body.body, depth)
            return Neg(go(t.body, depth + 1))
        if tag == TAG_PROTO:
            t2 = ProtoApp(t.name, tuple(go(a, depth + 1) for a in t.args))
            return Neg(Neg(t2)) if r < 0.15 else t2
        if tag == TAG_FUN:
            return Fun(go(t.dom, depth + 1), go(t.cod, depth + 1))
        if tag == TAG_PAIR:
            return Pair(go(t.fst, depth + 1), go(t.snd, depth + 1))
        if tag == TAG_FORALL:
            return Forall(t.var, t.kind, go(t.body, depth + 1))
        return t

    return go(t, 0)


def _small_mutant(t: Type, rng: Random) -> Type:
    """One site changed; may accidentally stay equivalent (the caller's
    business to compare verdicts, not to assume one)."""

    sites = [0]

    def count(t: Type) -> None:
        sites[0] += 1
        tag = t.tag
        if tag in (TAG_IN, TAG_OUT):
            count(t.payload)
            count(t.cont)
        elif tag in (TAG_DUAL, TAG_NEG):
            count(t.body)
        elif tag == TAG_PROTO:
            for a in t.args:
                count(a)
        elif tag == TAG_FUN:
            count(t.dom)
            count(t.cod)
        elif tag == TAG_PAIR:
            count(t.fst)
            count(t.snd)
        elif tag == TAG_FORALL:
            count(t.body)

    count(t)
    target = rng.randrange(sites[0])
    state = [0]

    def hit(t: Type) -> Type:
        tag = t.tag
        if tag == TAG_BASE:
            return Base(rng.choice([b for b in _BASES if b != t.name]))
        if tag == TAG_ENDW:
            return EndTerm()
        if tag == TAG_ENDT:
            return EndWait()
        if tag == TAG_IN:
            return Out(t.payload, t.cont)
        if tag == TAG_OUT:
            return In(t.payload, t.cont)
        if tag == TAG_NEG:
            return t.body
        if tag == TAG_DUAL:
            return t.body
        if tag == TAG_UNIT:
            return Base("Int")
        return Neg(t) if rng.random() < 0.5 else t

    def go(t: Type) -> Type:
        i = state[0]
        state[0] += 1
        if i == target:
            return hit(t)
        tag = t.tag
        if tag in (TAG_IN, TAG_OUT):
            return (In if tag == TAG_IN else Out)(go(t.payload), go(t.cont))
        if tag == TAG_DUAL:
            return Dual(go(t.body))
        if tag == TAG_NEG:
            return Neg(go(t.body))
        if tag == TAG_PROTO:
            return ProtoApp(t.name, tuple(go(a) for a in t.args))
        if tag == TAG_FUN:
            return Fun(go(t.dom), go(t.cod))
        if tag == TAG_PAIR:
            return Pair(go(t.fst), go(t.snd))
        if tag == TAG_FORALL:
            return Forall(t.var, t.kind, go(t.body))
        return t

    return go(t)


# ---------------------------------------------------------------------------
# Timing


def bench_equiv(
    sizes: list[int],
    reps: int = 5,
    seed: int = 0,
    backend: Optional[str] = None,
) -> dict:
    """Time `equiv` on equivalent and non-equivalent pairs at each size.

    Returns rows (size, kind, median/p10/p90 in ns) and a least-squares fit
    of log2(median) against log2(size) per kind; a slope near one is what
    linear scaling looks like on that plot. Garbage collection is paused
    around the timed region.
    """

    kernel_equiv = get_kernel(backend).equiv if backend else default_equiv
    used_backend = backend or BACKEND
    rows: list[dict] = []
    for target in sizes:
        inst = gen_instance(seed * 1_000_003 + target, target)
        pairs = (
            ("eq", gen_equivalent(inst, seed + 1), True),
            ("neq", gen_nonequivalent(inst, seed + 2), False),
        )
        for kind, other, expect in pairs:
            got = kernel_equiv(inst.subject, other)  # warm-up and sanity
            if got is not expect:
                raise AssertionError(
                    f"equiv({kind} pair at size {inst.size}) = {got}, expected {expect}"
                )
            times = []
            gc.disable()
            try:
                for _ in range(reps):
                    t0 = time.perf_counter_ns()
                    kernel_equiv(inst.subject, other)
                    times.append(time.perf_counter_ns() - t0)
            finally:
                gc.enable()
            times.sort()
            if len(times) >= 2:
                qs = statistics.quantiles(times, n=10, method="inclusive")
                p10, p90 = qs[0], qs[8]
            else:
                p10 = p90 = times[0]
            rows.append(
                {
                    "size": inst.size,
                    "kind": kind,
                    "median_ns": int(statistics.median(times)),
                    "p10_ns": int(p10),
                    "p90_ns": int(p90),
                }
            )
    return {
        "backend": used_backend,
        "reps": reps,
        "seed": seed,
        "rows": rows,
        "fit": {
            kind: _fit_loglog([r for r in rows if r["kind"] == kind])
            for kind in ("eq", "neq")
        },
    }


def _fit_loglog(rows: list[dict]) -> dict:
    xs = [log2(r["size"]) for r in rows]
    ys = [log2(max(1, r["median_ns"])) for r in rows]
    if len(rows) < 2 or len(set(xs)) < 2:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan")}
    fit = statistics.linear_regression(xs, ys)
    r = statistics.correlation(xs, ys)
    return {"slope": fit.slope, "intercept": fit.intercept, "r2": r * r}


def rows_to_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    w = csv.DictWriter(out, fieldnames=["size", "kind", "median_ns", "p10_ns", "p90_ns"])
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return out.getvalue()
