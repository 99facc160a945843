"""Type normalization, equivalence, and the slow conversion oracle.

Fast path: `nf_pos`/`nf_neg` compute normal forms in one linear pass and
`equiv` compares them up to alpha. The kernel is picked at import: the
compiled extension when built, else the pure-Python twin; setting ALGST_PURE=1
forces the fallback.

Slow path: `oracle_conv` decides convertibility directly, by exhaustive
search over the conversion axioms applied in both directions at every
position. It exists to cross-check `equiv` and shares none of its code.
"""

from __future__ import annotations

import os
from collections import deque
from typing import Optional

from .syntax import (
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
    ProtoApp,
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
    canonical_key,
    size,
)
from . import _nf_py

if os.environ.get("ALGST_PURE"):
    _kernel = _nf_py
else:
    try:
        from . import _nf_c as _kernel  # type: ignore[no-redef]
    except ImportError:
        _kernel = _nf_py

BACKEND: str = _kernel.BACKEND


def available_backends() -> list[str]:
    names = ["py"]
    try:
        from . import _nf_c  # noqa: F401

        names.append("c")
    except ImportError:
        pass
    return names


def get_kernel(name: str):
    if name == "py":
        return _nf_py
    if name == "c":
        from . import _nf_c

        return _nf_c
    raise ValueError(f"unknown backend {name!r} (have: {', '.join(available_backends())})")


def nf_pos(t: Type) -> Type:
    """Normal form."""

    return _kernel.nf(t, False)


def nf_neg(t: Type) -> Type:
    """Normal form of the dual; `t` must be session-kinded."""

    return _kernel.nf(t, True)


def equiv(t: Type, u: Type) -> bool:
    """Type equivalence, linear in the input sizes."""

    return _kernel.equiv(t, u)


def negate(t: Type) -> Type:
    """Polarity flip on a type already in normal form: toggles a leading
    negation instead of stacking a second one."""

    return t.body if t.tag == TAG_NEG else Neg(t)


def tosession(p: Type, s: Type) -> Type:
    """Turn a normal-form protocol step into a session prefix on `s`:
    a negated payload is something to receive, anything else is sent."""

    if p.tag == TAG_NEG:
        return In(p.body, s)
    return Out(p, s)


# ---------------------------------------------------------------------------
# Conversion oracle


class OracleOutOfFuel(Exception):
    """The search hit its step budget before proving either answer."""


def _synth_kind(t: Type, env: dict[str, Kind]) -> Kind:
    tag = t.tag
    if tag in (TAG_UNIT, TAG_BASE, TAG_FUN, TAG_PAIR, TAG_FORALL):
        return Kind.T
    if tag == TAG_VAR:
        return env.get(t.name, Kind.S)
    if tag in (TAG_IN, TAG_OUT, TAG_ENDW, TAG_ENDT, TAG_DUAL):
        return Kind.S
    return Kind.P  # ProtoApp, Neg


def _rewrites(t: Type, ck: Kind, env: dict[str, Kind], cap: int):
    """All single-step conversions of `t`, at the root or inside, that keep
    the result within the size cap. `ck` is the kind the position demands."""

    tag = t.tag

    # Root steps, forward direction (the size-non-increasing ones).
    if tag == TAG_DUAL:
        b = t.body
        if b.tag == TAG_ENDW:
            yield EndTerm()
        elif b.tag == TAG_ENDT:
            yield EndWait()
        elif b.tag == TAG_IN:
            yield Out(b.payload, Dual(b.cont))
        elif b.tag == TAG_OUT:
            yield In(b.payload, Dual(b.cont))
        elif b.tag == TAG_DUAL:
            yield b.body
    elif tag == TAG_IN:
        if t.payload.tag == TAG_NEG:
            yield Out(t.payload.body, t.cont)
        if t.cont.tag == TAG_DUAL:
            yield Dual(Out(t.payload, t.cont.body))
    elif tag == TAG_OUT:
        if t.payload.tag == TAG_NEG:
            yield In(t.payload.body, t.cont)
        if t.cont.tag == TAG_DUAL:
            yield Dual(In(t.payload, t.cont.body))
    elif tag == TAG_NEG:
        if t.body.tag == TAG_NEG:
            yield t.body.body

    # Root steps, reverse direction (growing, bounded by the cap).
    n = size(t)
    if tag == TAG_ENDT and n + 1 <= cap:
        yield Dual(EndWait())
    elif tag == TAG_ENDW and n + 1 <= cap:
        yield Dual(EndTerm())
    if tag in (TAG_IN, TAG_OUT) and n + 1 <= cap:
        flipped = Out if tag == TAG_IN else In
        yield flipped(Neg(t.payload), t.cont)
    if n + 2 <= cap:
        if _synth_kind(t, env) == Kind.S:
            yield Dual(Dual(t))
        if ck == Kind.P:
            yield Neg(Neg(t))

    # Congruence: rewrite inside one child, rebuild.
    if tag == TAG_FUN:
        for r in _rewrites(t.dom, Kind.T, env, cap - 1 - size(t.cod)):
            yield Fun(r, t.cod)
        for r in _rewrites(t.cod, Kind.T, env, cap - 1 - size(t.dom)):
            yield Fun(t.dom, r)
    elif tag == TAG_PAIR:
        for r in _rewrites(t.fst, Kind.T, env, cap - 1 - size(t.snd)):
            yield Pair(r, t.snd)
        for r in _rewrites(t.snd, Kind.T, env, cap - 1 - size(t.fst)):
            yield Pair(t.fst, r)
    elif tag == TAG_FORALL:
        inner = dict(env)
        inner[t.var] = t.kind
        for r in _rewrites(t.body, Kind.T, inner, cap - 1):
            yield Forall(t.var, t.kind, r)
    elif tag in (TAG_IN, TAG_OUT):
        mk = In if tag == TAG_IN else Out
        for r in _rewrites(t.payload, Kind.P, env, cap - 1 - size(t.cont)):
            yield mk(r, t.cont)
        for r in _rewrites(t.cont, Kind.S, env, cap - 1 - size(t.payload)):
            yield mk(t.payload, r)
    elif tag == TAG_DUAL:
        for r in _rewrites(t.body, Kind.S, env, cap - 1):
            yield Dual(r)
    elif tag == TAG_NEG:
        for r in _rewrites(t.body, Kind.P, env, cap - 1):
            yield Neg(r)
    elif tag == TAG_PROTO:
        rest = 1 + sum(size(a) for a in t.args)
        for i, a in enumerate(t.args):
            for r in _rewrites(a, Kind.P, env, cap - (rest - size(a))):
                yield ProtoApp(t.name, t.args[:i] + (r,) + t.args[i + 1:])


def oracle_conv(
    t: Type,
    u: Type,
    fuel: int = 100_000,
    kinds: Optional[dict[str, Kind]] = None,
    top_kind: Kind = Kind.P,
) -> bool:
    """Decide whether `t` and `u` are convertible, by bidirectional breadth
    first search over single conversion steps.

    Every axiom applied left to right does not grow a type, so any conversion
    between `t` and `u` can be routed through terms no larger than the bigger
    of the two; capping the search there makes the state space finite, and
    exhausting one side without meeting the other is a proof of distinctness.
    Raises OracleOutOfFuel if `fuel` expansions were not enough to reach
    either verdict.

    `kinds` gives kinds of free type variables (session by default);
    `top_kind` is the kind demanded of the whole type.
    """

    env = dict(kinds) if kinds else {}
    cap = max(size(t), size(u))

    key_t = canonical_key(t)
    key_u = canonical_key(u)
    if key_t == key_u:
        return True

    # state per side: visited key set, frontier of (term, key)
    visited = ({key_t}, {key_u})
    frontier = (deque([t]), deque([u]))
    spent = 0
    while True:
        # An exhausted side has fully enumerated its conversion class within
        # the cap; the other term was not in it, so they are distinct.
        if not frontier[0] or not frontier[1]:
            return False
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        cur = frontier[side].popleft()
        spent += 1
        if spent > fuel:
            raise OracleOutOfFuel(f"no verdict after {fuel} expansions")
        for nxt in _rewrites(cur, top_kind, env, cap):
            k = canonical_key(nxt)
            if k in visited[side]:
                continue
            if k in visited[1 - side]:
                return True
            visited[side].add(k)
            frontier[side].append(nxt)
