# cython: language_level=3
"""Compiled normalization kernel. Same stack machine as _nf_py, with the
dispatch ints and the alpha comparison loop lowered to C. Operates on the
ordinary syntax-tree objects, so results are interchangeable with the pure
kernel's."""

from .syntax import (
    Dual,
    END_TERM,
    END_WAIT,
    Fun,
    Forall,
    In,
    Neg,
    Out,
    Pair,
    ProtoApp,
)
from . import syntax as _s

BACKEND = "c"

cdef int T_UNIT = _s.TAG_UNIT
cdef int T_BASE = _s.TAG_BASE
cdef int T_VAR = _s.TAG_VAR
cdef int T_FUN = _s.TAG_FUN
cdef int T_PAIR = _s.TAG_PAIR
cdef int T_FORALL = _s.TAG_FORALL
cdef int T_IN = _s.TAG_IN
cdef int T_OUT = _s.TAG_OUT
cdef int T_ENDW = _s.TAG_ENDW
cdef int T_ENDT = _s.TAG_ENDT
cdef int T_DUAL = _s.TAG_DUAL
cdef int T_PROTO = _s.TAG_PROTO
cdef int T_NEG = _s.TAG_NEG

_END_TERM = END_TERM
_END_WAIT = END_WAIT


def nf(object t, bint negated=False):
    """Normal form of `t`; with `negated` the normal form of `Dual t`."""

    cdef list work_node = [t]
    cdef list work_code = [2 if negated else 0]  # mode*2 + phase
    cdef list out = []
    cdef int code, tag, mode, phase, n
    cdef object node, u, payload, cont, dom, cod
    while work_node:
        node = work_node.pop()
        code = work_code.pop()
        mode = code >> 1
        phase = code & 1
        tag = node.tag
        if phase == 0:
            if mode == 0:
                if tag == T_UNIT or tag == T_BASE or tag == T_VAR or tag == T_ENDW or tag == T_ENDT:
                    out.append(node)
                elif tag == T_DUAL:
                    work_node.append(node.body)
                    work_code.append(2)
                elif tag == T_NEG:
                    work_node.append(node)
                    work_code.append(1)
                    work_node.append(node.body)
                    work_code.append(0)
                elif tag == T_FUN:
                    work_node.append(node)
                    work_code.append(1)
                    work_node.append(node.cod)
                    work_code.append(0)
                    work_node.append(node.dom)
                    work_code.append(0)
                elif tag == T_PAIR:
                    work_node.append(node)
                    work_code.append(1)
                    work_node.append(node.snd)
                    work_code.append(0)
                    work_node.append(node.fst)
                    work_code.append(0)
                elif tag == T_FORALL:
                    work_node.append(node)
                    work_code.append(1)
                    work_node.append(node.body)
                    work_code.append(0)
                elif tag == T_IN or tag == T_OUT:
                    work_node.append(node)
                    work_code.append(1)
                    work_node.append(node.cont)
                    work_code.append(0)
                    work_node.append(node.payload)
                    work_code.append(0)
                elif tag == T_PROTO:
                    work_node.append(node)
                    work_code.append(1)
                    for u in reversed(node.args):
                        work_node.append(u)
                        work_code.append(0)
                else:
                    raise ValueError(f"normalization: unknown node tag {tag}")
            else:
                if tag == T_VAR:
                    out.append(Dual(node))
                elif tag == T_ENDW:
                    out.append(_END_TERM)
                elif tag == T_ENDT:
                    out.append(_END_WAIT)
                elif tag == T_DUAL:
                    work_node.append(node.body)
                    work_code.append(0)
                elif tag == T_IN or tag == T_OUT:
                    work_node.append(node)
                    work_code.append(3)
                    work_node.append(node.cont)
                    work_code.append(2)
                    work_node.append(node.payload)
                    work_code.append(0)
                else:
                    raise ValueError("normalization: Dual applied to a non-session type")
        else:
            if tag == T_NEG:
                u = out.pop()
                out.append(u.body if u.tag == T_NEG else Neg(u))
            elif tag == T_FUN:
                cod = out.pop()
                dom = out.pop()
                if dom is node.dom and cod is node.cod:
                    out.append(node)
                else:
                    out.append(Fun(dom, cod))
            elif tag == T_PAIR:
                cod = out.pop()
                dom = out.pop()
                if dom is node.fst and cod is node.snd:
                    out.append(node)
                else:
                    out.append(Pair(dom, cod))
            elif tag == T_FORALL:
                u = out.pop()
                if u is node.body:
                    out.append(node)
                else:
                    out.append(Forall(node.var, node.kind, u))
            elif tag == T_PROTO:
                n = len(node.args)
                if n:
                    out[-n:] = [ProtoApp(node.name, tuple(out[len(out) - n:]))]
                else:
                    out.append(ProtoApp(node.name, ()))
            else:
                cont = out.pop()
                payload = out.pop()
                if (tag == T_IN) == (mode == 0):
                    if payload.tag == T_NEG:
                        out.append(Out(payload.body, cont))
                    elif tag == T_IN and payload is node.payload and cont is node.cont:
                        out.append(node)
                    else:
                        out.append(In(payload, cont))
                else:
                    if payload.tag == T_NEG:
                        out.append(In(payload.body, cont))
                    elif tag == T_OUT and payload is node.payload and cont is node.cont:
                        out.append(node)
                    else:
                        out.append(Out(payload, cont))
    return out[0]


def nf_pos(t):
    return nf(t, False)


def nf_neg(t):
    return nf(t, True)


def alpha_eq(object t, object u):
    """Alpha-equivalence on types, compiled loop."""

    cdef dict amap = {}
    cdef dict bmap = {}
    cdef int next_id = 0
    cdef int tag
    cdef list stack = [(t, u)]
    cdef object item, a, b, ca, cb
    while stack:
        item = stack.pop()
        if (<tuple> item)[0] is None:  # scope exit marker
            _, va, olda, vb, oldb = <tuple> item
            if olda is None:
                del amap[va]
            else:
                amap[va] = olda
            if oldb is None:
                del bmap[vb]
            else:
                bmap[vb] = oldb
            continue
        a = (<tuple> item)[0]
        b = (<tuple> item)[1]
        tag = a.tag
        if tag != <int> b.tag:
            return False
        if tag == T_VAR:
            ca = amap.get(a.name)
            cb = bmap.get(b.name)
            if ca is None and cb is None:
                if a.name != b.name:
                    return False
            elif ca != cb:
                return False
        elif tag == T_BASE:
            if a.name != b.name:
                return False
        elif tag == T_FORALL:
            if a.kind != b.kind:
                return False
            stack.append((None, a.var, amap.get(a.var), b.var, bmap.get(b.var)))
            stack.append((a.body, b.body))
            amap[a.var] = next_id
            bmap[b.var] = next_id
            next_id += 1
        elif tag == T_PROTO:
            if a.name != b.name or len(<tuple> a.args) != len(<tuple> b.args):
                return False
            stack.extend(zip(a.args, b.args))
        elif tag == T_FUN:
            stack.append((a.dom, b.dom))
            stack.append((a.cod, b.cod))
        elif tag == T_PAIR:
            stack.append((a.fst, b.fst))
            stack.append((a.snd, b.snd))
        elif tag == T_IN or tag == T_OUT:
            stack.append((a.payload, b.payload))
            stack.append((a.cont, b.cont))
        elif tag == T_DUAL or tag == T_NEG:
            stack.append((a.body, b.body))
    return True


def equiv(t, u):
    """Type equivalence: compare normal forms up to alpha."""

    return alpha_eq(nf(t, False), nf(u, False))
