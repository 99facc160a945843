"""Pure-Python normalization kernel.

Rewrites a type to its normal form in one pass: Dual is pushed inward until
it rests on type variables, double negations cancel, and negated payloads
flip the direction of the communication that carries them. The result never
has more nodes than the input.

Written as an explicit two-phase stack machine because session spines used in
benchmarks nest hundreds of thousands of continuations deep.

`_nf_c.pyx` is the compiled twin; both must stay behaviorally identical, and
the test suite cross-checks them when the extension is built.
"""

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
    alpha_equal,
)

BACKEND = "py"

_POS = 0
_NEG = 1
_ENTER = 0
_EXIT = 1


def nf(t: Type, negated: bool = False) -> Type:
    """Normal form of `t`; with `negated` the normal form of `Dual t`
    (session-kinded `t` only)."""

    work = [(t, _NEG if negated else _POS, _ENTER)]
    out: list[Type] = []
    while work:
        node, mode, phase = work.pop()
        tag = node.tag
        if phase == _ENTER:
            if mode == _POS:
                if tag in (TAG_UNIT, TAG_BASE, TAG_VAR, TAG_ENDW, TAG_ENDT):
                    out.append(node)
                elif tag == TAG_DUAL:
                    work.append((node.body, _NEG, _ENTER))
                elif tag == TAG_NEG:
                    work.append((node, _POS, _EXIT))
                    work.append((node.body, _POS, _ENTER))
                elif tag == TAG_FUN:
                    work.append((node, _POS, _EXIT))
                    work.append((node.cod, _POS, _ENTER))
                    work.append((node.dom, _POS, _ENTER))
                elif tag == TAG_PAIR:
                    work.append((node, _POS, _EXIT))
                    work.append((node.snd, _POS, _ENTER))
                    work.append((node.fst, _POS, _ENTER))
                elif tag == TAG_FORALL:
                    work.append((node, _POS, _EXIT))
                    work.append((node.body, _POS, _ENTER))
                elif tag == TAG_IN or tag == TAG_OUT:
                    work.append((node, _POS, _EXIT))
                    work.append((node.cont, _POS, _ENTER))
                    work.append((node.payload, _POS, _ENTER))
                elif tag == TAG_PROTO:
                    work.append((node, _POS, _EXIT))
                    for a in reversed(node.args):
                        work.append((a, _POS, _ENTER))
                else:
                    raise ValueError(f"normalization: unknown node tag {tag}")
            else:
                if tag == TAG_VAR:
                    out.append(Dual(node))
                elif tag == TAG_ENDW:
                    out.append(END_TERM)
                elif tag == TAG_ENDT:
                    out.append(END_WAIT)
                elif tag == TAG_DUAL:
                    work.append((node.body, _POS, _ENTER))
                elif tag == TAG_IN or tag == TAG_OUT:
                    work.append((node, _NEG, _EXIT))
                    work.append((node.cont, _NEG, _ENTER))
                    work.append((node.payload, _POS, _ENTER))
                else:
                    raise ValueError("normalization: Dual applied to a non-session type")
        else:
            if tag == TAG_NEG:
                u = out.pop()
                out.append(u.body if u.tag == TAG_NEG else Neg(u))
            elif tag == TAG_FUN:
                cod = out.pop()
                dom = out.pop()
                if dom is node.dom and cod is node.cod:
                    out.append(node)
                else:
                    out.append(Fun(dom, cod))
            elif tag == TAG_PAIR:
                snd = out.pop()
                fst = out.pop()
                if fst is node.fst and snd is node.snd:
                    out.append(node)
                else:
                    out.append(Pair(fst, snd))
            elif tag == TAG_FORALL:
                body = out.pop()
                if body is node.body:
                    out.append(node)
                else:
                    out.append(Forall(node.var, node.kind, body))
            elif tag == TAG_PROTO:
                n = len(node.args)
                args = tuple(out[len(out) - n:]) if n else ()
                if n:
                    del out[len(out) - n:]
                out.append(ProtoApp(node.name, args))
            else:
                # In/Out: rebuild a message whose payload polarity decides
                # the final direction.
                cont = out.pop()
                payload = out.pop()
                if (tag == TAG_IN) == (mode == _POS):
                    # receive normalized positively / send under a dual:
                    # a negated payload flips it to a send of the payload.
                    if payload.tag == TAG_NEG:
                        out.append(Out(payload.body, cont))
                    else:
                        if tag == TAG_IN and payload is node.payload and cont is node.cont:
                            out.append(node)
                        else:
                            out.append(In(payload, cont))
                else:
                    if payload.tag == TAG_NEG:
                        out.append(In(payload.body, cont))
                    else:
                        if tag == TAG_OUT and payload is node.payload and cont is node.cont:
                            out.append(node)
                        else:
                            out.append(Out(payload, cont))
    return out[0]


def nf_pos(t: Type) -> Type:
    return nf(t, False)


def nf_neg(t: Type) -> Type:
    return nf(t, True)


def equiv(t: Type, u: Type) -> bool:
    """Type equivalence: compare normal forms up to alpha. Linear in the
    sizes of the inputs."""

    return alpha_equal(nf(t, False), nf(u, False))
