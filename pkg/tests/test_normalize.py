"""The normalization kernels: worked examples, grammar membership, and
agreement with the declarative conversion oracle."""

from random import Random

import pytest

from algst.bench import gen_small_type
from algst.normalize import (
    OracleOutOfFuel,
    available_backends,
    equiv,
    get_kernel,
    negate,
    nf_neg,
    nf_pos,
    oracle_conv,
    tosession,
)
from algst.parser import parse_type
from algst.pretty import type_str
from algst.syntax import (
    Base,
    Dual,
    EndTerm,
    EndWait,
    In,
    Kind,
    Neg,
    Out,
    Var,
    alpha_equal,
    canonical_key,
)
from helpers import is_nf


def ty(src: str):
    t, sink = parse_type(src)
    assert t is not None and not sink.has_errors, sink.render_all()
    return t


def test_worked_example(kernel):
    t = ty("Dual(?(-Int).a)")
    assert type_str(kernel.nf(t, False)) == "?Int.Dual a"
    assert type_str(kernel.nf(t, True)) == "!Int.a"


def test_dual_pushes_through_prefixes(kernel):
    assert type_str(kernel.nf(ty("Dual(!Int.?Bool.End!)"), False)) == "?Int.!Bool.End?"


def test_double_reversal_collapses(kernel):
    assert kernel.equiv(ty("!(-(-Int)).End!"), ty("!Int.End!"))
    assert kernel.equiv(ty("?Stream (-(-Int)).End?"), ty("?Stream Int.End?"))


def test_reversal_flips_direction(kernel):
    assert kernel.equiv(ty("?(-Int).End!"), ty("!Int.End!"))
    assert kernel.equiv(ty("!(-Int).End?"), ty("?Int.End?"))
    assert not kernel.equiv(ty("?(-Int).End!"), ty("?Int.End!"))


def test_terminators_are_distinct(kernel):
    assert not kernel.equiv(ty("End!"), ty("End?"))
    assert kernel.equiv(ty("Dual End!"), ty("End?"))


def test_negate_and_tosession():
    assert alpha_equal(negate(Neg(Base("Int"))), Base("Int"))
    assert alpha_equal(negate(Base("Int")), Neg(Base("Int")))
    s = EndWait()
    assert alpha_equal(tosession(Base("Int"), s), Out(Base("Int"), s))
    assert alpha_equal(tosession(Neg(Base("Int")), s), In(Base("Int"), s))


def test_dual_survives_only_on_variables(kernel):
    got = kernel.nf(Dual(Var("a")), False)
    assert got.tag == Dual(Var("a")).tag
    assert is_nf(got)


@pytest.mark.parametrize("seed", range(5))
def test_nf_properties_sampled(kernel, seed):
    rng = Random(seed)
    for i in range(300):
        want = (Kind.S, Kind.T, Kind.P)[i % 3]
        t = gen_small_type(rng, rng.randint(1, 16), want)
        n = kernel.nf(t, False)
        assert is_nf(n), (type_str(t), type_str(n))
        again = kernel.nf(n, False)
        assert canonical_key(again) == canonical_key(n)


@pytest.mark.parametrize("seed", range(3))
def test_nf_agrees_with_oracle(seed):
    rng = Random(100 + seed)
    for i in range(150):
        want = (Kind.S, Kind.P)[i % 2]
        t = gen_small_type(rng, rng.randint(1, 10), want)
        assert oracle_conv(nf_pos(t), t, fuel=200_000)
        if want == Kind.S:
            assert oracle_conv(nf_neg(t), Dual(t), fuel=200_000)


def test_involutions_sampled():
    rng = Random(7)
    for _ in range(400):
        s = gen_small_type(rng, rng.randint(1, 14), Kind.S)
        assert equiv(Dual(Dual(s)), s)
        p = gen_small_type(rng, rng.randint(1, 14), Kind.P)
        assert equiv(Neg(Neg(p)), p)


def test_backends_agree_on_random_types():
    names = available_backends()
    if len(names) < 2:
        pytest.skip("single-backend build")
    kernels = [get_kernel(n) for n in names]
    rng = Random(42)
    for i in range(400):
        want = (Kind.S, Kind.T, Kind.P)[i % 3]
        t = gen_small_type(rng, rng.randint(1, 18), want)
        keys = {canonical_key(k.nf(t, False)) for k in kernels}
        assert len(keys) == 1, type_str(t)
        if want == Kind.S:  # the negated phase is the dual, sessions only
            keys = {canonical_key(k.nf(t, True)) for k in kernels}
            assert len(keys) == 1, type_str(t)


def test_oracle_refuses_blatant_nonequivalence():
    assert not oracle_conv(ty("End!"), ty("End?"), fuel=10_000)
    assert not oracle_conv(ty("!Int.End!"), ty("!Bool.End!"), fuel=10_000)


def test_oracle_fuel_exhaustion_raises():
    # each side's conversion class has many members (every Dual can move),
    # so three expansions cannot exhaust either side
    t = ty("Dual(!Int.Dual(!Int.Dual(!Int.End!)))")
    u = ty("Dual(!Bool.Dual(!Bool.Dual(!Bool.End!)))")
    with pytest.raises(OracleOutOfFuel):
        oracle_conv(t, u, fuel=3)
