from algst.diagnostics import DiagnosticSink
from algst.kinds import check_kind, check_program_kinds, resolve_type, subkind, synth_kind
from algst.parser import parse_program, parse_type
from algst.syntax import Kind, alpha_equal


def ty(src, env=None):
    t, sink = parse_type(src)
    assert t is not None and not sink.has_errors
    if env is not None:
        t = resolve_type(t, env, sink)
        assert not sink.has_errors, sink.render_all()
    return t


def env_of(src):
    program, sink = parse_program(src)
    assert not sink.has_errors, sink.render_all()
    env = check_program_kinds(program, sink)
    return env, sink


def test_subkind_is_the_linear_order():
    assert subkind(Kind.S, Kind.S)
    assert subkind(Kind.S, Kind.T)
    assert subkind(Kind.T, Kind.P)
    assert not subkind(Kind.P, Kind.T)
    assert not subkind(Kind.T, Kind.S)


def test_synth_kinds_of_core_forms():
    env, sink = env_of("protocol Stream a = Next a (Stream a)")
    cases = [
        ("Int", Kind.T),
        ("()", Kind.T),
        ("Int -> Int", Kind.T),
        ("(Int, End!)", Kind.T),
        ("End?", Kind.S),
        ("!Int.End!", Kind.S),
        ("Dual End!", Kind.S),
        ("Stream Int", Kind.P),
        ("-Int", Kind.P),
        ("forall(s:S). !Int.s -> s", Kind.T),
    ]
    for src, want in cases:
        got = synth_kind(ty(src, env), {}, env, sink)
        assert got == want, (src, got)
    assert not sink.has_errors


def test_sessions_embed_in_values_but_not_back():
    env, sink = env_of("")
    assert check_kind(ty("End!", env), Kind.T, {}, env, DiagnosticSink())
    assert not check_kind(ty("Int", env), Kind.S, {}, env, DiagnosticSink())
    assert not check_kind(ty("-Int", env), Kind.T, {}, env, DiagnosticSink())


def test_variables_take_kinds_from_the_context():
    env, _ = env_of("")
    sink = DiagnosticSink()
    assert synth_kind(ty("a"), {"a": Kind.P}, env, sink) == Kind.P
    assert not sink.has_errors
    synth_kind(ty("a"), {}, env, sink)
    assert any(d.code == "kind.unbound-var" for d in sink.items)


def test_alias_expansion_resolves_applications():
    env, sink = env_of("type Pipe a = !a.?a.End!")
    got = resolve_type(ty("Pipe Int"), env, sink)
    assert not sink.has_errors
    assert alpha_equal(got, ty("!Int.?Int.End!", env))


def test_protocol_payloads_are_checked():
    program, sink = parse_program("protocol Bad = C (Int -> End?) End!")
    check_program_kinds(program, sink)
    assert not sink.has_errors  # T and S both embed in P

    program, sink = parse_program("protocol Worse = C !Int")
    check_program_kinds(program, sink)
    assert sink.has_errors  # dangling prefix is not a type


def test_mutual_recursion_across_declarations():
    env, sink = env_of(
        """
protocol Flip = Flip -Int Flop
protocol Flop = Flop Int Flip
"""
    )
    assert not sink.has_errors
    assert set(env.protocols) == {"Flip", "Flop"}
    assert env.ctor_owner["Flip"] == "Flip"


def test_duplicate_names_are_reported():
    _, sink = env_of("protocol P = C Int")
    program, sink2 = parse_program("protocol P = C Int\nprotocol P = D Int")
    check_program_kinds(program, sink2)
    assert any(d.code == "kind.duplicate-name" for d in sink2.items)


def test_signatures_collected_with_kinds():
    env, sink = env_of("f : Int -> Int\nf x = x")
    assert not sink.has_errors
    assert "f" in env.sigs
