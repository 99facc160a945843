"""Type checker behaviour on small inline programs: accepted patterns,
rejected patterns with their codes, and the select/builtin signatures."""

from algst.diagnostics import DiagnosticSink
from algst.kinds import resolve_type
from algst.normalize import equiv
from algst.parser import parse_program, parse_type
from algst.pretty import type_str
from algst.syntax import Kind, alpha_equal
from algst.typecheck import check_program, typeof_const, typeof_select


def run_check(src: str):
    program, sink = parse_program(src)
    assert not sink.has_errors, sink.render_all()
    env, sink = check_program(program, sink)
    return env, sink


def codes(sink) -> list[str]:
    return [d.code for d in sink.errors()]


def assert_clean(src: str):
    env, sink = run_check(src)
    assert not sink.has_errors, sink.render_all()
    return env


def assert_code(src: str, code: str):
    _, sink = run_check(src)
    got = codes(sink)
    assert code in got, (code, got, sink.render_all())
    for d in sink.errors():
        if d.code == code:
            assert d.span is not None, "diagnostic has no location"


# ---------------------------------------------------------------------------
# Accepted programs


def test_polymorphic_identity():
    assert_clean(
        """
id : forall(a:T). a -> a
id [a] x = x

main : Int
main = id [Int] 42
"""
    )


def test_send_receive_typing():
    assert_clean(
        """
main : Int
main =
  let (w, r) = new [!Int.End!] in
  let () = fork (\\(u:()) -> terminate (send [Int] [End!] 5 w)) in
  let (n, r) = receive [Int] [End?] r in
  let () = wait r in
  n
"""
    )


def test_unrestricted_values_can_repeat():
    assert_clean(
        """
dbl : Int -> Int
dbl x = x + x

main : Int
main = dbl (dbl 7)
"""
    )


def test_equivalent_types_coerce_silently():
    # the annotation is not in normal form, the body is; equivalence closes
    # the gap without any cast syntax
    assert_clean(
        """
type Loud = !(-(-Int)).End!

calm : Loud -> !Int.End!
calm c = c

main : ()
main = ()
"""
    )


def test_fork_argument_may_capture_linear_channels():
    assert_clean(
        """
main : Int
main =
  let (w, r) = new [!Int.End!] in
  let () = fork (\\(u:()) -> terminate (send [Int] [End!] 1 w)) in
  let (n, r) = receive [Int] [End?] r in
  let () = wait r in
  n
"""
    )


def test_branches_agree_when_both_consume():
    assert_clean(
        """
data Flag = On | Off

main : Int
main =
  let (w, r) = new [!Int.End!] in
  let w = case On of {
      On  -> send [Int] [End!] 1 w,
      Off -> send [Int] [End!] 0 w } in
  let () = terminate w in
  let (n, r) = receive [Int] [End?] r in
  let () = wait r in
  n
"""
    )


# ---------------------------------------------------------------------------
# Rejected programs, one code each


def test_payload_mismatch():
    assert_code(
        """
main : ()
main =
  let (w, r) = new [!Int.End!] in
  let w = send [Bool] [End!] True w in
  let () = terminate w in
  wait r
""",
        "type.mismatch",
    )


def test_linear_channel_left_unconsumed():
    assert_code(
        """
main : ()
main =
  let (w, r) = new [End!] in
  terminate w
""",
        "type.linear-unconsumed",
    )


def test_linear_channel_cannot_be_reused():
    assert_code(
        """
main : ()
main =
  let (w, r) = new [End!] in
  let () = terminate w in
  let () = terminate w in
  wait r
""",
        "type.unbound",
    )


def test_unrestricted_closure_cannot_capture_linear():
    assert_code(
        """
use : (() -> ()) -> ()
use f = f ()

main : ()
main =
  let (w, r) = new [End!] in
  use (\\(u:()) -> let () = terminate w in wait r)
""",
        "type.linear-capture",
    )


def test_match_requires_every_branch():
    assert_code(
        """
data Ast = Con Int | Add Ast Ast

size : Ast -> Int
size t = case t of { Con x -> 1 }

main : ()
main = ()
""",
        "type.match-branches",
    )


def test_branch_binder_arity_is_checked():
    assert_code(
        """
data Ast = Con Int | Add Ast Ast

size : Ast -> Int
size t = case t of { Con x y -> 1, Add l r -> 2 }

main : ()
main = ()
""",
        "type.match-binders",
    )


def test_branches_must_consume_the_same_channels():
    assert_code(
        """
data Flag = On | Off

main : ()
main =
  let (w, r) = new [End!] in
  let () = case On of { On -> terminate w, Off -> () } in
  wait r
""",
        "type.branch-mismatch",
    )


def test_recursion_needs_a_value_body():
    assert_code(
        """
f : () -> ()
f u = rec go : () -> () . go ()

main : ()
main = ()
""",
        "type.rec-value",
    )
    assert_code(
        """
main : Int
main = (rec x : Int . 3)
""",
        "type.rec-annotation",
    )


def test_application_of_a_non_function():
    assert_code("main : Int\nmain = 3 4", "type.app")


def test_type_application_needs_a_quantifier():
    assert_code(
        """
id : Int -> Int
id x = x

main : Int
main = id [Int] 3
""",
        "type.tapp",
    )


def test_unknown_constructor():
    assert_code("main : Int\nmain = case Whatever of { C -> 1 }", "type.ctor")


def test_constructor_arity():
    assert_code(
        """
data Ast = Con Int

main : Ast
main = Con 1 2
""",
        "type.ctor-arity",
    )


def test_new_wants_a_session_kind():
    assert_code(
        """
main : ()
main = let (a, b) = new [Int] in ()
""",
        "kind.mismatch",
    )


def test_def_params_must_fit_the_signature():
    assert_code("f : Int\nf x = x\nmain : ()\nmain = ()", "type.def-params")


# ---------------------------------------------------------------------------
# Builtin and select signatures


def expect_ty(src: str, env) -> object:
    t, sink = parse_type(src)
    assert t is not None and not sink.has_errors
    t = resolve_type(t, env, sink)
    assert not sink.has_errors, sink.render_all()
    return t


def test_select_quantifies_protocol_parameters_then_continuation():
    env = assert_clean("protocol Stream a = Next a (Stream a)\nmain : ()\nmain = ()")
    got = typeof_select("Next", env)
    want = expect_ty(
        "forall(a:P). forall(b:S). !Stream a.b -> !a.!Stream a.b", env
    )
    assert alpha_equal(got, want), type_str(got)


def test_select_turns_negative_fields_into_inputs():
    env = assert_clean(
        "protocol Arith = Neg Int -Int | Add Int Int -Int\nmain : ()\nmain = ()"
    )
    got = typeof_select("Neg", env)
    want = expect_ty("forall(b:S). !Arith.b -> !Int.?Int.b", env)
    assert alpha_equal(got, want), type_str(got)
    assert typeof_select("NoSuch", env) is None


def test_builtin_signatures():
    env = assert_clean("main : ()\nmain = ()")
    send = typeof_const("send")
    want = expect_ty("forall(a:T). forall(b:S). a -> !a.b -> b", env)
    assert alpha_equal(send, want)
    new = typeof_const("new")
    assert alpha_equal(new, expect_ty("forall(a:S). (a, Dual a)", env))


def test_main_may_have_any_unrestricted_type():
    env = assert_clean("main : Int\nmain = 41 + 1")
    assert "main" in env.sigs
    assert equiv(env.sigs["main"], expect_ty("Int", env))
