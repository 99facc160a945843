"""Parser tests: round trips through the pretty printer on the corpus and
on generated ASTs, precedence pins, and crash-free recovery on junk."""

from random import Random

import pytest

from algst.parser import parse_expr, parse_program, parse_type
from algst.pretty import expr_str, program_str, type_str
from algst.syntax import Fun, alpha_equal, alpha_equal_expr

from helpers import corpus_files, gen_expr_ast, gen_type_ast, same_program


def rt_type(src: str):
    t, sink = parse_type(src)
    assert t is not None and not sink.has_errors, sink.render_all()
    return t


def rt_expr(src: str):
    e, sink = parse_expr(src)
    assert e is not None and not sink.has_errors, sink.render_all()
    return e


# ---------------------------------------------------------------------------
# Corpus round trips


@pytest.mark.parametrize(
    "path", corpus_files("*.algst"), ids=lambda p: p.stem
)
def test_corpus_parses_and_round_trips(path):
    src = path.read_text()
    program, sink = parse_program(src)
    if path.stem == "bad_parse":
        assert sink.has_errors
        return
    assert not sink.has_errors, sink.render_all(path.name)
    printed = program_str(program)
    again, sink2 = parse_program(printed)
    assert not sink2.has_errors, sink2.render_all("<printed>")
    assert same_program(program, again), path.name


# ---------------------------------------------------------------------------
# Generated round trips


def test_generated_types_round_trip():
    rng = Random(2024)
    for _ in range(600):
        t = gen_type_ast(rng)
        printed = type_str(t)
        back, sink = parse_type(printed)
        assert back is not None and not sink.has_errors, printed
        assert alpha_equal(t, back), printed


def test_generated_exprs_round_trip():
    rng = Random(2025)
    for _ in range(400):
        e = gen_expr_ast(rng)
        printed = expr_str(e)
        back, sink = parse_expr(printed)
        assert back is not None and not sink.has_errors, printed
        assert alpha_equal_expr(e, back), printed


# ---------------------------------------------------------------------------
# Precedence and sugar pins


def test_arrow_is_right_associative():
    t = rt_type("a -> b -> c")
    assert isinstance(t, Fun) and isinstance(t.cod, Fun)
    u = rt_type("(a -> b) -> c")
    assert isinstance(u, Fun) and isinstance(u.dom, Fun)
    assert not alpha_equal(t, u)


def test_prefix_binds_tighter_than_arrow():
    t = rt_type("!Int.End! -> End?")
    assert isinstance(t, Fun)
    assert type_str(t) == "!Int.End! -> End?"


def test_dual_takes_an_atom():
    assert type_str(rt_type("Dual a")) == "Dual a"
    assert type_str(rt_type("Dual (!Int.End!)")) == "Dual (!Int.End!)"
    _, sink = parse_type("Dual !Int.End!")
    assert sink.has_errors


def test_negation_nests_only_with_parentheses():
    t = rt_type("-(-Int)")
    assert type_str(t) == "-(-Int)"
    _, sink = parse_type("- -Int")
    assert sink.has_errors


def test_application_is_left_associative():
    e = rt_expr("f x y")
    assert expr_str(e) == "f x y"
    assert expr_str(e.fn) == "f x"


def test_pipe_is_reverse_application():
    assert alpha_equal_expr(rt_expr("x |> f"), rt_expr("f x"))
    assert alpha_equal_expr(rt_expr("x |> f |> g"), rt_expr("g (f x)"))


def test_match_and_case_are_the_same_form():
    a = rt_expr("match v with { Con x -> x, Add l r -> l }")
    b = rt_expr("case v of { Con x -> x, Add l r -> l }")
    assert alpha_equal_expr(a, b)


def test_arithmetic_precedence():
    assert expr_str(rt_expr("1 + 2 * 3")) == "1 + 2 * 3"
    assert expr_str(rt_expr("(1 + 2) * 3")) == "(1 + 2) * 3"


def test_multi_argument_brackets():
    a = rt_expr("send [Int] [s] n c")
    b = rt_expr("send [Int, s] n c")
    assert alpha_equal_expr(a, b)


# ---------------------------------------------------------------------------
# Errors carry locations; junk never crashes


def test_parse_errors_are_located():
    _, sink = parse_program("f : Int -> Int\nf x = x +")
    errs = sink.errors()
    assert errs and errs[0].code == "parse.unexpected"
    assert errs[0].span is not None and errs[0].span.line == 2


def test_junk_input_yields_diagnostics_not_crashes():
    rng = Random(99)
    for _ in range(300):
        blob = bytes(rng.randrange(256) for _ in range(rng.randrange(120)))
        text = blob.decode("utf-8", errors="replace")
        program, sink = parse_program(text)
        assert program is not None or sink.has_errors
