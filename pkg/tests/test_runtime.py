"""Execution tests: outcomes over the runnable corpus, determinism,
deadlock evidence, endpoint discipline, and the per-step type audit."""

import pytest

import algst.runtime as rt
from algst.parser import parse_program, parse_type
from algst.pretty import expr_str
from algst.runtime import (
    Machine,
    advance_endpoint,
    check_preservation,
    run_program,
    step_ctx,
)
from algst.syntax import (
    EVar,
    Kind,
    LClose,
    LRecvC,
    LRecvV,
    LSendC,
    LSendV,
    LTerm,
    Thread,
    canonical_key,
    threads,
)
from algst.typecheck import check_program

from helpers import CORPUS


def load(name: str):
    src = (CORPUS / name).read_text()
    program, sink = parse_program(src)
    assert not sink.has_errors, sink.render_all(name)
    env, sink = check_program(program, sink)
    assert not sink.has_errors, sink.render_all(name)
    return env


def ty(src: str):
    t, sink = parse_type(src)
    assert t is not None and not sink.has_errors
    return t


# ---------------------------------------------------------------------------
# Whole-program outcomes


def test_arithmetic_server_completes_with_the_answer():
    env = load("serve_arith.algst")
    out = run_program(env)
    assert out.kind == "completed" and out.exit_code == 0
    assert expr_str(next(threads(out.final)).expr) == "42"


def test_tree_protocol_round_trip():
    env = load("send_ast.algst")
    out = run_program(env)
    assert out.kind == "completed"
    assert expr_str(next(threads(out.final)).expr) == "42"


def test_round_robin_runs_are_reproducible():
    env = load("toolbox.algst")
    records = []
    out1 = run_program(env, on_step=records.append)
    labels1 = [r["label"] for r in records]
    records.clear()
    out2 = run_program(env, on_step=records.append)
    labels2 = [r["label"] for r in records]
    assert out1.kind == out2.kind == "completed"
    assert labels1 == labels2


def test_random_policy_is_seed_deterministic():
    env = load("send_ast.algst")
    a, b = [], []
    out1 = run_program(env, policy="random", seed=11, on_step=a.append)
    out2 = run_program(env, policy="random", seed=11, on_step=b.append)
    assert out1.kind == out2.kind == "completed"
    assert [r["label"] for r in a] == [r["label"] for r in b]


def test_step_records_have_the_published_shape():
    env = load("serve_arith.algst")
    seen = []
    run_program(env, on_step=seen.append)
    assert seen
    for i, r in enumerate(seen, start=1):
        assert set(r) == {"step", "label", "rule", "fuel"}
        assert r["step"] == i
        assert isinstance(r["label"], str)
    rules = {r["rule"] for r in seen}
    assert {"beta", "new", "fork", "msg", "close"} <= rules


def test_selection_steps_use_the_branch_rule():
    env = load("toolbox.algst")
    seen = []
    run_program(env, on_step=seen.append)
    assert "bra" in {r["rule"] for r in seen}


def test_channel_transfer_uses_scope_extrusion():
    env = load("chanpass.algst")
    seen = []
    out = run_program(env, on_step=seen.append)
    assert out.kind == "completed"
    rules = {r["rule"] for r in seen}
    assert "open" in rules
    opens = [r for r in seen if r["rule"] == "open"]
    assert all(r["label"].startswith("(nu ") for r in opens)


def test_crossed_receives_deadlock_with_evidence():
    env = load("deadlock.algst")
    out = run_program(env)
    assert out.kind == "deadlock" and out.exit_code == 2
    assert out.witness, "deadlock must carry a witness"
    assert all(line.startswith("nu ") for line in out.witness)


def test_infinite_stream_exhausts_fuel():
    env = load("stream_ones.algst")
    out = run_program(env, fuel=500)
    assert out.kind == "fuel" and out.exit_code == 3
    assert out.steps == 500


def test_missing_entry_point_raises():
    env = load("serve_arith.algst")
    with pytest.raises(KeyError):
        run_program(env, entry="nonexistent")


# ---------------------------------------------------------------------------
# Endpoint discipline


def test_no_endpoint_is_ever_shared():
    env = load("send_ast.algst")
    machine = Machine(Thread(EVar("main")), env)
    while True:
        census = machine.endpoint_census()
        assert all(v <= 1 for v in census.values()), census
        if machine.step() is None:
            break
    assert machine.classify().kind == "completed"


# ---------------------------------------------------------------------------
# Endpoint typing, one label at a time


def test_values_advance_prefixes():
    env = load("serve_arith.algst")
    t = ty("!Int.End!")
    after = advance_endpoint(t, LSendV("c", None), env)
    assert after is t.cont
    assert advance_endpoint(t, LRecvV("c", None), env) is None
    u = ty("?Bool.End?")
    assert advance_endpoint(u, LRecvV("c", None), env) is u.cont


def rty(src: str, env):
    from algst.kinds import resolve_type

    t, sink = parse_type(src)
    assert t is not None and not sink.has_errors
    t = resolve_type(t, env, sink)
    assert not sink.has_errors, sink.render_all()
    return t


def test_selection_unrolls_the_chosen_constructor():
    env = load("serve_arith.algst")
    t = rty("!Arith.End!", env)
    after = advance_endpoint(t, LSendC("c", "Neg"), env)
    # Neg Int -Int: the selecting side writes an Int then reads one back
    assert canonical_key(after) == canonical_key(rty("!Int.?Int.End!", env))
    flipped = advance_endpoint(rty("?Arith.End?", env), LRecvC("c", "Neg"), env)
    assert canonical_key(flipped) == canonical_key(rty("?Int.!Int.End?", env))


def test_closing_labels_remove_the_endpoint():
    env = load("serve_arith.algst")
    assert advance_endpoint(ty("End!"), LTerm("c"), env) is rt._REMOVE
    assert advance_endpoint(ty("End?"), LClose("c"), env) is rt._REMOVE
    assert advance_endpoint(ty("End!"), LClose("c"), env) is None


def test_context_replay_tracks_a_whole_run():
    env = load("serve_arith.algst")
    machine = Machine(Thread(EVar("main")), env, keep_trace=True)
    out = machine.run()
    assert out.kind == "completed"
    gamma = {}
    for label in machine.trace:
        gamma = step_ctx(gamma, label, env)
        assert gamma is not None, label.render()
    assert gamma == {}


# ---------------------------------------------------------------------------
# The audit itself


@pytest.mark.parametrize("name", ["serve_arith.algst", "send_ast.algst", "toolbox.algst"])
def test_preservation_holds_on_corpus_programs(name):
    env = load(name)
    out, report = check_preservation(env, fuel=10_000, seed=3, policy="random")
    assert out.kind == "completed"
    assert report == []


def test_a_corrupted_selection_rule_is_detected(monkeypatch):
    env = load("toolbox.algst")
    real = advance_endpoint
    out_tag = ty("!Int.End!").tag

    def mutant(t, label, e):
        if t is not None and isinstance(label, LSendC) and t.tag == out_tag:
            # drop the constructor's payload prefix entirely
            return t.cont
        return real(t, label, e)

    monkeypatch.setattr(rt, "advance_endpoint", mutant)
    out, report = check_preservation(env, fuel=10_000, seed=0)
    assert report, "the audit must flag the broken selection rule"
