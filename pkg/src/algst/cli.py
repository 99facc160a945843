"""Command-line front end: check, run, bench, and nf subcommands.

Exit codes: 0 success / run completed, 1 diagnostics reported, 2 deadlock,
3 fuel exhausted, 4 stuck expression, 64 usage error, 66 unreadable input.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import __version__
from .bench import bench_equiv, rows_to_csv
from .diagnostics import DiagnosticSink
from .kinds import resolve_type
from .normalize import BACKEND, available_backends, nf_neg, nf_pos
from .parser import parse_program, parse_type
from .pretty import expr_str, type_str
from .runtime import run_program
from .syntax import TAG_DUAL, TAG_ENDT, TAG_ENDW, TAG_IN, TAG_OUT, threads
from .typecheck import check_program

EX_OK = 0
EX_DIAGNOSTICS = 1
EX_USAGE = 64
EX_NOINPUT = 66


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> Optional[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        print(f"algst: cannot read {path}: {exc.strerror}", file=sys.stderr)
        return None


def _load_checked(path: str):
    """Parse and fully check one file; (env, sink) with parse failures
    folded into the sink."""

    src = _read(path)
    if src is None:
        return None, None
    program, sink = parse_program(src)
    if sink.has_errors:
        return None, sink
    env, sink = check_program(program, sink)
    return env, sink


def _cmd_check(args) -> int:
    status = EX_OK
    reports = []
    for path in args.paths:
        env, sink = _load_checked(path)
        if sink is None:
            return EX_NOINPUT
        if sink.has_errors:
            status = EX_DIAGNOSTICS
        if args.json:
            reports.append(
                {"file": path, "ok": not sink.has_errors, "diagnostics": json.loads(sink.json_all())}
            )
        elif sink.items:
            print(sink.render_all(path))
        else:
            print(f"{path}: ok")
    if args.json:
        print(json.dumps(reports, indent=2))
    return status


def _witness_text(witness) -> str:
    if isinstance(witness, (list, tuple)):
        return "\n".join(f"  {line}" for line in witness)
    return f"  {witness}" if witness else ""


def _cmd_run(args) -> int:
    env, sink = _load_checked(args.path)
    if sink is None:
        return EX_NOINPUT
    if sink.has_errors:
        print(sink.render_all(args.path), file=sys.stderr)
        return EX_DIAGNOSTICS
    if "main" not in env.def_exprs:
        print(f"{args.path}: no definition of main to run", file=sys.stderr)
        return EX_DIAGNOSTICS

    on_step = None
    if args.trace:
        on_step = lambda rec: print(json.dumps(rec))
    outcome = run_program(
        env,
        entry="main",
        fuel=args.fuel,
        policy=args.policy,
        seed=args.seed,
        on_step=on_step,
    )
    if outcome.kind == "completed":
        first = next(threads(outcome.final))
        print(f"completed in {outcome.steps} steps, result {expr_str(first.expr)}")
    elif outcome.kind == "deadlock":
        print(f"deadlock after {outcome.steps} steps")
        print(_witness_text(outcome.witness))
    elif outcome.kind == "fuel":
        print(f"fuel exhausted after {outcome.steps} steps")
    else:
        print(f"stuck expression after {outcome.steps} steps")
        print(_witness_text(outcome.witness))
    return outcome.exit_code


def _cmd_bench(args) -> int:
    if args.min < 3 or args.max < args.min or args.step < 2:
        print("algst bench: need 3 <= min <= max and step >= 2", file=sys.stderr)
        return EX_USAGE
    if args.backend and args.backend not in available_backends():
        print(
            f"algst bench: backend {args.backend} not available"
            f" (have: {', '.join(available_backends())})",
            file=sys.stderr,
        )
        return EX_USAGE
    sizes = []
    s = args.min
    while s <= args.max:
        sizes.append(s)
        s *= args.step
    result = bench_equiv(sizes, reps=args.reps, seed=args.seed, backend=args.backend)
    text = json.dumps(result, indent=2) if args.json else rows_to_csv(result["rows"])
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"algst: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return EX_NOINPUT
        for kind in ("eq", "neq"):
            fit = result["fit"][kind]
            print(f"{kind}: slope {fit['slope']:.3f}, r2 {fit['r2']:.3f}")
    else:
        print(text, end="")
    return EX_OK


def _cmd_nf(args) -> int:
    t, sink = parse_type(args.type)
    if t is None or sink.has_errors:
        print(sink.render_all("<type>"), file=sys.stderr)
        return EX_DIAGNOSTICS
    if args.context:
        src = _read(args.context)
        if src is None:
            return EX_NOINPUT
        program, psink = parse_program(src)
        if psink.has_errors:
            print(psink.render_all(args.context), file=sys.stderr)
            return EX_DIAGNOSTICS
        env, psink = check_program(program, psink)
        if psink.has_errors:
            print(psink.render_all(args.context), file=sys.stderr)
            return EX_DIAGNOSTICS
        rsink = DiagnosticSink()
        t = resolve_type(t, env, rsink)
        if rsink.has_errors:
            print(rsink.render_all("<type>"), file=sys.stderr)
            return EX_DIAGNOSTICS
    pos = nf_pos(t)
    print(type_str(pos))
    if pos.tag in (TAG_IN, TAG_OUT, TAG_ENDW, TAG_ENDT, TAG_DUAL):
        print(f"dual: {type_str(nf_neg(t))}")
    return EX_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="algst",
        description="Check, run, and measure programs with algebraic protocol types.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"algst {__version__} (grammar 1, kernel {BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse, kind check, and type check files")
    p_check.add_argument("paths", nargs="+", metavar="FILE")
    p_check.add_argument("--json", action="store_true", help="machine-readable diagnostics")
    p_check.set_defaults(func=_cmd_check)

    p_run = sub.add_parser("run", help="type check a file and execute main")
    p_run.add_argument("path", metavar="FILE")
    p_run.add_argument("--fuel", type=int, default=10_000, help="step budget (default 10000)")
    p_run.add_argument("--seed", type=int, default=0, help="scheduler seed (default 0)")
    p_run.add_argument(
        "--policy",
        choices=("roundRobin", "random"),
        default="roundRobin",
        help="scheduling policy (default roundRobin)",
    )
    p_run.add_argument(
        "--trace",
        action="store_true",
        help="print one JSON line per machine step",
    )
    p_run.set_defaults(func=_cmd_run)

    p_bench = sub.add_parser("bench", help="time the equivalence kernel over growing types")
    p_bench.add_argument("--min", type=int, default=1 << 10, help="smallest size (default 1024)")
    p_bench.add_argument("--max", type=int, default=1 << 20, help="largest size (default 1048576)")
    p_bench.add_argument("--step", type=int, default=2, help="size multiplier (default 2)")
    p_bench.add_argument("--reps", type=int, default=5, help="timings per pair (default 5)")
    p_bench.add_argument("--seed", type=int, default=0, help="instance seed (default 0)")
    p_bench.add_argument("--out", metavar="FILE", help="write results to FILE instead of stdout")
    p_bench.add_argument("--json", action="store_true", help="emit JSON (with fit) instead of CSV")
    p_bench.add_argument("--backend", choices=("py", "c"), help="kernel to time (default: active)")
    p_bench.set_defaults(func=_cmd_bench)

    p_nf = sub.add_parser("nf", help="print the normal form of a type expression")
    p_nf.add_argument("type", metavar="TYPE", help="type expression, e.g. 'Dual (?(-Int).a)'")
    p_nf.add_argument(
        "--context",
        metavar="FILE",
        help="program whose declarations the type may mention",
    )
    p_nf.set_defaults(func=_cmd_nf)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
