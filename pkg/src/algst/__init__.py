"""Toolchain for algebraic protocols and parameterized session types.

The pieces compose in the usual order: `parser` builds the tree, `kinds`
and `typecheck` validate it, `normalize` decides type equivalence in linear
time, `runtime` executes well-typed programs on a labelled transition
machine, and `bench` measures the equivalence kernel. `cli` ties them to a
command line.
"""

from .syntax import Kind, Program, Type
from .diagnostics import Diagnostic, DiagnosticSink
from .parser import parse_expr, parse_program, parse_type
from .normalize import (
    BACKEND,
    available_backends,
    equiv,
    get_kernel,
    negate,
    nf_neg,
    nf_pos,
    oracle_conv,
    tosession,
)
from .kinds import GlobalEnv, check_kind, check_program_kinds, synth_kind
from .typecheck import check_program, type_process
from .runtime import Machine, Outcome, check_preservation, run_program
from .pretty import expr_str, program_str, type_str

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Diagnostic",
    "DiagnosticSink",
    "GlobalEnv",
    "Kind",
    "Machine",
    "Outcome",
    "Program",
    "Type",
    "available_backends",
    "check_kind",
    "check_preservation",
    "check_program",
    "check_program_kinds",
    "equiv",
    "expr_str",
    "get_kernel",
    "negate",
    "nf_neg",
    "nf_pos",
    "oracle_conv",
    "parse_expr",
    "parse_program",
    "parse_type",
    "program_str",
    "run_program",
    "synth_kind",
    "tosession",
    "type_process",
    "type_str",
    "__version__",
]
