"""Diagnostics shared by the parser, kind checker, and type checker.

Every diagnostic carries a dotted code (`parse.unexpected`,
`kind.arity`, `type.linear-unconsumed`, ...), a severity, and a source
span, and serializes to one stable JSON object so tools can consume
`--json` output line by line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .syntax import Span


@dataclass(slots=True)
class Diagnostic:
    code: str
    msg: str
    span: Optional[Span] = None
    severity: str = "error"

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "line": self.span.line if self.span else 0,
            "col": self.span.col if self.span else 0,
            "len": self.span.length if self.span else 0,
            "msg": self.msg,
        }

    def render(self, filename: str = "<input>") -> str:
        if self.span:
            loc = f"{filename}:{self.span.line}:{self.span.col}"
        else:
            loc = filename
        return f"{loc}: {self.severity}: {self.msg} [{self.code}]"


class DiagnosticSink:
    """Collects diagnostics; checkers keep going after errors where they can
    so one run reports as much as possible."""

    def __init__(self) -> None:
        self.items: list[Diagnostic] = []

    def error(self, code: str, msg: str, span: Optional[Span] = None) -> Diagnostic:
        d = Diagnostic(code, msg, span, "error")
        self.items.append(d)
        return d

    def warn(self, code: str, msg: str, span: Optional[Span] = None) -> Diagnostic:
        d = Diagnostic(code, msg, span, "warning")
        self.items.append(d)
        return d

    @property
    def has_errors(self) -> bool:
        return any(d.severity == "error" for d in self.items)

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.items if d.severity == "error"]

    def render_all(self, filename: str = "<input>") -> str:
        return "\n".join(d.render(filename) for d in self.items)

    def json_all(self) -> str:
        return json.dumps([d.to_json() for d in self.items], indent=None)


class FatalDiagnostic(Exception):
    """Raised when a checker cannot continue past an error."""

    def __init__(self, diag: Diagnostic) -> None:
        super().__init__(diag.msg)
        self.diag = diag
