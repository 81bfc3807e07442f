"""Tokenizer for ``.qp`` protocol scripts."""

from __future__ import annotations

import re
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ScriptError(Exception):
    """Raised with the full list of diagnostics when a script is rejected."""

    def __init__(self, diagnostics, source_name: str = "<script>"):
        self.diagnostics = list(diagnostics)
        self.source_name = source_name
        super().__init__("\n".join(f"{source_name}:{d}" for d in self.diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int
    value: object = field(default=None, compare=False)


_SPEC = [
    ("COMMENT", r"#[^\n]*"),
    ("NEWLINE", r"\n"),
    ("SKIP", r"[ \t\r]+"),
    ("KET", r"\|[^|>\n]*>"),
    ("IMAG", r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?i(?![A-Za-z0-9_])"),
    ("NUMBER", r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?(?![A-Za-z_])"),
    ("NAME", r"[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z][A-Za-z0-9_]*)*"),
    ("LBRACE", r"\{"),
    ("RBRACE", r"\}"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
    ("PLUS", r"\+"),
    ("MINUS", r"-"),
    ("STAR", r"\*"),
    ("SLASH", r"/"),
    ("EQ", r"="),
    ("COMMA", r","),
    ("SEMI", r";"),
]
_RX = re.compile("|".join(f"(?P<{k}>{p})" for k, p in _SPEC))


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    """Split ``text`` into tokens; unknown characters become diagnostics and are skipped."""
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _RX.match(text, i)
        col = i - line_start + 1
        if m is None:
            diags.append(Diagnostic("error", f"unexpected character {text[i]!r}", line, col))
            i += 1
            continue
        kind, s = m.lastgroup, m.group()
        if kind == "NEWLINE" or kind == "SEMI":
            tokens.append(Token("NEWLINE", s, line, col))
            if kind == "NEWLINE":
                line, line_start = line + 1, m.end()
        elif kind == "KET":
            labels = tuple(p.strip() for p in s[1:-1].split(","))
            if any(not p for p in labels):
                diags.append(Diagnostic("error", f"empty label in ket {s!r}", line, col))
            tokens.append(Token("KET", s, line, col, labels))
        elif kind == "NUMBER":
            tokens.append(Token(kind, s, line, col, float(s)))
        elif kind == "IMAG":
            tokens.append(Token(kind, s, line, col, float(s[:-1])))
        elif kind not in ("SKIP", "COMMENT"):
            tokens.append(Token(kind, s, line, col))
        i = m.end()
    tokens.append(Token("EOF", "", line, i - line_start + 1))
    return tokens, diags
