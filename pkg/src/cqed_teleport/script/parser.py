"""Recursive-descent parser for ``.qp`` scripts.

Statements are line oriented and start with a keyword; ``on`` blocks nest
with braces. Parse errors never abort: the parser records a diagnostic,
skips to the end of the offending line and carries on, so one pass reports
every syntax problem it can see.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .lexer import Diagnostic, ScriptError, Token, tokenize
from .nodes import (
    Angle,
    AssertFidelity,
    AtomDecl,
    CavityDecl,
    Coef,
    Measure,
    NamedRotation,
    OnOutcome,
    Pass,
    PhaseRotation,
    Pos,
    Prepare,
    Propagator,
    Protocol,
    RamseyRotation,
    Rotate,
    StateExpr,
    Term,
)

KEYWORDS = {
    "atom", "cavity", "fock", "prepare", "rotate", "pass", "through", "measure", "keep",
    "on", "assert", "tol", "ramsey", "phase", "pi", "i", "sqrt2",
}
CONFIGS = ("cascade", "lambda", "two-level")
PROPAGATORS = ("dispersive", "lambda", "jc")


@dataclass(frozen=True)
class ScriptSource:
    text: str
    name: str = "<script>"

    @classmethod
    def from_path(cls, path) -> "ScriptSource":
        p = Path(path)
        return cls(p.read_bytes().decode("utf-8"), str(p))


@dataclass(frozen=True)
class ParseResult:
    protocol: Protocol | None
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.protocol is not None and not self.diagnostics


class _Bail(Exception):
    pass


class _Parser:
    def __init__(self, tokens: list[Token], name: str):
        self.toks = tokens
        self.i = 0
        self.name = name
        self.diags: list[Diagnostic] = []
        self.declared: dict[str, Token] = {}

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None):
        t = tok or self.tok
        self.diags.append(Diagnostic("error", msg, t.line, t.column))
        raise _Bail

    def expected(self, what):
        t = self.tok
        found = "end of input" if t.kind == "EOF" else ("end of line" if t.kind == "NEWLINE" else repr(t.text))
        if isinstance(what, (list, tuple, set)):
            what = "one of " + ", ".join(sorted(what))
        self.error(f"expected {what}, found {found}")

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        if not self.at(kind, text):
            self.expected(what or (repr(text) if text else kind.lower()))
        return self.advance()

    def ident(self, what: str = "a name") -> Token:
        if not self.at("NAME") or self.tok.text in KEYWORDS:
            self.expected(what)
        return self.advance()

    def skip_newlines(self):
        while self.at("NEWLINE"):
            self.advance()

    def sync(self):
        depth = 0
        while not self.at("EOF"):
            if self.at("NEWLINE") and depth <= 0:
                return
            if self.at("LBRACE"):
                depth += 1
            elif self.at("RBRACE"):
                if depth <= 0:
                    return
                depth -= 1
            self.advance()

    def end_statement(self):
        if self.at("NEWLINE"):
            self.advance()
        elif not (self.at("EOF") or self.at("RBRACE")):
            self.expected("end of line")

    # -- grammar

    def protocol(self) -> Protocol:
        decls, steps = [], []
        self.skip_newlines()
        while not self.at("EOF"):
            try:
                if self.at("NAME", "atom") or self.at("NAME", "cavity"):
                    d = self.declaration()
                    if d is not None:
                        decls.append(d)
                else:
                    steps.append(self.step())
            except _Bail:
                self.sync()
                if self.at("RBRACE"):
                    self.advance()
            self.skip_newlines()
        return Protocol(tuple(decls), tuple(steps), self.name)

    def declaration(self):
        kw = self.advance()
        name_tok = self.ident("a subsystem name")
        pos = Pos(kw.line, kw.column)
        if kw.text == "atom":
            if not self.at("NAME") or self.tok.text not in CONFIGS:
                self.expected(CONFIGS)
            config = self.advance().text
            levels = []
            while self.at("NAME"):
                levels.append(self.ident("a level name").text)
            if not levels:
                self.expected("a level name")
            node = AtomDecl(name_tok.text, config, tuple(levels), pos)
        else:
            self.expect("NAME", "fock", "'fock'")
            n = self.expect("NUMBER", what="a Fock cutoff")
            if not float(n.value).is_integer():
                self.error("Fock cutoff must be an integer", n)
            node = CavityDecl(name_tok.text, int(n.value), pos)
        self.end_statement()
        if name_tok.text in self.declared:
            prev = self.declared[name_tok.text]
            self.diags.append(
                Diagnostic(
                    "error",
                    f"duplicate declaration of {name_tok.text!r} (first declared at line {prev.line})",
                    name_tok.line,
                    name_tok.column,
                )
            )
            return None
        self.declared[name_tok.text] = name_tok
        return node

    def step(self):
        t = self.tok
        pos = Pos(t.line, t.column)
        if not self.at("NAME"):
            self.expected(("atom", "cavity", "prepare", "rotate", "pass", "measure", "on", "assert"))
        kw = t.text
        if kw == "prepare":
            self.advance()
            target = self.ident("a subsystem name").text
            node = Prepare(target, self.state_expr(), pos)
        elif kw == "rotate":
            self.advance()
            atom = self.ident("an atom name").text
            node = Rotate(atom, self.rotation(), pos)
        elif kw == "pass":
            self.advance()
            atom = self.ident("an atom name").text
            self.expect("NAME", "through", "'through'")
            cavity = self.ident("a cavity name").text
            node = Pass(atom, cavity, self.propagator(), pos)
        elif kw == "measure":
            self.advance()
            target = self.ident("a subsystem name").text
            keep = None
            if self.at("NAME", "keep"):
                self.advance()
                keep = self.level()
            node = Measure(target, keep, pos)
        elif kw == "on":
            return self.on_block(pos)
        elif kw == "assert":
            self.advance()
            targets = [self.ident("a subsystem name").text]
            while self.at("NAME") and self.tok.text not in KEYWORDS:
                targets.append(self.advance().text)
            st = self.state_expr()
            self.expect("NAME", "tol", "'tol'")
            tol = self.expect("NUMBER", what="a tolerance")
            node = AssertFidelity(tuple(targets), st, float(tol.value), pos)
        else:
            self.expected(("atom", "cavity", "prepare", "rotate", "pass", "measure", "on", "assert"))
        self.end_statement()
        return node

    def level(self) -> str:
        if self.at("NAME") or self.at("NUMBER"):
            return self.advance().text
        self.expected("a level label")

    def on_block(self, pos: Pos) -> OnOutcome:
        self.advance()
        pattern = []
        while self.at("NAME"):
            atom = self.advance().text
            self.expect("EQ", what="'='")
            pattern.append((atom, self.level()))
        if not pattern:
            self.expected("an outcome pattern such as A1=f")
        self.expect("LBRACE", what="'{'")
        body = []
        self.skip_newlines()
        while not self.at("RBRACE"):
            if self.at("EOF"):
                self.expected("'}'")
            try:
                if self.at("NAME", "atom") or self.at("NAME", "cavity"):
                    self.error("declarations are not allowed inside an on block")
                body.append(self.step())
            except _Bail:
                self.sync()
            self.skip_newlines()
        self.advance()
        self.end_statement()
        return OnOutcome(tuple(pattern), tuple(body), pos)

    def rotation(self):
        if self.at("NAME", "ramsey"):
            self.advance()
            self.expect("LPAREN", what="'('")
            theta = self.angle()
            self.expect("COMMA", what="','")
            x = self.angle()
            self.expect("RPAREN", what="')'")
            return RamseyRotation(theta, x)
        if self.at("NAME", "phase"):
            self.advance()
            self.expect("LPAREN", what="'('")
            b = self.angle()
            self.expect("RPAREN", what="')'")
            return PhaseRotation(b)
        return NamedRotation(self.ident("a rotation").text)

    def propagator(self) -> Propagator:
        if not self.at("NAME") or self.tok.text not in PROPAGATORS:
            self.expected(PROPAGATORS)
        kind = self.advance().text
        params = []
        while self.at("NAME"):
            key = self.advance().text
            self.expect("EQ", what="'='")
            params.append((key, self.angle()))
        return Propagator(kind, tuple(params))

    def angle(self) -> Angle:
        sign = 1.0
        if self.at("MINUS"):
            self.advance()
            sign = -1.0
        if self.at("NAME", "pi"):
            self.advance()
            num, pi = 1.0, True
        else:
            num = float(self.expect("NUMBER", what="a number or 'pi'").value)
            pi = False
            if self.at("STAR"):
                self.advance()
                self.expect("NAME", "pi", "'pi'")
                pi = True
        den = 1.0
        if self.at("SLASH"):
            self.advance()
            d = self.expect("NUMBER", what="a denominator")
            if d.value == 0:
                self.error("division by zero", d)
            den = float(d.value)
        return Angle(sign * num, pi, den)

    # -- state expressions

    def state_expr(self) -> StateExpr:
        if self.at("LPAREN") and self._paren_holds_ket():
            self.advance()
            terms = self.sum_terms()
            self.expect("RPAREN", what="')'")
            self.expect("SLASH", what="'/'")
            self.expect("NAME", "sqrt2", "'sqrt2'")
            return StateExpr(terms, True)
        return StateExpr(self.sum_terms(), False)

    def _paren_holds_ket(self) -> bool:
        depth, k = 0, self.i
        while k < len(self.toks):
            t = self.toks[k]
            if t.kind == "LPAREN":
                depth += 1
            elif t.kind == "RPAREN":
                depth -= 1
                if depth == 0:
                    return False
            elif t.kind in ("KET",):
                return True
            elif t.kind in ("NEWLINE", "EOF"):
                return False
            k += 1
        return False

    def sum_terms(self) -> tuple[Term, ...]:
        sign = 1
        if self.at("MINUS") or self.at("PLUS"):
            sign = -1 if self.advance().kind == "MINUS" else 1
        terms = [self.term(sign)]
        while self.at("PLUS") or self.at("MINUS"):
            sign = -1 if self.advance().kind == "MINUS" else 1
            terms.append(self.term(sign))
        return tuple(terms)

    def term(self, sign: int) -> Term:
        coef = Coef()
        if not self.at("KET"):
            coef = self.coef()
        k = self.expect("KET", what="a ket such as |f>")
        return Term(coef if sign > 0 else coef.negated(), tuple(k.value))

    def coef(self) -> Coef:
        if self.at("LPAREN"):
            self.advance()
            re, im = self.complex_literal()
            self.expect("RPAREN", what="')'")
        elif self.at("NUMBER"):
            re, im = float(self.advance().value), 0.0
        elif self.at("IMAG"):
            re, im = 0.0, float(self.advance().value)
        elif self.at("NAME", "i"):
            self.advance()
            re, im = 0.0, 1.0
        else:
            self.expected("a coefficient or ket")
        over = False
        if self.at("SLASH"):
            self.advance()
            self.expect("NAME", "sqrt2", "'sqrt2'")
            over = True
        return Coef(re, im, over)

    def complex_literal(self) -> tuple[float, float]:
        def part():
            s = 1.0
            if self.at("MINUS") or self.at("PLUS"):
                s = -1.0 if self.advance().kind == "MINUS" else 1.0
            if self.at("NUMBER"):
                return s * float(self.advance().value), False
            if self.at("IMAG"):
                return s * float(self.advance().value), True
            if self.at("NAME", "i"):
                self.advance()
                return s, True
            self.expected("a number")

        re = im = 0.0
        v, is_im = part()
        if is_im:
            im = v
        else:
            re = v
        if self.at("PLUS") or self.at("MINUS"):
            v, is_im = part()
            if is_im and im == 0.0:
                im = v
            elif not is_im and re == 0.0:
                re = v
            else:
                self.error("complex literal needs one real and one imaginary part")
        return re, im


def _names_used(step):
    if isinstance(step, Prepare):
        return [step.target]
    if isinstance(step, Rotate):
        return [step.atom]
    if isinstance(step, Pass):
        return [step.atom, step.cavity]
    if isinstance(step, Measure):
        return [step.target]
    if isinstance(step, AssertFidelity):
        return list(step.targets)
    if isinstance(step, OnOutcome):
        return [a for a, _ in step.pattern]
    return []


def _unresolved(proto: Protocol) -> list[Diagnostic]:
    declared = {d.name for d in proto.declarations}
    out = []

    def walk(steps):
        for s in steps:
            for n in _names_used(s):
                if n not in declared:
                    out.append(Diagnostic("error", f"undeclared subsystem {n!r}", s.pos.line, s.pos.column))
            if isinstance(s, OnOutcome):
                walk(s.body)

    walk(proto.steps)
    return out


def parse_source(src: ScriptSource | str, name: str = "<script>") -> ParseResult:
    """Parse without raising; diagnostics are returned alongside the tree."""
    if isinstance(src, str):
        src = ScriptSource(src, name)
    tokens, diags = tokenize(src.text)
    p = _Parser(tokens, src.name)
    proto = p.protocol()
    all_diags = tuple(sorted(diags + p.diags + _unresolved(proto), key=lambda d: (d.line, d.column)))
    return ParseResult(None if all_diags else proto, all_diags)


def parse(src: ScriptSource | str, name: str = "<script>") -> Protocol:
    """Parse a script, raising :class:`ScriptError` with every diagnostic on failure."""
    res = parse_source(src, name)
    if res.diagnostics:
        raise ScriptError(res.diagnostics, src.name if isinstance(src, ScriptSource) else name)
    return res.protocol


def load(path) -> Protocol:
    path = Path(path)
    try:
        src = ScriptSource.from_path(path)
    except UnicodeDecodeError as exc:
        raise ScriptError([Diagnostic("error", f"file is not valid UTF-8: {exc.reason}", 1, 1)], str(path)) from None
    return parse(src)
