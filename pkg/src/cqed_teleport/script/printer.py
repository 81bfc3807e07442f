"""Canonical text and tree dumps of a parsed script."""

from __future__ import annotations

import json
from dataclasses import fields, is_dataclass

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
    Prepare,
    Protocol,
    RamseyRotation,
    Rotate,
    StateExpr,
)

INDENT = "  "


def fmt_number(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def fmt_angle(a: Angle) -> str:
    if a.pi:
        core = {1.0: "pi", -1.0: "-pi"}.get(a.num, f"{fmt_number(a.num)}*pi")
    else:
        core = fmt_number(a.num)
    return core if a.den == 1 else f"{core}/{fmt_number(a.den)}"


def fmt_coef(c: Coef) -> str:
    if c.im == 0:
        if c.re == 1:
            core = "1" if c.over_sqrt2 else ""
        elif c.re == -1:
            core = "-1" if c.over_sqrt2 else "-"
        else:
            core = fmt_number(c.re)
    elif c.re == 0:
        core = {1.0: "i", -1.0: "-i"}.get(c.im, f"{fmt_number(c.im)}i")
    else:
        sign = "-" if c.im < 0 else "+"
        core = f"({fmt_number(c.re)}{sign}{fmt_number(abs(c.im))}i)"
    return core + "/sqrt2" if c.over_sqrt2 else core


def fmt_state(s: StateExpr) -> str:
    parts = []
    for k, t in enumerate(s.terms):
        text = fmt_coef(t.coef) + "|" + ",".join(t.labels) + ">"
        if k == 0:
            parts.append(text)
        elif text.startswith("-"):
            parts.append(" - " + text[1:])
        else:
            parts.append(" + " + text)
    body = "".join(parts)
    return f"({body})/sqrt2" if s.over_sqrt2 else body


def fmt_rotation(r) -> str:
    if isinstance(r, NamedRotation):
        return r.name
    if isinstance(r, RamseyRotation):
        return f"ramsey({fmt_angle(r.theta)}, {fmt_angle(r.amplitude_angle)})"
    if isinstance(r, PhaseRotation):
        return f"phase({fmt_angle(r.beta)})"
    raise TypeError(r)


def _step_lines(s, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, Prepare):
        return [f"{pad}prepare {s.target} {fmt_state(s.state)}"]
    if isinstance(s, Rotate):
        return [f"{pad}rotate {s.atom} {fmt_rotation(s.rotation)}"]
    if isinstance(s, Pass):
        params = "".join(f" {k}={fmt_angle(v)}" for k, v in s.propagator.params)
        return [f"{pad}pass {s.atom} through {s.cavity} {s.propagator.kind}{params}"]
    if isinstance(s, Measure):
        return [f"{pad}measure {s.target}" + (f" keep {s.keep}" if s.keep is not None else "")]
    if isinstance(s, AssertFidelity):
        return [f"{pad}assert {' '.join(s.targets)} {fmt_state(s.state)} tol {fmt_tol(s.tolerance)}"]
    if isinstance(s, OnOutcome):
        head = f"{pad}on " + " ".join(f"{a}={lev}" for a, lev in s.pattern) + " {"
        if not s.body:
            return [head + " }"]
        lines = [head]
        for b in s.body:
            lines += _step_lines(b, depth + 1)
        return lines + [pad + "}"]
    raise TypeError(s)


def fmt_tol(x: float) -> str:
    return f"{x:.0e}".replace("e-0", "e-") if float(f"{x:.0e}") == x else repr(x)


def format_protocol(p: Protocol) -> str:
    """Pretty-print ``p`` as script text; parsing the result gives an equal tree."""
    lines = []
    for d in p.declarations:
        if isinstance(d, AtomDecl):
            lines.append(f"atom {d.name} {d.config} {' '.join(d.levels)}")
        elif isinstance(d, CavityDecl):
            lines.append(f"cavity {d.name} fock {d.n_max}")
    if p.steps:
        lines.append("")
    for s in p.steps:
        lines += _step_lines(s, 0)
    return "\n".join(lines) + "\n"


def _plain(node):
    if is_dataclass(node):
        out = {"node": type(node).__name__}
        for f in fields(node):
            if f.compare:
                out[f.name] = _plain(getattr(node, f.name))
        return out
    if isinstance(node, (tuple, list)):
        return [_plain(x) for x in node]
    return node


def dump_ast(p: Protocol) -> str:
    """Position-free JSON rendering of the tree, stable enough for golden files."""
    return json.dumps(_plain(p), indent=1) + "\n"
