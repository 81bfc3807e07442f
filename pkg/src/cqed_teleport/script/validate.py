"""Static checks on a parsed script.

The validator walks the steps in order, tracking which subsystems are live
(prepared and not yet measured) and which atoms have a recorded outcome. It
collects every problem instead of stopping at the first.
"""

from __future__ import annotations

import math

from ..protocol import ROTATION_NAMES
from .lexer import Diagnostic, ScriptError
from .nodes import (
    AssertFidelity,
    AtomDecl,
    CavityDecl,
    Measure,
    NamedRotation,
    OnOutcome,
    Pass,
    Pos,
    Prepare,
    Protocol,
    Rotate,
    StateExpr,
)
from .parser import KEYWORDS

LEVEL_COUNTS = {"cascade": (2, 3), "lambda": (2, 3), "two-level": (2,)}
PROPAGATOR_CONFIGS = {"dispersive": ("cascade", "two-level"), "lambda": ("lambda",), "jc": ("two-level",)}
PROPAGATOR_PARAMS = {"dispersive": ({"phi"}, {"ratio"}), "lambda": ({"phi"}, {"ratio"}), "jc": ({"gt"}, {"delta"})}
NORM_SLACK = 1e-9


def subsystem_labels(decl) -> tuple[str, ...]:
    if isinstance(decl, AtomDecl):
        return decl.levels
    return tuple(str(n) for n in range(decl.n_max + 1))


class _Checker:
    def __init__(self, p: Protocol):
        self.p = p
        self.diags: list[Diagnostic] = []

    def err(self, pos: Pos, msg: str):
        self.diags.append(Diagnostic("error", msg, pos.line, pos.column))

    def lookup(self, name: str, pos: Pos, kind=None):
        d = self.p.declaration(name)
        if d is None:
            self.err(pos, f"undeclared subsystem {name!r}")
            return None
        if kind is AtomDecl and not isinstance(d, AtomDecl):
            self.err(pos, f"{name!r} is a cavity, expected an atom")
            return None
        if kind is CavityDecl and not isinstance(d, CavityDecl):
            self.err(pos, f"{name!r} is an atom, expected a cavity")
            return None
        return d

    def need_live(self, name: str, pos: Pos, live: set):
        if name not in live:
            self.err(pos, f"{name!r} is not prepared at this point (or was already measured)")

    def declarations(self):
        for d in self.p.declarations:
            if d.name in KEYWORDS:
                self.err(d.pos, f"{d.name!r} is a reserved word")
            if isinstance(d, AtomDecl):
                if d.config not in LEVEL_COUNTS:
                    self.err(d.pos, f"unknown atom configuration {d.config!r}")
                elif len(d.levels) not in LEVEL_COUNTS[d.config]:
                    counts = " or ".join(map(str, LEVEL_COUNTS[d.config]))
                    self.err(d.pos, f"{d.config} atom {d.name!r} needs {counts} levels, got {len(d.levels)}")
                if len(set(d.levels)) != len(d.levels):
                    self.err(d.pos, f"atom {d.name!r} repeats a level name")
            elif d.n_max < 1:
                self.err(d.pos, f"cavity {d.name!r} needs a Fock cutoff of at least 1")

    def state(self, st: StateExpr, decls, pos: Pos, require_unit: bool):
        ok = True
        for t in st.terms:
            if len(t.labels) != len(decls):
                self.err(pos, f"ket |{','.join(t.labels)}> has {len(t.labels)} labels, expected {len(decls)}")
                ok = False
                continue
            for lab, d in zip(t.labels, decls):
                if d is not None and lab not in subsystem_labels(d):
                    self.err(pos, f"unknown level {lab!r} for {d.name!r}; allowed: {', '.join(subsystem_labels(d))}")
                    ok = False
        if ok:
            n2 = sum(abs(a) ** 2 for a in st.amplitudes().values())
            if n2 == 0:
                self.err(pos, "state expression has zero norm")
            elif require_unit and abs(n2 - 1) > NORM_SLACK:
                self.err(pos, f"state is not normalised (squared norm {n2:.12g})")

    def steps(self, steps, live: set, measured: set, in_block: bool):
        for s in steps:
            if isinstance(s, Prepare):
                d = self.lookup(s.target, s.pos)
                if in_block:
                    self.err(s.pos, "prepare is not allowed inside an on block")
                if d is not None:
                    if s.target in live:
                        self.err(s.pos, f"{s.target!r} is already prepared; measure it first")
                    self.state(s.state, [d], s.pos, True)
                    live.add(s.target)
            elif isinstance(s, Rotate):
                d = self.lookup(s.atom, s.pos, AtomDecl)
                self.need_live(s.atom, s.pos, live)
                if isinstance(s.rotation, NamedRotation) and s.rotation.name not in ROTATION_NAMES:
                    self.err(s.pos, f"unknown rotation {s.rotation.name!r}; known: {', '.join(ROTATION_NAMES)}")
                if d is not None and len(d.levels) != 2:
                    self.err(s.pos, f"rotations act on two-level atoms; {s.atom!r} has {len(d.levels)} levels")
            elif isinstance(s, Pass):
                a = self.lookup(s.atom, s.pos, AtomDecl)
                self.lookup(s.cavity, s.pos, CavityDecl)
                self.need_live(s.atom, s.pos, live)
                self.need_live(s.cavity, s.pos, live)
                self.propagator(s, a)
            elif isinstance(s, Measure):
                d = self.lookup(s.target, s.pos)
                if in_block:
                    self.err(s.pos, "measure is not allowed inside an on block")
                self.need_live(s.target, s.pos, live)
                if d is not None and s.keep is not None and s.keep not in subsystem_labels(d):
                    self.err(s.pos, f"unknown level {s.keep!r} for {s.target!r}")
                live.discard(s.target)
                measured.add(s.target)
            elif isinstance(s, OnOutcome):
                seen = set()
                for name, lev in s.pattern:
                    d = self.lookup(name, s.pos)
                    if name in seen:
                        self.err(s.pos, f"{name!r} appears twice in the pattern")
                    seen.add(name)
                    if d is None:
                        continue
                    if lev not in subsystem_labels(d):
                        self.err(s.pos, f"unknown level {lev!r} for {name!r}; allowed: {', '.join(subsystem_labels(d))}")
                    if name not in measured:
                        self.err(s.pos, f"outcome of {name!r} is used before it is measured")
                self.steps(s.body, set(live), measured, True)
            elif isinstance(s, AssertFidelity):
                decls = [self.lookup(t, s.pos) for t in s.targets]
                for t in s.targets:
                    self.need_live(t, s.pos, live)
                if len(set(s.targets)) != len(s.targets):
                    self.err(s.pos, "assert lists a subsystem twice")
                if not 0 < s.tolerance < 1:
                    self.err(s.pos, f"tolerance must lie in (0, 1), got {s.tolerance}")
                self.state(s.state, decls, s.pos, False)

    def propagator(self, s: Pass, atom):
        prop = s.propagator
        allowed = PROPAGATOR_CONFIGS[prop.kind]
        if atom is not None and atom.config not in allowed:
            self.err(s.pos, f"{prop.kind} propagator cannot act on {atom.config} atom {s.atom!r} (needs {' or '.join(allowed)})")
        if atom is not None and prop.kind == "dispersive" and len(atom.levels) != 2:
            self.err(s.pos, f"dispersive pass needs a two-level description of {s.atom!r}")
        required, optional = PROPAGATOR_PARAMS[prop.kind]
        keys = [k for k, _ in prop.params]
        for k in keys:
            if k not in required | optional:
                self.err(s.pos, f"unknown parameter {k!r} for {prop.kind} propagator")
        if len(set(keys)) != len(keys):
            self.err(s.pos, "repeated propagator parameter")
        for k in sorted(required - set(keys)):
            self.err(s.pos, f"{prop.kind} propagator needs {k}=...")
        for k, v in prop.params:
            if not math.isfinite(v.value):
                self.err(s.pos, f"{k} must be finite")
            elif k == "ratio" and v.value <= 0:
                self.err(s.pos, "ratio must be positive")
            elif k == "gt" and v.value < 0:
                self.err(s.pos, "gt must be non-negative")
        if prop.kind == "dispersive" and prop.get("ratio") is not None and atom is not None and atom.config == "two-level":
            self.err(s.pos, "ratio=... (exact pass) is only defined for cascade atoms")


def check(p: Protocol) -> list[Diagnostic]:
    """All static diagnostics for ``p``, sorted by position."""
    c = _Checker(p)
    c.declarations()
    c.steps(p.steps, set(), set(), False)
    return sorted(c.diags, key=lambda d: (d.line, d.column))


def validate(p: Protocol) -> Protocol:
    """Return ``p`` unchanged or raise :class:`ScriptError` listing every violation."""
    diags = check(p)
    if diags:
        raise ScriptError(diags, p.name)
    return p
