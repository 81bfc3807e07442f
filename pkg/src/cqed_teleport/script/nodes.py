"""Syntax tree of a protocol script.

Nodes compare by content only; source positions ride along but are excluded
from equality so that re-parsing pretty-printed text gives an equal tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class Pos:
    line: int
    column: int


_NOPOS = field(default=Pos(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Angle:
    """``num * (pi if pi) / den``."""

    num: float
    pi: bool = False
    den: float = 1.0

    @property
    def value(self) -> float:
        return self.num * (math.pi if self.pi else 1.0) / self.den


@dataclass(frozen=True)
class Coef:
    re: float = 1.0
    im: float = 0.0
    over_sqrt2: bool = False

    @property
    def value(self) -> complex:
        return complex(self.re, self.im) * (SQRT_HALF if self.over_sqrt2 else 1.0)

    def negated(self) -> "Coef":
        return Coef(-self.re, -self.im, self.over_sqrt2)


@dataclass(frozen=True)
class Term:
    coef: Coef
    labels: tuple[str, ...]


@dataclass(frozen=True)
class StateExpr:
    terms: tuple[Term, ...]
    over_sqrt2: bool = False

    def amplitudes(self) -> dict[tuple[str, ...], complex]:
        out: dict[tuple[str, ...], complex] = {}
        scale = SQRT_HALF if self.over_sqrt2 else 1.0
        for t in self.terms:
            out[t.labels] = out.get(t.labels, 0) + t.coef.value * scale
        return out


@dataclass(frozen=True)
class AtomDecl:
    name: str
    config: str
    levels: tuple[str, ...]
    pos: Pos = _NOPOS


@dataclass(frozen=True)
class CavityDecl:
    name: str
    n_max: int
    pos: Pos = _NOPOS


Declaration = Union[AtomDecl, CavityDecl]


@dataclass(frozen=True)
class NamedRotation:
    name: str


@dataclass(frozen=True)
class RamseyRotation:
    theta: Angle
    amplitude_angle: Angle


@dataclass(frozen=True)
class PhaseRotation:
    beta: Angle


RotationExpr = Union[NamedRotation, RamseyRotation, PhaseRotation]


@dataclass(frozen=True)
class Propagator:
    kind: str
    params: tuple[tuple[str, Angle], ...]

    def get(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class Prepare:
    target: str
    state: StateExpr
    pos: Pos = _NOPOS


@dataclass(frozen=True)
class Rotate:
    atom: str
    rotation: RotationExpr
    pos: Pos = _NOPOS


@dataclass(frozen=True)
class Pass:
    atom: str
    cavity: str
    propagator: Propagator
    pos: Pos = _NOPOS


@dataclass(frozen=True)
class Measure:
    target: str
    keep: str | None = None
    pos: Pos = _NOPOS


@dataclass(frozen=True)
class OnOutcome:
    pattern: tuple[tuple[str, str], ...]
    body: tuple["Step", ...]
    pos: Pos = _NOPOS


@dataclass(frozen=True)
class AssertFidelity:
    targets: tuple[str, ...]
    state: StateExpr
    tolerance: float
    pos: Pos = _NOPOS


Step = Union[Prepare, Rotate, Pass, Measure, OnOutcome, AssertFidelity]


@dataclass(frozen=True)
class Protocol:
    declarations: tuple[Declaration, ...]
    steps: tuple[Step, ...]
    name: str = field(default="<script>", compare=False)

    def declaration(self, name: str) -> Declaration | None:
        for d in self.declarations:
            if d.name == name:
                return d
        return None

    @property
    def atoms(self) -> tuple[AtomDecl, ...]:
        return tuple(d for d in self.declarations if isinstance(d, AtomDecl))

    @property
    def cavities(self) -> tuple[CavityDecl, ...]:
        return tuple(d for d in self.declarations if isinstance(d, CavityDecl))
