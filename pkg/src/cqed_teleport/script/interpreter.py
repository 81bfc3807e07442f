"""Execute a validated script by expanding every measurement into branches."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..evolution import JcParams, dispersive_semiclassical, jc_dispersive_propagator, jc_exact_propagator, ramsey_rotation
from ..hilbert import (
    Atom,
    Cavity,
    Operator,
    StateVector,
    apply,
    embed_operator,
    make_layout,
    measure_subsystem,
    reduced_overlap,
    tensor_state,
)
from ..lambda_atom import LambdaParams, lambda_dispersive_phi, lambda_exact_propagator
from ..protocol import ProtocolError, format_real, named_rotation, pass_operator
from .nodes import (
    AssertFidelity,
    AtomDecl,
    CavityDecl,
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
from .validate import validate

SCHEMA = "cqed-teleport/run-report/1"


@dataclass(frozen=True)
class AssertionResult:
    line: int
    targets: tuple[str, ...]
    fidelity: float
    tolerance: float
    passed: bool


@dataclass
class RunBranch:
    outcomes: dict = field(default_factory=dict)
    probability: float = 1.0
    state: StateVector | None = None
    assertions: list = field(default_factory=list)
    acceptance: float = 1.0
    error: str | None = None

    def fork(self, **kw) -> "RunBranch":
        return replace(self, outcomes=dict(self.outcomes), assertions=list(self.assertions), **kw)


@dataclass(frozen=True)
class RunReport:
    name: str
    mode: str
    seed: int | None
    branches: tuple[RunBranch, ...]
    total_probability: float

    @property
    def all_passed(self) -> bool:
        return all(b.error is None and all(a.passed for a in b.assertions) for b in self.branches)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "script": self.name,
            "mode": self.mode,
            "seed": self.seed,
            "total_probability": format_real(self.total_probability),
            "all_passed": self.all_passed,
            "branches": [
                {
                    "outcomes": dict(b.outcomes),
                    "probability": format_real(b.probability),
                    "acceptance": format_real(b.acceptance),
                    "assertions": [
                        {
                            "line": a.line,
                            "targets": list(a.targets),
                            "fidelity": format_real(a.fidelity),
                            "tolerance": a.tolerance,
                            "passed": a.passed,
                        }
                        for a in b.assertions
                    ],
                    "error": b.error,
                }
                for b in self.branches
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _spec(decl):
    if isinstance(decl, AtomDecl):
        return Atom(decl.levels, decl.name)
    return Cavity(decl.n_max, decl.name)


def build_state(expr: StateExpr, decls) -> StateVector:
    layout = make_layout([_spec(d) for d in decls])
    amps = np.zeros(layout.dim, dtype=complex)
    for labels, c in expr.amplitudes().items():
        amps[layout.index(list(labels))] += c
    return StateVector(layout, amps)


def rotation_operator(rot, levels) -> Operator:
    if isinstance(rot, NamedRotation):
        return named_rotation(rot.name, levels)
    if isinstance(rot, RamseyRotation):
        return ramsey_rotation(rot.theta.value, rot.amplitude_angle.value, levels=levels)
    if isinstance(rot, PhaseRotation):
        return dispersive_semiclassical(rot.beta.value, levels)
    raise TypeError(rot)


def pass_matrix(step: Pass, atom: AtomDecl, cavity: CavityDecl) -> Operator:
    """Lower a ``pass`` statement onto a propagator on ``[atom, cavity]``."""
    prop, n_max = step.propagator, cavity.n_max
    ratio = prop.get("ratio")
    if prop.kind == "jc":
        delta = prop.get("delta")
        return jc_exact_propagator(JcParams(1.0, 0.0 if delta is None else delta.value, prop.get("gt").value), n_max)
    phi = prop.get("phi").value
    if prop.kind == "dispersive":
        if atom.config == "two-level":
            return jc_dispersive_propagator(phi, n_max)
        model = "dispersive" if ratio is None else "exact"
        return pass_operator("cascade", n_max, model, phi, 200.0 if ratio is None else ratio.value)
    if len(atom.levels) == 2:
        model = "dispersive" if ratio is None else "exact"
        return pass_operator("lambda", n_max, model, phi, 200.0 if ratio is None else ratio.value)
    if ratio is None:
        return lambda_dispersive_phi(phi, n_max)
    r = ratio.value
    return lambda_exact_propagator(LambdaParams(1.0, 1.0, r, phi * r / 2), n_max)


class _Runner:
    def __init__(self, p: Protocol):
        self.p = p
        self.decl = {d.name: d for d in p.declarations}

    def run(self, steps, branches: list[RunBranch]) -> list[RunBranch]:
        for s in steps:
            out = []
            for b in branches:
                if b.error is not None:
                    out.append(b)
                    continue
                try:
                    out.extend(self.step(s, b))
                except (ProtocolError, ValueError, ArithmeticError) as exc:
                    out.append(b.fork(error=f"line {s.pos.line}: {exc}"))
            branches = out
        return branches

    def step(self, s, b: RunBranch) -> list[RunBranch]:
        if isinstance(s, Prepare):
            part = build_state(s.state, [self.decl[s.target]]).normalized()
            b.state = part if b.state is None else tensor_state(b.state, part)
            return [b]
        if isinstance(s, Rotate):
            op = rotation_operator(s.rotation, self.decl[s.atom].levels)
            b.state = apply(embed_operator(op, s.atom, b.state.layout), b.state)
            return [b]
        if isinstance(s, Pass):
            op = pass_matrix(s, self.decl[s.atom], self.decl[s.cavity])
            out = apply(embed_operator(op, [s.atom, s.cavity], b.state.layout), b.state)
            if not op.unitary:
                b.acceptance *= out.norm**2
                out = out.normalized()
            b.state = out
            return [b]
        if isinstance(s, Measure):
            return self.measure(s, b)
        if isinstance(s, OnOutcome):
            if all(b.outcomes.get(a) == lev for a, lev in s.pattern):
                return self.run(s.body, [b])
            return [b]
        if isinstance(s, AssertFidelity):
            target = build_state(s.state, [self.decl[t] for t in s.targets]).normalized()
            f = reduced_overlap(b.state, target, list(s.targets))
            b.assertions.append(AssertionResult(s.pos.line, s.targets, f, s.tolerance, f >= 1 - s.tolerance))
            return [b]
        raise TypeError(s)

    def measure(self, s: Measure, b: RunBranch) -> list[RunBranch]:
        psi = b.state
        if len(psi.layout) == 1:
            probs = np.abs(psi.amplitudes) ** 2 / psi.norm**2
            labels = psi.layout.subsystems[0].labels
            outcomes = [(lab, float(p), None) for lab, p in zip(labels, probs) if p >= 1e-14]
        else:
            outcomes = [(o.labels[s.target], o.probability, o.state) for o in measure_subsystem(psi, s.target)]
        if s.keep is not None:
            hit = [o for o in outcomes if o[0] == s.keep]
            if not hit:
                raise ProtocolError(f"post-selection on {s.target}={s.keep} has zero probability")
            lab, p, st = hit[0]
            nb = b.fork(state=st, acceptance=b.acceptance * p)
            nb.outcomes[s.target] = lab
            return [nb]
        out = []
        for lab, p, st in outcomes:
            nb = b.fork(state=st, probability=b.probability * p)
            nb.outcomes[s.target] = lab
            out.append(nb)
        return out


def execute(p: Protocol, mode: str = "enumerate", seed: int | None = None, check: bool = True) -> RunReport:
    """Run ``p`` and return every leaf branch (or one sampled leaf).

    Assertions are recorded per branch, never raised. Runtime contract
    violations end the affected branch and are stored in its ``error`` field.
    """
    if mode not in ("enumerate", "sample"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "sample" and seed is None:
        raise ValueError("sample mode needs a seed")
    if check:
        validate(p)
    leaves = _Runner(p).run(p.steps, [RunBranch()])
    total = float(math.fsum(b.probability for b in leaves))
    report = RunReport(p.name, "enumerate", None, tuple(leaves), total)
    if mode == "sample":
        rng = np.random.default_rng(seed)
        probs = np.array([b.probability for b in leaves])
        i = int(rng.choice(len(leaves), p=probs / probs.sum()))
        report = RunReport(p.name, "sample", seed, (leaves[i],), leaves[i].probability)
    return report

