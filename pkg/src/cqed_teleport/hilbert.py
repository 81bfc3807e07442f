"""
Composite Hilbert spaces of atoms and cavity modes.

Basis ordering follows the way kets are written: the leftmost subsystem of a
layout is the most significant digit of the mixed-radix basis index. For
``[Atom(f, g), Atom(f, g), Cavity(n_max=1)]`` the ket ``|g>|f>|1>`` sits at
index ``1*4 + 0*2 + 1 = 5``.

All containers are immutable and every function is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

#: Normalisation tolerance for freshly constructed states.
NORM_TOL = 1e-12
#: Allowed norm drift after applying unitary-flagged operators.
DRIFT_TOL = 1e-10
#: Branches whose probability falls below this are treated as impossible.
BRANCH_CUTOFF = 1e-14
#: Largest composite dimension we are willing to allocate.
MAX_DIM = 10**6

SubsystemId = Union[int, str]


class LayoutError(ValueError):
    """Raised for malformed layouts or mismatched subsystems."""


@dataclass(frozen=True)
class Atom:
    """An atom restricted to an ordered list of named levels."""

    levels: tuple[str, ...]
    name: str = ""

    def __init__(self, levels: Iterable[str], name: str = ""):
        object.__setattr__(self, "levels", tuple(levels))
        object.__setattr__(self, "name", name)

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.levels


@dataclass(frozen=True)
class Cavity:
    """A single field mode truncated to Fock states ``|0>..|n_max>``."""

    n_max: int
    name: str = ""

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(str(n) for n in range(self.n_max + 1))


SubsystemSpec = Union[Atom, Cavity]


@dataclass(frozen=True)
class SystemLayout:
    subsystems: tuple[SubsystemSpec, ...]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.subsystems else 1

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.subsystems)

    def __len__(self) -> int:
        return len(self.subsystems)

    def position(self, target: SubsystemId) -> int:
        """Resolve a subsystem name or index to its position."""
        if isinstance(target, (int, np.integer)):
            if not 0 <= target < len(self.subsystems):
                raise LayoutError(f"subsystem index {target} out of range for {len(self)} subsystems")
            return int(target)
        try:
            return self.names.index(target)
        except ValueError:
            raise LayoutError(f"no subsystem named {target!r}; have {list(self.names)}") from None

    def __getitem__(self, target: SubsystemId) -> SubsystemSpec:
        return self.subsystems[self.position(target)]

    def index(self, labels: Sequence[str | int]) -> int:
        """Mixed-radix index of the product basis ket with the given labels."""
        if len(labels) != len(self.subsystems):
            raise LayoutError(f"expected {len(self.subsystems)} labels, got {len(labels)}")
        idx = 0
        for spec, lab in zip(self.subsystems, labels):
            idx = idx * spec.dim + spec.labels.index(str(lab))
        return idx

    def labels_of(self, index: int) -> tuple[str, ...]:
        digits = np.unravel_index(index, self.dims)
        return tuple(s.labels[int(d)] for s, d in zip(self.subsystems, digits))

    def without(self, target: SubsystemId) -> "SystemLayout":
        pos = self.position(target)
        return SystemLayout(self.subsystems[:pos] + self.subsystems[pos + 1 :])

    def sub(self, targets: Sequence[SubsystemId]) -> "SystemLayout":
        return SystemLayout(tuple(self.subsystems[self.position(t)] for t in targets))


def make_layout(specs: Iterable[SubsystemSpec]) -> SystemLayout:
    """Validate subsystem specs and fix the basis ordering.

    Unnamed subsystems get positional names (``atom0``, ``cavity1``...) so that
    measurement records stay meaningful after other subsystems are removed.
    """
    specs = list(specs)
    if not specs:
        raise LayoutError("a layout needs at least one subsystem")
    named = []
    for i, s in enumerate(specs):
        if isinstance(s, Atom):
            if not s.levels:
                raise LayoutError("atom level list must be non-empty")
            if len(set(s.levels)) != len(s.levels):
                raise LayoutError(f"duplicate level names in {s.levels}")
            named.append(s if s.name else Atom(s.levels, f"atom{i}"))
        elif isinstance(s, Cavity):
            if int(s.n_max) < 1:
                raise LayoutError(f"Fock cutoff must be >= 1, got {s.n_max}")
            named.append(s if s.name else Cavity(int(s.n_max), f"cavity{i}"))
        else:
            raise LayoutError(f"unknown subsystem spec {s!r}")
    names = [s.name for s in named]
    if len(set(names)) != len(names):
        raise LayoutError(f"duplicate subsystem names {names}")
    return SystemLayout(tuple(named))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    layout: SystemLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape[0] != self.layout.dim:
            raise LayoutError(f"{amps.shape[0]} amplitudes for a layout of dimension {self.layout.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalise the zero vector")
        return StateVector(self.layout, self.amplitudes / n)

    def amplitude(self, labels: Sequence[str | int]) -> complex:
        return complex(self.amplitudes[self.layout.index(labels)])

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amplitudes.reshape(self.layout.dims)


def state(layout: SystemLayout, amplitudes, normalize: bool = False) -> StateVector:
    """Build a state, optionally normalising; otherwise the norm is checked."""
    psi = StateVector(layout, amplitudes)
    if normalize:
        return psi.normalized()
    if abs(psi.norm - 1) > NORM_TOL:
        raise ValueError(f"state norm {psi.norm!r} differs from 1 by more than {NORM_TOL}")
    return psi


def basis_state(layout: SystemLayout, labels: Sequence[str | int]) -> StateVector:
    amps = np.zeros(layout.dim, dtype=complex)
    amps[layout.index(labels)] = 1
    return StateVector(layout, amps)


def ket(spec: SubsystemSpec, coefficients: dict) -> StateVector:
    """Single-subsystem state from ``{label: amplitude}``; normalised on the way."""
    layout = make_layout([spec])
    amps = np.zeros(layout.dim, dtype=complex)
    for lab, c in coefficients.items():
        amps[layout.index([lab])] += c
    return state(layout, amps, normalize=True)


def tensor_state(*parts: StateVector, max_dim: int = MAX_DIM) -> StateVector:
    """Kronecker product of states in the order given."""
    if len(parts) == 1 and not isinstance(parts[0], StateVector):
        parts = tuple(parts[0])
    if not parts:
        raise LayoutError("tensor_state needs at least one part")
    dim = 1
    for p in parts:
        dim *= p.layout.dim
    if dim > max_dim:
        raise LayoutError(f"composite dimension {dim} exceeds limit {max_dim}")
    layout = make_layout([s for p in parts for s in p.layout.subsystems])
    amps = parts[0].amplitudes
    for p in parts[1:]:
        amps = np.kron(amps, p.amplitudes)
    return StateVector(layout, amps)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on a layout. ``unitary=True`` is checked on construction."""

    layout: SystemLayout
    matrix: np.ndarray = field(repr=False)
    unitary: bool = False

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.layout.dim
        if m.shape != (d, d):
            raise LayoutError(f"matrix shape {m.shape} does not match layout dimension {d}")
        object.__setattr__(self, "matrix", m)
        if self.unitary:
            err = unitarity_error(m)
            if err > NORM_TOL:
                raise ValueError(f"operator flagged unitary but |U^dag U - I|_max = {err:.3e}")

    def __matmul__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        _same_layout(self.layout, other.layout)
        return Operator(self.layout, self.matrix @ other.matrix, self.unitary and other.unitary)

    @property
    def dagger(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T, self.unitary)


def unitarity_error(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max())


def _same_layout(a: SystemLayout, b: SystemLayout) -> None:
    if a.dims != b.dims or a.names != b.names:
        raise LayoutError(f"layout mismatch: {a.names}{a.dims} vs {b.names}{b.dims}")


def embed_operator(op: Operator, target, layout: SystemLayout) -> Operator:
    """Lift ``op`` onto ``layout``, acting on ``target`` and as identity elsewhere.

    ``target`` is one subsystem id, or a sequence of ids when ``op`` acts on
    several subsystems at once (its own subsystem order maps onto the targets in
    the order given, which need not be contiguous or sorted).
    """
    targets = [target] if isinstance(target, (int, str, np.integer)) else list(target)
    pos = [layout.position(t) for t in targets]
    if len(set(pos)) != len(pos):
        raise LayoutError(f"repeated target subsystem in {targets}")
    tdims = tuple(layout.dims[p] for p in pos)
    if op.layout.dims != tdims:
        raise LayoutError(f"operator dims {op.layout.dims} do not match target dims {tdims}")
    others = [p for p in range(len(layout)) if p not in pos]
    rest = int(np.prod([layout.dims[p] for p in others], dtype=np.int64)) if others else 1
    big = np.kron(op.matrix, np.eye(rest))
    order = pos + others
    n = len(order)
    perm_dims = [layout.dims[p] for p in order]
    big = big.reshape(perm_dims + perm_dims)
    inv = np.argsort(order)
    big = big.transpose(list(inv) + [n + i for i in inv])
    return Operator(layout, big.reshape(layout.dim, layout.dim), op.unitary)


def apply(op: Operator, psi: StateVector) -> StateVector:
    _same_layout(op.layout, psi.layout)
    out = StateVector(psi.layout, op.matrix @ psi.amplitudes)
    if op.unitary and abs(out.norm - psi.norm) > DRIFT_TOL:
        raise ValueError(f"norm drift {abs(out.norm - psi.norm):.3e} under a unitary operator")
    return out


def apply_on(op: Operator, target, psi: StateVector) -> StateVector:
    """Shorthand for ``apply(embed_operator(op, target, psi.layout), psi)``."""
    return apply(embed_operator(op, target, psi.layout), psi)


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2``; insensitive to global phase."""
    _same_layout(a.layout, b.layout)
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


@dataclass(frozen=True)
class BranchOutcome:
    labels: dict
    probability: float
    state: StateVector


def _split(psi: StateVector, pos: int) -> np.ndarray:
    dims = psi.layout.dims
    pre = int(np.prod(dims[:pos], dtype=np.int64))
    return psi.amplitudes.reshape(pre, dims[pos], -1)


def project(psi: StateVector, target: SubsystemId, level: str) -> tuple[float, StateVector | None]:
    """Project ``target`` onto ``level`` and drop it from the layout.

    Returns the Born probability and the renormalised remainder (``None`` when
    the probability is below the branch cutoff).
    """
    layout = psi.layout
    pos = layout.position(target)
    spec = layout.subsystems[pos]
    k = spec.labels.index(str(level))
    block = _split(psi, pos)[:, k, :].ravel()
    p = float(np.vdot(block, block).real)
    if p < BRANCH_CUTOFF:
        return p, None
    rest = layout.without(pos)
    return p, StateVector(rest, block / np.sqrt(p))


def measure_subsystem(psi: StateVector, target: SubsystemId) -> list[BranchOutcome]:
    """Projective measurement of one subsystem in its level basis.

    One branch per level with non-negligible probability, in level order. The
    measured subsystem is removed from each post-measurement state.
    """
    layout = psi.layout
    pos = layout.position(target)
    spec = layout.subsystems[pos]
    total = psi.norm**2
    out = []
    for lev in spec.labels:
        p, post = project(psi, pos, lev)
        if post is not None:
            out.append(BranchOutcome({spec.name: lev}, p / total, post))
    return out


def reduced_overlap(psi: StateVector, target_state: StateVector, targets: Sequence[SubsystemId]) -> float:
    """``<phi| rho_T |phi>`` for the reduced state of ``targets``.

    This is the fidelity between the pure ``target_state`` and whatever
    (possibly mixed) state the targets are left in; it equals :func:`fidelity`
    when the targets make up the whole layout.
    """
    layout = psi.layout
    pos = [layout.position(t) for t in targets]
    tdims = tuple(layout.dims[p] for p in pos)
    if target_state.layout.dims != tdims:
        raise LayoutError(f"target state dims {target_state.layout.dims} do not match {tdims}")
    others = [p for p in range(len(layout)) if p not in pos]
    t = psi.tensor().transpose(pos + others).reshape(int(np.prod(tdims)), -1)
    proj = target_state.amplitudes.conj() @ t
    return float(min(1.0, np.vdot(proj, proj).real / psi.norm**2))


def factor_out(psi: StateVector, target: SubsystemId, tol: float = 1e-10) -> tuple[StateVector, StateVector]:
    """Split ``psi`` into ``(factor of target, rest)`` if it is a product state.

    Raises ``ValueError`` when the target is entangled with the rest (second
    Schmidt coefficient above ``tol``).
    """
    layout = psi.layout
    pos = layout.position(target)
    others = [p for p in range(len(layout)) if p != pos]
    m = psi.tensor().transpose([pos] + others).reshape(layout.dims[pos], -1)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if len(s) > 1 and s[1] > tol:
        raise ValueError(
            f"subsystem {layout.names[pos]!r} is entangled with the rest (Schmidt coefficient {s[1]:.3e})"
        )
    sub = StateVector(layout.sub([pos]), u[:, 0])
    rest = StateVector(layout.without(pos), s[0] * vh[0])
    return sub, rest


def permute(psi: StateVector, order: Sequence[SubsystemId]) -> StateVector:
    """Reorder subsystems; ``order`` lists every subsystem exactly once."""
    layout = psi.layout
    pos = [layout.position(t) for t in order]
    if sorted(pos) != list(range(len(layout))):
        raise LayoutError(f"{list(order)} is not a permutation of {list(layout.names)}")
    return StateVector(layout.sub(pos), psi.tensor().transpose(pos).ravel())
