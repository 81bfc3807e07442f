"""
Two-level atom / single-mode field propagators.

Frequencies are measured in units of the coupling ``g`` (pass ``g=1`` and give
times as ``g*t``, detunings as ``delta/g``). Every propagator is written in the
interaction picture of the rotating-wave Jaynes-Cummings Hamiltonian, with the
atom listed before the cavity: layout ``[Atom(e, f), Cavity(n_max)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import Atom, Cavity, Operator, make_layout, unitarity_error

SQRT_HALF = math.sqrt(0.5)

_QUARTER_COS = (1.0, SQRT_HALF, 0.0, -SQRT_HALF, -1.0, -SQRT_HALF, 0.0, SQRT_HALF)


def cos_sin(x: float) -> tuple[float, float]:
    """cos and sin, exact at multiples of pi/4 so named gates come out clean."""
    k = x / (math.pi / 4)
    kr = round(k)
    if abs(k - kr) < 1e-12:
        return _QUARTER_COS[kr % 8], _QUARTER_COS[(kr - 2) % 8]
    return math.cos(x), math.sin(x)


def cis(x: float) -> complex:
    c, s = cos_sin(x)
    return complex(c, s)


@dataclass(frozen=True)
class JcParams:
    g: float = 1.0
    delta: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"coupling g must be positive, got {self.g}")
        if self.t < 0:
            raise ValueError(f"interaction time must be non-negative, got {self.t}")


@dataclass(frozen=True)
class RamseyParams:
    theta: float
    amplitude_angle: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.amplitude_angle)):
            raise ValueError("Ramsey angles must be finite")


@dataclass(frozen=True)
class Su2Decomposition:
    alpha: float
    beta: float
    gamma: float
    delta: float


def jc_layout(n_max: int, levels=("e", "f")):
    return make_layout([Atom(levels, "atom"), Cavity(n_max, "cavity")])


def _sin_over(lam, t):
    """sin(lam*t)/lam, finite at lam = 0."""
    return t * np.sinc(lam * t / np.pi)


def jc_block(coupling: float, delta: float, t: float) -> np.ndarray:
    """Propagator of one excitation doublet ``(|e,n>, |f,n+1>)``.

    ``coupling`` is ``g*sqrt(n+1)``. The four entries are the closed forms for
    u_ee, u_ef, u_fe, u_ff with ``mu`` (on ``|e,n>``) and ``nu`` (on
    ``|f,n+1>``) both equal to ``sqrt(coupling**2 + delta**2/4)``. With
    ``coupling=0`` this collapses to the identity.
    """
    lam = math.sqrt(coupling**2 + delta**2 / 4)
    c = math.cos(lam * t)
    so = _sin_over(lam, t)
    ph = np.exp(0.5j * delta * t)
    return np.array(
        [
            [ph * (c - 0.5j * delta * so), -1j * ph * coupling * so],
            [-1j * np.conj(ph) * coupling * so, np.conj(ph) * (c + 0.5j * delta * so)],
        ]
    )


def jc_exact_propagator(p: JcParams, n_max: int) -> Operator:
    """Exact interaction-picture Jaynes-Cummings propagator.

    The matrix is assembled doublet by doublet, so excitation number is
    conserved by construction. The top state ``|e, n_max>`` has no partner
    inside the cutoff; it evolves under the truncated Hamiltonian, which leaves
    it untouched, so the operator is exactly unitary at any cutoff.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    layout = jc_layout(n_max)
    d = n_max + 1
    u = np.zeros((2 * d, 2 * d), dtype=complex)
    e = lambda n: n  # noqa: E731
    f = lambda n: d + n  # noqa: E731
    u[f(0), f(0)] = jc_block(0.0, p.delta, p.t)[1, 1]
    for n in range(d):
        if n + 1 <= n_max:
            b = jc_block(p.g * math.sqrt(n + 1), p.delta, p.t)
            idx = [e(n), f(n + 1)]
            u[np.ix_(idx, idx)] = b
        else:
            u[e(n), e(n)] = jc_block(0.0, p.delta, p.t)[0, 0]
    return Operator(layout, u, unitary=True)


def jc_resonant(gt: float, n_max: int) -> Operator:
    """Resonant (``delta = 0``) propagator for interaction angle ``g*t``."""
    return jc_exact_propagator(JcParams(1.0, 0.0, gt), n_max)


def jc_dispersive_propagator(phi: float, n_max: int) -> Operator:
    """Large-detuning limit: exp(-i phi (n+1)) on ``|e,n>``, exp(i phi n) on ``|f,n>``.

    ``phi = g**2 t / delta``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(n_max + 1)
    diag = np.concatenate([[cis(-phi * (k + 1)) for k in n], [cis(phi * k) for k in n]])
    return Operator(jc_layout(n_max), np.diag(diag), unitary=True)


def cascade_dispersive(phi: float, n_max: int) -> Operator:
    """Dispersive pass of a cascade atom: exp(i phi n) on ``|f>``, identity on ``|g>``.

    The ``|g>`` level is decoupled from the mode, so only ``|f>`` picks up the
    photon-number dependent phase.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(n_max + 1)
    diag = np.concatenate([[cis(phi * k) for k in n], np.ones(n_max + 1)])
    return Operator(jc_layout(n_max, ("f", "g")), np.diag(diag), unitary=True)


def cascade_exact_pass(p: JcParams, n_max: int) -> Operator:
    """Exact counterpart of :func:`cascade_dispersive`, compressed onto ``{f, g}``.

    The ``|f>`` block is the ``u_ff`` entry of the exact propagator; the
    amplitude that leaks into ``|e>`` is discarded, so the result is a
    contraction rather than a unitary.
    """
    full = jc_exact_propagator(p, n_max).matrix
    d = n_max + 1
    u = np.zeros((2 * d, 2 * d), dtype=complex)
    u[:d, :d] = full[d:, d:]
    u[d:, d:] = np.eye(d)
    return Operator(jc_layout(n_max, ("f", "g")), u, unitary=False)


def _two_level(m, levels) -> Operator:
    return Operator(make_layout([Atom(levels, "atom")]), m, unitary=True)


def ramsey_rotation(p: RamseyParams | float, amplitude_angle: float | None = None, levels=("e", "f")) -> Operator:
    """Classical-field rotation of a two-level atom.

    ``[[cos x, -i e^{i theta} sin x], [-i e^{-i theta} sin x, cos x]]`` with
    ``x = g*eta*t``. Accepts either a :class:`RamseyParams` or ``(theta, x)``.
    """
    if not isinstance(p, RamseyParams):
        p = RamseyParams(p, amplitude_angle)
    c, s = cos_sin(p.amplitude_angle)
    m = np.array([[c, -1j * cis(p.theta) * s], [-1j * cis(-p.theta) * s, c]])
    return _two_level(m, levels)


def dispersive_semiclassical(beta: float, levels=("e", "f")) -> Operator:
    """diag(exp(-i beta/2), exp(i beta/2))."""
    return _two_level(np.diag([cis(-beta / 2), cis(beta / 2)]), levels)


def rz(x: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * x), np.exp(0.5j * x)])


def ry(x: float) -> np.ndarray:
    c, s = math.cos(x / 2), math.sin(x / 2)
    return np.array([[c, -s], [s, c]])


def reconstruct_su2(d: Su2Decomposition) -> np.ndarray:
    return np.exp(1j * d.alpha) * rz(d.beta) @ ry(d.gamma) @ rz(d.delta)


def decompose_su2(m) -> Su2Decomposition:
    """Write a 2x2 unitary as ``e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)``.

    ``gamma`` lands in [0, pi] and ``alpha`` in (-pi/2, pi/2]. When ``gamma``
    is 0 or pi the split between ``beta`` and ``delta`` is arbitrary; ``delta``
    is then fixed to 0.
    """
    m = np.asarray(getattr(m, "matrix", m), dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    if unitarity_error(m) > 1e-10:
        raise ValueError("decompose_su2 needs a unitary matrix")
    alpha = float(np.angle(np.linalg.det(m))) / 2
    su = np.exp(-1j * alpha) * m
    c, s = abs(su[0, 0]), abs(su[1, 0])
    gamma = 2 * math.atan2(s, c)
    eps = 1e-12
    if s < eps:
        beta, delta = 2 * float(np.angle(su[1, 1])), 0.0
    elif c < eps:
        beta, delta = 2 * float(np.angle(su[1, 0])), 0.0
    else:
        a11, a10 = float(np.angle(su[1, 1])), float(np.angle(su[1, 0]))
        beta, delta = a11 + a10, a11 - a10
    out = Su2Decomposition(alpha, beta, gamma, delta)
    # alpha is only fixed mod pi by the determinant; the other branch absorbs a sign.
    if np.abs(reconstruct_su2(out) - m).max() > 1e-10:
        out = Su2Decomposition(alpha, beta + 2 * math.pi, gamma, delta)
    return out
