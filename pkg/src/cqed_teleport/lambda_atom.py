"""
Three-level lambda atom coupled to one (degenerate) or two (non-degenerate)
cavity modes.

Levels are ordered ``(a, b, c)`` with ``a`` the upper level. The atom-field
Hamiltonian couples ``|a>`` to ``|b>`` through ``g1`` and to ``|c>`` through
``g2``; both lower levels share the detuning ``delta``. In the interaction
picture each excitation block ``{|a,n>, |b,n+1>, |c,n+1>}`` reduces to a bright
state that behaves like a two-level atom and a dark state that does not move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolution import _sin_over, cis
from .hilbert import Atom, Cavity, Operator, make_layout


@dataclass(frozen=True)
class LambdaParams:
    g1: complex = 1.0
    g2: complex = 1.0
    delta: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"interaction time must be non-negative, got {self.t}")

    @property
    def phi(self) -> float:
        """Dispersive phase ``(|g1|^2 + |g2|^2) t / delta``."""
        return (abs(self.g1) ** 2 + abs(self.g2) ** 2) * self.t / self.delta


@dataclass(frozen=True)
class ParityProjectors:
    pi_plus: Operator
    pi_minus: Operator


def lambda_layout(n_max: int):
    return make_layout([Atom(("a", "b", "c"), "atom"), Cavity(n_max, "cavity")])


def lambda_block(G1: complex, G2: complex, delta: float, t: float) -> np.ndarray:
    """3x3 propagator on ``(|a>, |b>, |c>)`` of one excitation block.

    ``G1`` and ``G2`` are the block's effective couplings (``g1`` and ``g2``
    times the relevant ladder factor). The entries are the closed-form
    ``u_xy`` with ``mu`` and ``nu`` both evaluating to
    ``delta**2/4 + |G1|**2 + |G2|**2`` inside the block.
    """
    s2 = abs(G1) ** 2 + abs(G2) ** 2
    lam = math.sqrt(delta**2 / 4 + s2)
    c = math.cos(lam * t)
    so = _sin_over(lam, t)
    ph = np.exp(0.5j * delta * t)
    u = np.zeros((3, 3), dtype=complex)
    u[0, 0] = ph * (c - 0.5j * delta * so)
    u[0, 1] = -1j * ph * so * G1
    u[0, 2] = -1j * ph * so * G2
    u[1, 0] = -1j * np.conj(G1) * np.conj(ph) * so
    u[2, 0] = -1j * np.conj(G2) * np.conj(ph) * so
    bracket = np.conj(ph) * (0.5j * delta * so + c) - 1
    if s2 > 0:
        u[1, 1] = 1 + abs(G1) ** 2 / s2 * bracket
        u[1, 2] = np.conj(G1) * G2 / s2 * bracket
        u[2, 1] = np.conj(G2) * G1 / s2 * bracket
        u[2, 2] = 1 + abs(G2) ** 2 / s2 * bracket
    else:
        u[1, 1] = u[2, 2] = 1
    return u


def lambda_exact_propagator(p: LambdaParams, n_max: int) -> Operator:
    """Exact propagator for a lambda atom in one cavity mode.

    ``|b,0>`` and ``|c,0>`` have nowhere to go and are stationary; the top
    state ``|a, n_max>`` has no partner inside the cutoff and is likewise left
    alone (the truncated Hamiltonian does not couple it).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    layout = lambda_layout(n_max)
    d = n_max + 1
    u = np.zeros((3 * d, 3 * d), dtype=complex)
    u[d, d] = u[2 * d, 2 * d] = 1  # |b,0>, |c,0>
    for n in range(d):
        if n + 1 <= n_max:
            r = math.sqrt(n + 1)
            idx = [n, d + n + 1, 2 * d + n + 1]
            u[np.ix_(idx, idx)] = lambda_block(p.g1 * r, p.g2 * r, p.delta, p.t)
        else:
            u[n, n] = 1
    return Operator(layout, u, unitary=True)


def nondegenerate_layout(n_max1: int, n_max2: int):
    return make_layout([Atom(("a", "b", "c"), "atom"), Cavity(n_max1, "cavity1"), Cavity(n_max2, "cavity2")])


def lambda_exact_nondegenerate(p: LambdaParams, n_max1: int, n_max2: int, form: str = "derived") -> Operator:
    """Exact propagator when ``a<->b`` uses mode 1 and ``a<->c`` uses mode 2.

    ``form="derived"`` builds each block ``{|a,n1,n2>, |b,n1+1,n2>,
    |c,n1,n2+1>}`` from :func:`lambda_block`. ``form="printed"`` evaluates the
    literal two-mode closed forms instead (number-operator functions acting on
    the ket to their right); two of its entries disagree with direct
    integration, see :func:`printed_nondegenerate_matrix`.
    """
    if min(n_max1, n_max2) < 1:
        raise ValueError("cutoffs must be >= 1")
    if form == "printed":
        return Operator(nondegenerate_layout(n_max1, n_max2), printed_nondegenerate_matrix(p, n_max1, n_max2))
    if form != "derived":
        raise ValueError(f"unknown form {form!r}")
    layout = nondegenerate_layout(n_max1, n_max2)
    d1, d2 = n_max1 + 1, n_max2 + 1
    dim = 3 * d1 * d2

    def ix(level, n1, n2):
        return (level * d1 + n1) * d2 + n2

    u = np.zeros((dim, dim), dtype=complex)
    covered = np.zeros(dim, dtype=bool)
    for n1 in range(d1):
        for n2 in range(d2):
            idx = [ix(0, n1, n2)]
            G1 = G2 = 0.0
            keep = [0]
            if n1 + 1 < d1:
                G1 = p.g1 * math.sqrt(n1 + 1)
                idx.append(ix(1, n1 + 1, n2))
                keep.append(1)
            if n2 + 1 < d2:
                G2 = p.g2 * math.sqrt(n2 + 1)
                idx.append(ix(2, n1, n2 + 1))
                keep.append(2)
            blk = lambda_block(G1, G2, p.delta, p.t)[np.ix_(keep, keep)]
            u[np.ix_(idx, idx)] = blk
            covered[idx] = True
    for k in np.flatnonzero(~covered):
        u[k, k] = 1
    return Operator(layout, u, unitary=True)


def printed_nondegenerate_matrix(p: LambdaParams, n_max1: int, n_max2: int) -> np.ndarray:
    """Literal two-mode closed forms, entry by entry, without cutoff closure.

    Used only to locate which printed entries survive an independent check.
    Compared with the derived blocks, ``u_bb`` uses ``a2^dag a2`` where the
    block needs ``a2 a2^dag`` in its weight denominator, and ``u_bc`` evaluates
    both its weight denominator and its frequency on the wrong photon numbers.
    States next to the cutoff are not closed and are not meaningful here.
    """
    g1, g2, D, t = p.g1, p.g2, p.delta, p.t
    a1s, a2s = abs(g1) ** 2, abs(g2) ** 2
    d1, d2 = n_max1 + 1, n_max2 + 1

    def ix(level, n1, n2):
        return (level * d1 + n1) * d2 + n2

    def phase_terms(x):
        r = math.sqrt(x)
        return math.cos(r * t), _sin_over(r, t)

    def bracket(nu):
        c, so = phase_terms(nu)
        return np.exp(-0.5j * D * t) * (0.5j * D * so + c) - 1

    def frac(num, den):
        return num / den if den > 0 else 0.0

    ph = np.exp(0.5j * D * t)
    u = np.zeros((3 * d1 * d2,) * 2, dtype=complex)
    for n1 in range(d1):
        for n2 in range(d2):
            # input |a,n1,n2>
            mu = D**2 / 4 + a1s * (n1 + 1) + a2s * (n2 + 1)
            c, so = phase_terms(mu)
            u[ix(0, n1, n2), ix(0, n1, n2)] = ph * (c - 0.5j * D * so)
            if n1 + 1 < d1:
                u[ix(1, n1 + 1, n2), ix(0, n1, n2)] = -1j * np.conj(g1) * math.sqrt(n1 + 1) * np.conj(ph) * so
            if n2 + 1 < d2:
                u[ix(2, n1, n2 + 1), ix(0, n1, n2)] = -1j * np.conj(g2) * math.sqrt(n2 + 1) * np.conj(ph) * so
            # input |b,n1,n2>
            nu1 = D**2 / 4 + a1s * n1 + a2s * (n2 + 1)
            u[ix(1, n1, n2), ix(1, n1, n2)] = 1 + frac(a1s * n1, a1s * n1 + a2s * n2) * bracket(nu1)
            if n1 >= 1:
                mu_out = D**2 / 4 + a1s * n1 + a2s * (n2 + 1)
                c, so = phase_terms(mu_out)
                u[ix(0, n1 - 1, n2), ix(1, n1, n2)] = -1j * ph * so * g1 * math.sqrt(n1)
                if n2 + 1 < d2:
                    w = np.conj(g2) * math.sqrt(n2 + 1) * g1 * math.sqrt(n1)
                    u[ix(2, n1 - 1, n2 + 1), ix(1, n1, n2)] = frac(1, a1s * n1 + a2s * (n2 + 1)) * w * bracket(nu1)
            # input |c,n1,n2>
            nu2 = D**2 / 4 + a1s * (n1 + 1) + a2s * n2
            u[ix(2, n1, n2), ix(2, n1, n2)] = 1 + frac(a2s * n2, a1s * (n1 + 1) + a2s * n2) * bracket(nu2)
            if n2 >= 1:
                mu_out = D**2 / 4 + a1s * (n1 + 1) + a2s * n2
                c, so = phase_terms(mu_out)
                u[ix(0, n1, n2 - 1), ix(2, n1, n2)] = -1j * ph * so * g2 * math.sqrt(n2)
                if n1 + 1 < d1:
                    w = np.conj(g1) * math.sqrt(n1 + 1) * g2 * math.sqrt(n2)
                    nu1_in = D**2 / 4 + a1s * n1 + a2s * (n2 + 1)
                    u[ix(1, n1 + 1, n2 - 1), ix(2, n1, n2)] = frac(1, a1s * n1 + a2s * n2) * w * bracket(nu1_in)
    return u


def lambda_dispersive_propagator(p: LambdaParams, n_max: int) -> Operator:
    """Large-detuning lambda propagator for arbitrary complex couplings.

    With ``phi = (|g1|^2 + |g2|^2) t / delta`` and ``n = a^dag a``::

        u_aa = exp(-i phi (n + 1))
        u_bb = 1 + |g1|^2/S (exp(i phi n) - 1)      u_bc = g1* g2/S (exp(i phi n) - 1)
        u_cb = g2* g1/S (exp(i phi n) - 1)          u_cc = 1 + |g2|^2/S (exp(i phi n) - 1)

    where ``S = |g1|^2 + |g2|^2``. All couplings between ``|a>`` and the lower
    levels vanish.
    """
    return _lambda_dispersive(p.phi, p.g1, p.g2, n_max)


def lambda_dispersive_phi(phi: float, n_max: int, phase1: float = 0.0, phase2: float = 0.0) -> Operator:
    """Equal-modulus form: ``g1 = g e^{i phase1}``, ``g2 = g e^{i phase2}``."""
    return _lambda_dispersive(phi, cis(phase1), cis(phase2), n_max)


def _lambda_dispersive(phi, g1, g2, n_max) -> Operator:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    d = n_max + 1
    s2 = abs(g1) ** 2 + abs(g2) ** 2
    u = np.zeros((3 * d, 3 * d), dtype=complex)
    for n in range(d):
        br = cis(phi * n) - 1
        u[n, n] = cis(-phi * (n + 1))
        b, c = d + n, 2 * d + n
        u[b, b] = 1 + abs(g1) ** 2 / s2 * br
        u[b, c] = np.conj(g1) * g2 / s2 * br
        u[c, b] = np.conj(g2) * g1 / s2 * br
        u[c, c] = 1 + abs(g2) ** 2 / s2 * br
    return Operator(lambda_layout(n_max), u, unitary=True)


def lower_sector(op: Operator, unitary: bool | None = None) -> Operator:
    """Restrict a lambda-atom operator to the ``{|b>, |c>}`` levels.

    Exact for the dispersive propagator, which never touches ``|a>``; for the
    exact propagator the amplitude that would land in ``|a>`` is discarded.
    """
    d = op.layout.subsystems[1].dim
    sel = np.arange(d, 3 * d)
    m = op.matrix[np.ix_(sel, sel)]
    layout = make_layout([Atom(("b", "c"), "atom"), Cavity(d - 1, "cavity")])
    if unitary is None:
        unitary = bool(np.abs(op.matrix[:d, d:]).max() == 0 and np.abs(op.matrix[d:, :d]).max() == 0)
    return Operator(layout, m, unitary=unitary)


def parity_projectors(n_max: int) -> ParityProjectors:
    """``(e^{i pi n} + 1)/2`` and ``(e^{i pi n} - 1)/2`` on a cavity.

    The first keeps even Fock states; the second sends odd Fock states to minus
    themselves and kills even ones.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    parity = np.array([1.0 if n % 2 == 0 else -1.0 for n in range(n_max + 1)])
    layout = make_layout([Cavity(n_max, "cavity")])
    return ParityProjectors(
        Operator(layout, np.diag((parity + 1) / 2)),
        Operator(layout, np.diag((parity - 1) / 2)),
    )
