"""
Brute-force reference propagators.

The interaction-picture Schrodinger equation ``i dU/dt = V(t) U`` is
integrated with classical fourth-order Runge-Kutta, starting from ``U(0) = 1``.
``V(t) = e^{i delta t} A + e^{-i delta t} A^dag`` where ``A`` raises the atom
and absorbs a photon. ``A`` is assembled here from truncated ladder matrices
and Kronecker products, independently of the closed-form block construction
used by the propagators.
"""

from __future__ import annotations

import math

import numpy as np


def annihilation(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def ket_bra(dim: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1
    return m


def jc_coupling(g: float, n_max: int) -> np.ndarray:
    """``g a |e><f|`` on ``[Atom(e, f), Cavity(n_max)]``."""
    return g * np.kron(ket_bra(2, 0, 1), annihilation(n_max))


def lambda_coupling(g1: complex, g2: complex, n_max: int) -> np.ndarray:
    """``a (g1 |a><b| + g2 |a><c|)`` on ``[Atom(a, b, c), Cavity(n_max)]``."""
    a = annihilation(n_max)
    return np.kron(g1 * ket_bra(3, 0, 1) + g2 * ket_bra(3, 0, 2), a)


def nondegenerate_coupling(g1: complex, g2: complex, n_max1: int, n_max2: int) -> np.ndarray:
    """``g1 a1 |a><b| + g2 a2 |a><c|`` on ``[Atom(a, b, c), Cavity, Cavity]``."""
    a1 = np.kron(annihilation(n_max1), np.eye(n_max2 + 1))
    a2 = np.kron(np.eye(n_max1 + 1), annihilation(n_max2))
    return np.kron(g1 * ket_bra(3, 0, 1), a1) + np.kron(g2 * ket_bra(3, 0, 2), a2)


def rk4_propagator(A, delta, t, dt_max: float = 1e-4) -> np.ndarray:
    """Integrate ``i dU/dt = (e^{i delta s} A + e^{-i delta s} A^dag) U`` up to ``t``.

    Batched over ``delta`` and ``t`` (equal-length 1-d arrays); ``A`` is either
    one ``(d, d)`` matrix shared by the whole batch or a ``(B, d, d)`` stack.
    All members take the same number of steps, so every step size is at most
    ``dt_max``. Returns ``(B, d, d)``, or ``(d, d)`` for scalar inputs.
    """
    A = np.asarray(A, dtype=complex)
    scalar = np.ndim(delta) == 0 and np.ndim(t) == 0 and A.ndim == 2
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    B = max(len(delta), len(t), 1 if A.ndim == 2 else A.shape[0])
    delta, t = np.broadcast_to(delta, (B,)), np.broadcast_to(t, (B,))
    if A.ndim == 3 and np.all(A == A[0]):
        A = A[0]
    steps = max(1, math.ceil(float(t.max()) / dt_max - 1e-9))
    h = t / steps
    d = A.shape[-1]
    if A.ndim == 2:
        # Shared coupling: keep U as (d, B*d) so each product is one BLAS call.
        AA = -1j * np.concatenate([A, A.conj().T], axis=0)

        def rhs(s, U):
            w = np.repeat(np.exp(1j * delta * s), d)
            both = AA @ U
            return w * both[:d] + w.conj() * both[d:]

        U = np.tile(np.eye(d, dtype=complex), (1, B))
        hb = np.repeat(h, d)
    else:
        AA = np.concatenate([A, np.conj(A.transpose(0, 2, 1))], axis=1)

        def rhs(s, U):
            w = np.exp(1j * delta * s)[:, None, None]
            both = AA @ U
            return -1j * (w * both[:, :d] + np.conj(w) * both[:, d:])

        U = np.broadcast_to(np.eye(d, dtype=complex), (B, d, d)).copy()
        hb = h[:, None, None]
    for k in range(steps):
        s = k * h
        k1 = rhs(s, U)
        k2 = rhs(s + h / 2, U + hb / 2 * k1)
        k3 = rhs(s + h / 2, U + hb / 2 * k2)
        k4 = rhs(s + h, U + hb * k3)
        U = U + hb / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if A.ndim == 2:
        U = U.reshape(d, B, d).transpose(1, 0, 2)
    return U[0] if scalar else U
