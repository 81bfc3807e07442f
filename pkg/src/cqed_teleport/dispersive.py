"""
How fast the exact propagators approach their large-detuning forms.

Distances are Frobenius norms on a low-photon block, minimised over one global
phase: ``min_theta ||P (U_exact - e^{i theta} U_disp) P||_F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolution import JcParams, jc_dispersive_propagator, jc_exact_propagator
from .lambda_atom import LambdaParams, lambda_dispersive_phi, lambda_exact_propagator

DEFAULT_RATIOS = (25.0, 50.0, 100.0, 200.0)


def phase_min_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_theta ||a - e^{i theta} b||_F``."""
    sq = np.vdot(a, a).real + np.vdot(b, b).real - 2 * abs(np.vdot(b, a))
    return math.sqrt(max(sq, 0.0))


def block_indices(config: str, n_block: int, n_max: int) -> np.ndarray:
    d = n_max + 1
    n = np.arange(n_block + 1)
    if config == "two-level":
        return np.concatenate([n, d + n])
    if config == "lambda":
        return np.concatenate([d + n, 2 * d + n])
    raise ValueError(f"unknown configuration {config!r}")


def operator_pair(config: str, ratio: float, phi: float = math.pi, n_max: int = 4, g: float = 1.0):
    """Exact and dispersive propagators at detuning ``ratio * g`` and fixed ``phi``."""
    delta = ratio * g
    if config == "two-level":
        t = phi * delta / g**2
        return (
            jc_exact_propagator(JcParams(g, delta, t), n_max).matrix,
            jc_dispersive_propagator(phi, n_max).matrix,
        )
    if config == "lambda":
        t = phi * delta / (2 * g**2)
        return (
            lambda_exact_propagator(LambdaParams(g, g, delta, t), n_max).matrix,
            lambda_dispersive_phi(phi, n_max).matrix,
        )
    raise ValueError(f"unknown configuration {config!r}")


def dispersive_distance(config: str, ratio: float, phi: float = math.pi, n_block: int = 3, n_max: int = 4) -> float:
    """Block-restricted distance between exact and dispersive propagators.

    ``two-level`` uses both atomic levels with ``n <= n_block``; ``lambda``
    uses the ``{|b>, |c>}`` sector with ``n <= n_block``.
    """
    if n_max < n_block + 1:
        raise ValueError("n_max must leave one level of headroom above the block")
    exact, disp = operator_pair(config, ratio, phi, n_max)
    idx = block_indices(config, n_block, n_max)
    sel = np.ix_(idx, idx)
    return phase_min_distance(exact[sel], disp[sel])


@dataclass(frozen=True)
class ConvergenceRow:
    ratio: float
    distance: float
    successive_ratio: float | None


def convergence_table(config: str, ratios=DEFAULT_RATIOS, phi: float = math.pi, n_block: int = 3, n_max: int = 4):
    rows = []
    prev = None
    for r in ratios:
        dist = dispersive_distance(config, r, phi, n_block, n_max)
        rows.append(ConvergenceRow(float(r), dist, None if prev is None else prev / dist))
        prev = dist
    return rows
