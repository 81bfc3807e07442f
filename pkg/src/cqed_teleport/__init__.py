"""Atom-cavity teleportation simulator.

Dense state vectors over atoms and truncated cavity modes, closed-form
Jaynes-Cummings and lambda-atom propagators with a Runge-Kutta reference, the
Bell-preparation and teleportation pipelines for cascade and lambda atoms, and
a small scripting language for writing such sequences down.
"""

from .hilbert import (
    Atom,
    BranchOutcome,
    Cavity,
    Operator,
    StateVector,
    SystemLayout,
    apply,
    basis_state,
    embed_operator,
    fidelity,
    ket,
    make_layout,
    measure_subsystem,
    state,
    tensor_state,
)
from .protocol import BellLabel, InputState, TeleportReport, bell_prepare, teleport

__all__ = [
    "Atom",
    "BellLabel",
    "BranchOutcome",
    "Cavity",
    "InputState",
    "Operator",
    "StateVector",
    "SystemLayout",
    "TeleportReport",
    "apply",
    "basis_state",
    "bell_prepare",
    "embed_operator",
    "fidelity",
    "ket",
    "make_layout",
    "measure_subsystem",
    "state",
    "teleport",
    "tensor_state",
]
