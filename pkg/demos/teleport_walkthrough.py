"""Walk through one teleportation run, stage by stage.

Run with ``python3 demos/teleport_walkthrough.py [cascade|lambda]``.
"""

import sys

from cqed_teleport.hilbert import fidelity
from cqed_teleport.protocol import (
    BellLabel,
    InputState,
    bell_prepare,
    bell_state,
    parity_probe,
    pass_pair_through_cavity,
    teleport,
)

scheme = sys.argv[1] if len(sys.argv) > 1 else "cascade"
inp = InputState(0.6, 0.8j)

print(f"scheme: {scheme}")
print("\n1. shared pair, heralded by the A3 detection")
for label, p, st in bell_prepare(scheme):
    print(f"   {label.value:9s} p={p:.6f}  fidelity to closed form {fidelity(st, bell_state(label, scheme)):.12f}")

print("\n2. each Bell state sent through a (|0> + |1>)/sqrt2 cavity, then probed")
for lab in BellLabel:
    out = parity_probe(pass_pair_through_cavity(bell_state(lab, scheme), scheme))
    ((k, b),) = out.items()
    print(f"   {lab.value:9s} -> probe detects {k} with p={b.probability:.6f}")

print("\n3. full protocol, every branch")
report = teleport(scheme, inp)
for b in report.branches:
    pair = ",".join(b.message.readout_pair)
    print(f"   probe={b.message.probe_outcome} readout={pair}  {b.bell_label.value:9s} "
          f"correction={b.correction:8s} p={b.probability:.4f} fidelity={b.fidelity:.12f}")
print(f"   total probability {report.total_probability:.12f}")
