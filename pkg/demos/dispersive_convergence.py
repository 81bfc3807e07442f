"""How fast the dispersive propagators approach the exact ones.

At phi = pi the leading leakage term cancels, so each doubling of delta/g
cuts the distance by about four. The two-level atom at a generic phase
drops by roughly two per doubling instead.
"""

import math

from cqed_teleport.dispersive import convergence_table

for phi in (math.pi, 1.0):
    for config in ("two-level", "lambda"):
        print(f"{config}, phi={phi:.4f}")
        for r in convergence_table(config, phi=phi):
            succ = "" if r.successive_ratio is None else f"{r.successive_ratio:7.3f}"
            print(f"   delta/g={r.ratio:5g}  distance={r.distance:.6e}  {succ}")
