"""Two more packet runs: the evanescent tail and the impenetrable moving wall.

Below the critical wavenumber the packet is turned back completely while a
tail decaying like exp(-2 beta (x - v t)) rides ahead of it.  For the wall,
incident and reflected waves interfere into nodes spaced pi/(k1 - u).
"""

import math
import warnings

from movingstep import tdse
from movingstep.analytics import PhysicalContext, StepScenario
from movingstep.errors import SemiClassicalWarning

with warnings.catch_warnings():
    warnings.simplefilter("ignore", SemiClassicalWarning)
    tail = tdse.validate_scenario(StepScenario(PhysicalContext(v=0.5, V0=2.0), 2.0),
                                  tdse.PacketSpec(-80.0, 2.0, 10.0))
print(f"tail slope {tail.measured['tail_slope']:.4f} vs -2 beta = {tail.predicted['tail_slope']:.4f}")
print(f"left beyond the step after the bounce: {tail.measured['transmitted_norm']:.1e}")
print(f"reflected wavenumber {tail.measured['reflected_mean_k']:.4f} vs {tail.predicted['k2']}")

wall = tdse.validate_scenario(StepScenario(PhysicalContext(v=0.5), 4.0, kind="infinite"),
                              tdse.PacketSpec(-80.0, 4.0, 10.0))
print(f"node spacing {wall.measured['node_spacing']:.5f} vs pi/3.5 = {math.pi / 3.5:.5f} "
      f"(dx = {wall.grid.dx:.4f})")
print(f"reflected wavenumber {wall.measured['reflected_mean_k']:.4f}, reflected norm {wall.measured['reflected_norm']:.6f}")
