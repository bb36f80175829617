"""A Gaussian packet hits the moving step; the simulation is compared with the closed forms.

The reflected packet comes back with k2 = 2u - k1 and the transmitted one
with k3.  The fraction reflected is the static-step value seen from the
step, (b/a)^2, not the boundary flux ratio R(vt).  Runs in about 10 s.
"""

import time

from movingstep import tdse
from movingstep.analytics import PhysicalContext, StepScenario

scenario = StepScenario(PhysicalContext(v=0.5, V0=2.0), 4.0)
packet = tdse.PacketSpec(x0=-80.0, k0=4.0, sigma_x=10.0)

start = time.perf_counter()
report = tdse.validate_scenario(scenario, packet, tdse.RunParams(n_points=8192))
print(f"grid {report.grid.n_points} points, dx = {report.grid.dx:.4f}, dt = {report.dt:.4f}, "
      f"{report.n_steps} steps, {time.perf_counter() - start:.1f} s")
for e in report.entries:
    print(f"{e.name:20s} predicted {e.predicted:+.5f}  measured {e.measured:+.5f}  "
          f"({e.mode} tol {e.tolerance:g})  {'ok' if e.passed else 'FAILED'}")
print(f"boundary flux ratios for comparison: R = {report.predicted['R_boundary']:.5f}, "
      f"T = {report.predicted['T_boundary']:.5f}")
