"""Closed-form scattering off a step that moves with the incident wave.

Walks through the wavenumber map, the regime boundary and the flux ratios
for a step of height 2 moving at v = 0.5 (hbar = m = 1), then shows how
the boundary transmissivity climbs past 1 as the step speeds up.
"""

import warnings

import numpy as np

from movingstep import analytics as an
from movingstep.analytics import PhysicalContext, StepScenario
from movingstep.errors import SemiClassicalWarning

ctx = PhysicalContext(v=0.5, V0=2.0)
print(f"drift wavenumber u = {ctx.drift_wavenumber}")
print(f"critical k1 = {an.critical_wavenumber(ctx)}, effective height = {an.effective_step_height(ctx):.4f}")

# An oscillating transmitted wave: every component keeps the same phase on x = v t.
sol = an.solve(StepScenario(ctx, 4.0))
for name, comp in (("incident", sol.incident), ("reflected", sol.reflected), ("transmitted", sol.transmitted)):
    print(f"{name:12s} k = {comp.wavenumber.real:+.6f}  amplitude = {comp.amplitude.real:.6f}")
R, T = an.boundary_values(sol)
print(f"on the step: R = {R:.6f}, T = {T:.6f}, R + T - 1 = {R + T - 1:.1e}")

# R depends on the distance behind the step; it swings around its mean with period pi/(k1 - u).
xi = np.linspace(-2 * np.pi / 3.5, 0.0, 9)
print("R(x - v t):", np.array2string(an.reflectivity(sol, xi, 0.0), precision=4))

# Below the critical wavenumber the transmitted wave is evanescent and rides with the step.
with warnings.catch_warnings():
    warnings.simplefilter("ignore", SemiClassicalWarning)
    evan = an.solve(StepScenario(ctx, 2.0))
k3 = evan.transmitted.wavenumber
print(f"evanescent k3 = {k3.real} + {k3.imag:.6f}i, group velocity in B = {an.group_velocity(evan, 'B', 0.5, 0.0)}")
print("T(x - v t):", np.array2string(an.transmissivity(evan, [0.0, 0.5, 1.0], 0.0), precision=5))

# As the step speeds up, T on the step exceeds 1 once it outruns the reflected flux.
for v in (0.0, 0.25, 0.5, 0.75, 1.0):
    s = an.solve(StepScenario(PhysicalContext(v=v, V0=2.0), 4.0))
    print(f"v = {v:4.2f}  T_boundary = {an.boundary_values(s)[1]:.6f}")
