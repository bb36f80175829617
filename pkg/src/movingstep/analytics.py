"""Closed-form plane-wave scattering off a potential step moving at constant velocity.

The step sits at ``x = v t`` and moves towards ``+x``, the same direction as
the incident wave.  Region A (``x <= v t``) is free space holding the incident
and reflected waves; region B (``x > v t``) holds either nothing (infinite
step) or the transmitted wave under a constant potential ``V0``.

Instead of derivative matching, the moving boundary is handled by requiring
all components to share a common phase on the line ``x = v t``.  For the
incident and reflected waves this gives the elastic map
``k2 = -k1 + 2 m v / hbar``, and it fixes ``k3`` through the shifted
dispersion relation of region B.

Every field function accepts scalars or numpy arrays for ``x`` and ``t`` and
broadcasts them.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from movingstep.errors import (
    NodeSingularity,
    NoCollisionError,
    RegimeError,
    SemiClassicalWarning,
)

logger = logging.getLogger(__name__)

#: Reflectivity of an impenetrable step; there is nothing else to compute.
INFINITE_STEP_REFLECTIVITY = 1.0

#: Default node tolerance for :func:`group_velocity`, relative to ``4 a**2``.
DEFAULT_NODE_EPS = 1e-12


class StepKind(str, enum.Enum):
    INFINITE = "infinite"
    FINITE = "finite"


class RegimeTag(str, enum.Enum):
    NO_COLLISION = "NoCollision"
    CASE_I = "CaseI"
    CRITICAL = "Critical"
    CASE_II = "CaseII"


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PhysicalContext:
    """Constants and step parameters shared by every formula.

    ``V0`` is ignored by infinite-step calculations.
    """

    hbar: float = 1.0
    mass: float = 1.0
    v: float = 0.0
    V0: float = 0.0

    def __post_init__(self) -> None:
        _check_finite(hbar=self.hbar, mass=self.mass, v=self.v, V0=self.V0)
        if self.hbar <= 0:
            raise ValueError("hbar must be > 0")
        if self.mass <= 0:
            raise ValueError("mass must be > 0")
        if self.v < 0:
            raise ValueError("v must be >= 0")
        if self.V0 < 0:
            raise ValueError("V0 must be >= 0")

    @property
    def drift_wavenumber(self) -> float:
        """``u = m v / hbar``, the wavenumber of a particle riding with the step."""
        return self.mass * self.v / self.hbar


@dataclass(frozen=True)
class StepScenario:
    context: PhysicalContext
    k1: float
    a: float = 1.0
    theta: float = 0.0
    kind: StepKind = StepKind.FINITE

    def __post_init__(self) -> None:
        _check_finite(k1=self.k1, a=self.a, theta=self.theta)
        if self.k1 <= 0:
            raise ValueError("k1 must be > 0")
        if self.a <= 0:
            raise ValueError("a must be > 0")
        object.__setattr__(self, "kind", StepKind(self.kind))


@dataclass(frozen=True)
class PlaneWaveComponent:
    amplitude: complex
    wavenumber: complex
    omega: complex
    region: str

    def __call__(self, x, t):
        """Evaluate ``amplitude * exp(i (k x - omega t))``."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(1j * (self.wavenumber * x - self.omega * t))


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    critical_k1: float
    effective_height: float


@dataclass(frozen=True)
class AmplitudeRatios:
    b_over_a: float
    c_over_a: float


@dataclass(frozen=True)
class AnalyticSolution:
    scenario: StepScenario
    regime: Regime
    incident: PlaneWaveComponent
    reflected: PlaneWaveComponent
    transmitted: Optional[PlaneWaveComponent] = None
    ratios: Optional[AmplitudeRatios] = None
    flags: tuple[str, ...] = field(default=())

    @property
    def context(self) -> PhysicalContext:
        return self.scenario.context

    @property
    def is_infinite(self) -> bool:
        return self.scenario.kind is StepKind.INFINITE


# ---------------------------------------------------------------------------
# dispersion and wavenumber maps


def dispersion_free(k: float, ctx: PhysicalContext) -> float:
    """Angular frequency of a free plane wave, ``hbar k**2 / 2m``."""
    return ctx.hbar * k * k / (2.0 * ctx.mass)


def dispersion_shifted(k: complex, ctx: PhysicalContext) -> complex:
    """Angular frequency under the constant potential ``V0``.

    ``k`` may be complex.  For ``k = u + i beta`` the imaginary part of the
    result is ``v beta``, which keeps the evanescent wave locked to the step.
    """
    return ctx.hbar * k * k / (2.0 * ctx.mass) + ctx.V0 / ctx.hbar


def reflected_wavenumber(k1: float, ctx: PhysicalContext) -> float:
    return -k1 + 2.0 * ctx.drift_wavenumber


def critical_wavenumber(ctx: PhysicalContext) -> float:
    """Incident wavenumber separating oscillating from evanescent transmission."""
    return ctx.drift_wavenumber + math.sqrt(2.0 * ctx.mass * ctx.V0) / ctx.hbar


def effective_step_height(ctx: PhysicalContext) -> float:
    """Step height as seen by the incident wave, ``(sqrt(m/2) v + sqrt(V0))**2``.

    It equals the kinetic energy of a wave at :func:`critical_wavenumber`.
    """
    return (math.sqrt(ctx.mass / 2.0) * ctx.v + math.sqrt(ctx.V0)) ** 2


def classify_regime(scenario: StepScenario) -> Regime:
    """Tag the scenario by comparing ``k1`` with ``u`` and the critical wavenumber.

    Infinite steps have no critical wavenumber; both sentinels are ``+inf``
    and every colliding scenario is tagged ``CaseI``.
    """
    ctx = scenario.context
    k1 = scenario.k1
    u = ctx.drift_wavenumber
    if scenario.kind is StepKind.INFINITE:
        tag = RegimeTag.CASE_I if k1 > u else RegimeTag.NO_COLLISION
        return Regime(tag, math.inf, math.inf)

    k_crit = critical_wavenumber(ctx)
    if k1 <= u:
        tag = RegimeTag.NO_COLLISION
    elif k1 > k_crit:
        tag = RegimeTag.CASE_I
    elif k1 == k_crit:
        tag = RegimeTag.CRITICAL
    else:
        tag = RegimeTag.CASE_II
    return Regime(tag, k_crit, effective_step_height(ctx))


def _require_colliding_finite(scenario: StepScenario) -> Regime:
    if scenario.kind is not StepKind.FINITE:
        raise RegimeError("operation is defined for finite steps only")
    regime = classify_regime(scenario)
    if regime.tag is RegimeTag.NO_COLLISION:
        raise NoCollisionError(
            f"k1={scenario.k1!r} does not exceed m v / hbar="
            f"{scenario.context.drift_wavenumber!r}; the wave never reaches the step"
        )
    return regime


def transmitted_wavenumber(scenario: StepScenario) -> complex:
    """Wavenumber of the wave in region B.

    Oscillating case: the forward root, real and ``> u``.  Evanescent case:
    ``u + i beta`` with ``beta > 0``.  At the critical point exactly ``u``.
    """
    regime = _require_colliding_finite(scenario)
    ctx = scenario.context
    u = ctx.drift_wavenumber
    s = math.sqrt(2.0 * ctx.mass * ctx.V0) / ctx.hbar
    q = scenario.k1 - u
    if regime.tag is RegimeTag.CRITICAL:
        return complex(u, 0.0)
    # factored form avoids cancellation near the critical point
    disc = (q - s) * (q + s)
    if regime.tag is RegimeTag.CASE_I:
        return complex(u + math.sqrt(max(disc, 0.0)), 0.0)
    return complex(u, math.sqrt(max(-disc, 0.0)))


def amplitude_ratios(scenario: StepScenario) -> AmplitudeRatios:
    """Reflected and transmitted amplitudes relative to the incident one."""
    if scenario.kind is StepKind.INFINITE:
        raise RegimeError("infinite step has the fixed ratio b/a = -1; use solve_infinite_step")
    regime = _require_colliding_finite(scenario)
    if regime.tag is RegimeTag.CASE_II:
        return AmplitudeRatios(1.0, 2.0)
    k1 = scenario.k1
    k3 = transmitted_wavenumber(scenario).real
    two_u = 2.0 * scenario.context.drift_wavenumber
    denom = k1 + k3 - two_u
    b = (k1 - k3) / denom
    # c/a is built as 1 + b/a so continuity holds exactly in floating point;
    # algebraically it equals (2 k1 - 2u) / denom.
    return AmplitudeRatios(b, 1.0 + b)


def _semiclassical_flags(scenario: StepScenario, regime: Regime) -> tuple[str, ...]:
    u = scenario.context.drift_wavenumber
    k1 = scenario.k1
    flags = []
    if regime.tag is RegimeTag.CASE_II and k1 < 4.0 * u:
        warnings.warn(
            f"k1={k1:g} < 4 m v / hbar: the evanescent transmissivity at the step exceeds 1",
            SemiClassicalWarning,
            stacklevel=3,
        )
        flags.append("semiclassical_violation")
    if k1 < 10.0 * u:
        logger.info("k1=%g is within a factor 10 of m v / hbar=%g", k1, u)
        flags.append("weak_semiclassical")
    return tuple(flags)


def solve_finite_step(scenario: StepScenario) -> AnalyticSolution:
    regime = _require_colliding_finite(scenario)
    ctx = scenario.context
    k1 = scenario.k1
    k2 = reflected_wavenumber(k1, ctx)
    k3 = transmitted_wavenumber(scenario)
    ratios = amplitude_ratios(scenario)
    phase = scenario.a * np.exp(1j * scenario.theta)

    flags = _semiclassical_flags(scenario, regime)
    if k2 == 0.0:
        flags += ("degenerate_reflection",)

    return AnalyticSolution(
        scenario=scenario,
        regime=regime,
        incident=PlaneWaveComponent(complex(phase), complex(k1), complex(dispersion_free(k1, ctx)), "A"),
        reflected=PlaneWaveComponent(
            complex(ratios.b_over_a * phase), complex(k2), complex(dispersion_free(k2, ctx)), "A"
        ),
        transmitted=PlaneWaveComponent(
            complex(ratios.c_over_a * phase), k3, complex(dispersion_shifted(k3, ctx)), "B"
        ),
        ratios=ratios,
        flags=flags,
    )


def solve_infinite_step(scenario: StepScenario) -> AnalyticSolution:
    """Incident plus reflected wave vanishing on the moving wall (``B = -A``)."""
    if scenario.kind is not StepKind.INFINITE:
        raise RegimeError("solve_infinite_step needs an infinite-step scenario")
    regime = classify_regime(scenario)
    if regime.tag is RegimeTag.NO_COLLISION:
        raise NoCollisionError(
            f"k1={scenario.k1!r} does not exceed m v / hbar={scenario.context.drift_wavenumber!r}"
        )
    ctx = scenario.context
    k1 = scenario.k1
    k2 = reflected_wavenumber(k1, ctx)
    A = complex(scenario.a * np.exp(1j * scenario.theta))
    flags = ("degenerate_reflection",) if k2 == 0.0 else ()
    return AnalyticSolution(
        scenario=scenario,
        regime=regime,
        incident=PlaneWaveComponent(A, complex(k1), complex(dispersion_free(k1, ctx)), "A"),
        reflected=PlaneWaveComponent(-A, complex(k2), complex(dispersion_free(k2, ctx)), "A"),
        flags=flags,
    )


def solve(scenario: StepScenario) -> AnalyticSolution:
    """Dispatch to the finite or infinite solver according to ``scenario.kind``."""
    if scenario.kind is StepKind.INFINITE:
        return solve_infinite_step(scenario)
    return solve_finite_step(scenario)


# ---------------------------------------------------------------------------
# fields


def _comoving(sol: AnalyticSolution, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return x - sol.context.v * t


def _scalar_or_array(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


def _region_fields(sol: AnalyticSolution, region: str, xi):
    """Density and current of one region's wave, at comoving offsets ``xi = x - v t``."""
    ctx = sol.context
    a = sol.scenario.a
    u = ctx.drift_wavenumber
    q = sol.scenario.k1 - u
    hbar_m = ctx.hbar / ctx.mass

    if region == "A":
        if sol.is_infinite:
            s2 = np.sin(q * xi) ** 2
            return 4.0 * a * a * s2, 4.0 * ctx.v * a * a * s2
        b = sol.ratios.b_over_a * a
        k2 = sol.reflected.wavenumber.real
        cos2 = np.cos(2.0 * q * xi)
        density = a * a + b * b + 2.0 * a * b * cos2
        current = hbar_m * (sol.scenario.k1 * a * a + k2 * b * b + 2.0 * u * a * b * cos2)
        return density, current

    if region != "B":
        raise ValueError(f"region must be 'A' or 'B', got {region!r}")
    if sol.is_infinite:
        zero = np.zeros_like(xi)
        return zero, zero
    c = sol.ratios.c_over_a * a
    k3 = sol.transmitted.wavenumber
    if sol.regime.tag is RegimeTag.CASE_II:
        decay = np.exp(-2.0 * k3.imag * xi)
        return c * c * decay, hbar_m * k3.real * c * c * decay
    ones = np.ones_like(xi)
    return c * c * ones, hbar_m * k3.real * c * c * ones


def _fields(sol: AnalyticSolution, x, t):
    xi = _comoving(sol, x, t)
    dA, jA = _region_fields(sol, "A", xi)
    dB, jB = _region_fields(sol, "B", xi)
    in_a = xi <= 0.0
    return np.where(in_a, dA, dB), np.where(in_a, jA, jB)


def density_field(sol: AnalyticSolution, x, t):
    """``|Psi|**2`` at ``(x, t)``, using region A for ``x <= v t`` and region B beyond."""
    return _scalar_or_array(_fields(sol, x, t)[0])


def current_field(sol: AnalyticSolution, x, t):
    """Probability current ``(hbar / m) Im(Psi* dPsi/dx)`` at ``(x, t)``."""
    return _scalar_or_array(_fields(sol, x, t)[1])


def _require_finite_solution(sol: AnalyticSolution) -> None:
    if sol.is_infinite:
        raise RegimeError(
            "reflectivity of an infinite step is identically "
            f"{INFINITE_STEP_REFLECTIVITY}; see INFINITE_STEP_REFLECTIVITY"
        )


def reflectivity(sol: AnalyticSolution, x, t):
    """Reflected over incident current in region A.

    The reflected current includes the incident/reflected interference term,
    so R oscillates in ``x - v t`` and can dip below zero near the step.
    No clamping is applied.
    """
    _require_finite_solution(sol)
    xi = _comoving(sol, x, t)
    if np.any(xi > 0.0):
        raise ValueError("reflectivity is defined in region A only (x <= v t)")
    u = sol.context.drift_wavenumber
    k1 = sol.scenario.k1
    q = k1 - u
    if sol.regime.tag is RegimeTag.CASE_II:
        R = 1.0 - (4.0 * u / k1) * np.cos(q * xi) ** 2
    else:
        r = sol.ratios.b_over_a
        k2 = sol.reflected.wavenumber.real
        R = (-k2 * r * r - 2.0 * u * r * np.cos(2.0 * q * xi)) / k1
    return _scalar_or_array(R)


def transmissivity(sol: AnalyticSolution, x, t):
    """Transmitted over incident current, evaluated in region B.

    Constant in the oscillating case; it decays with the evanescent wave
    otherwise.  Values above 1 are possible and are returned as is.
    """
    _require_finite_solution(sol)
    xi = _comoving(sol, x, t)
    if np.any(xi < 0.0):
        raise ValueError("transmissivity is defined in region B only (x >= v t)")
    u = sol.context.drift_wavenumber
    k1 = sol.scenario.k1
    k3 = sol.transmitted.wavenumber
    if sol.regime.tag is RegimeTag.CASE_II:
        T = (4.0 * u / k1) * np.exp(-2.0 * k3.imag * xi)
    else:
        c = sol.ratios.c_over_a
        T = k3.real * c * c / k1 * np.ones_like(xi)
    return _scalar_or_array(T)


def boundary_values(sol: AnalyticSolution) -> tuple[float, float]:
    """``(R, T)`` on the step itself."""
    return float(reflectivity(sol, 0.0, 0.0)), float(transmissivity(sol, 0.0, 0.0))


def boundary_unitarity(sol: AnalyticSolution) -> float:
    """``|R + T - 1|`` on the step."""
    R, T = boundary_values(sol)
    return abs(R + T - 1.0)


def flux_continuity_residual(sol: AnalyticSolution) -> float:
    """Relative mismatch of ``k1 a^2 + k2 b^2 + 2u ab`` against ``Re(k3) c^2``."""
    _require_finite_solution(sol)
    u = sol.context.drift_wavenumber
    k1 = sol.scenario.k1
    k2 = sol.reflected.wavenumber.real
    r, c = sol.ratios.b_over_a, sol.ratios.c_over_a
    left_terms = (k1, k2 * r * r, 2.0 * u * r)
    right = sol.transmitted.wavenumber.real * c * c
    scale = max(abs(right), *(abs(term) for term in left_terms))
    return abs(sum(left_terms) - right) / scale


def group_velocity(sol: AnalyticSolution, region: str, x, t, eps_node: float = DEFAULT_NODE_EPS):
    """Current over density for the wave of ``region`` at ``(x, t)``.

    Raises :class:`NodeSingularity` where the density is below
    ``eps_node * 4 a**2``; standing-wave nodes make the ratio 0/0 there.
    """
    xi = _comoving(sol, x, t)
    density, current = _region_fields(sol, region, xi)
    threshold = eps_node * 4.0 * sol.scenario.a ** 2
    if np.any(density <= threshold):
        raise NodeSingularity(f"density below {threshold:g} in region {region}")
    return _scalar_or_array(current / density)


# ---------------------------------------------------------------------------
# behaviour at the regime boundary


def _extrapolate_to_zero(nodes: np.ndarray, values: np.ndarray) -> float:
    """Neville evaluation at 0 of the interpolating polynomial through the samples."""
    p = values.astype(float).copy()
    n = len(nodes)
    for level in range(1, n):
        for i in range(n - level):
            j = i + level
            p[i] = (nodes[j] * p[i] - nodes[i] * p[i + 1]) / (nodes[j] - nodes[i])
    return float(p[0])


def critical_limits(
    ctx: PhysicalContext, a: float = 1.0, rel_step: float = 1e-3, levels: int = 6
) -> tuple[float, float]:
    """One-sided limits of the boundary transmissivity at the critical wavenumber.

    Just above the critical point ``k3 - u`` grows like the square root of
    ``k1 - k_crit``, so adjacent floats still differ by about ``1e-8`` in T.
    The right limit is therefore extrapolated in ``sqrt(k1 - k_crit)`` and
    the left one, which is smooth, in ``k1 - k_crit``.  Returns
    ``(T_minus, T_plus)``.
    """
    if ctx.V0 <= 0.0:
        raise RegimeError("a step with V0 = 0 has no evanescent side")
    k_c = critical_wavenumber(ctx)
    h = rel_step * (k_c - ctx.drift_wavenumber)
    root_nodes = math.sqrt(h) * 0.5 ** np.arange(levels)

    def T(k1: float) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SemiClassicalWarning)
            sol = solve_finite_step(StepScenario(ctx, k1, a=a))
        return float(transmissivity(sol, 0.0, 0.0))

    below = np.array([T(k_c - s * s) for s in root_nodes])
    above = np.array([T(k_c + s * s) for s in root_nodes])
    return _extrapolate_to_zero(root_nodes ** 2, below), _extrapolate_to_zero(root_nodes, above)
