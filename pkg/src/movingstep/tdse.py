"""Wave-packet propagation against a moving step, used as an independent check.

The main propagator is Crank-Nicolson (implicit midpoint) on a uniform grid
with the three-point Laplacian and Dirichlet ends; a Fourier split-step
scheme is available as a Galilean-exact alternative.  The lab-frame run
re-samples the step at every half step.  The infinite wall is only treated in
the comoving frame, where it is a fixed Dirichlet node.

Wavenumbers measured here are in units of 1/length, i.e. momentum over hbar,
so they compare directly with the analytic ``k1``, ``k2`` and ``k3``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erf

from movingstep import analytics as an
from movingstep.analytics import PhysicalContext, RegimeTag, StepKind, StepScenario
from movingstep.errors import BoundaryContamination, InsufficientNorm, NoCollisionError

EDGE_AMPLITUDE_LIMIT = 1e-6
PACKET_EDGE_LIMIT = 1e-10
MIN_MASKED_NORM = 1e-6


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self) -> None:
        if self.n_points < 16:
            raise ValueError("n_points must be >= 16")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be < x_max")

    @classmethod
    def containing_origin(cls, lo: float, hi: float, n_points: int) -> "Grid":
        """A grid covering ``[lo, hi]`` with ``x = 0`` lying exactly on a node."""
        dx = (hi - lo) / (n_points - 2)
        i0 = math.ceil(-lo / dx)
        return cls(-i0 * dx, (n_points - 1 - i0) * dx, n_points)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def shifted(self, offset: float) -> "Grid":
        return Grid(self.x_min + offset, self.x_max + offset, self.n_points)


class Frame(str, enum.Enum):
    LAB = "lab"
    COMOVING = "comoving"


@dataclass
class GridState:
    grid: Grid
    t: float
    psi: np.ndarray
    frame: Frame = Frame.LAB

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def copy(self) -> "GridState":
        return dataclasses.replace(self, psi=self.psi.copy())


@dataclass(frozen=True)
class PacketSpec:
    x0: float
    k0: float
    sigma_x: float

    def __post_init__(self) -> None:
        if self.sigma_x <= 0:
            raise ValueError("sigma_x must be > 0")

    @property
    def sigma_k(self) -> float:
        return 1.0 / (2.0 * self.sigma_x)


def gaussian_packet(grid: Grid, spec: PacketSpec, t: float = 0.0) -> GridState:
    """Normalized Gaussian ``exp(-(x - x0)^2 / (4 sigma^2) + i k0 x)``."""
    lo, hi = spec.x0 - 5 * spec.sigma_x, spec.x0 + 5 * spec.sigma_x
    if lo < grid.x_min or hi > grid.x_max:
        raise ValueError("packet x0 +- 5 sigma_x does not fit in the grid")
    x = grid.x
    psi = np.exp(-((x - spec.x0) ** 2) / (4.0 * spec.sigma_x ** 2) + 1j * spec.k0 * x)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    edge = max(abs(psi[0]), abs(psi[-1]))
    if edge > PACKET_EDGE_LIMIT:
        raise ValueError(f"packet is clipped by the grid (edge amplitude {edge:.3g})")
    return GridState(grid, float(t), psi)


class StepProfile(str, enum.Enum):
    SHARP = "sharp"
    SMOOTH = "smooth"


class Scheme(str, enum.Enum):
    CRANK_NICOLSON = "crank-nicolson"
    SPLIT_STEP = "split-step"


#: erf width of the smooth step profile, in grid cells.
DEFAULT_STEP_WIDTH = 0.75


def _step_profile(x: np.ndarray, edge: float, V0: float, profile: StepProfile, width: float) -> np.ndarray:
    if profile is StepProfile.SHARP:
        return np.where(x > edge, V0, 0.0)
    return 0.5 * V0 * (1.0 + erf((x - edge) / (math.sqrt(2.0) * width)))


def step_potential(
    grid: Grid,
    t: float,
    ctx: PhysicalContext,
    kind: StepKind,
    profile: Union[StepProfile, str] = StepProfile.SHARP,
    width: float = DEFAULT_STEP_WIDTH,
) -> np.ndarray:
    """Finite step of height ``V0`` with its edge at ``x = v t``.

    ``sharp`` puts ``V0`` on every cell centre with ``x > v t``.  ``smooth``
    replaces the jump by an erf of standard deviation ``width`` cells, which a
    moving step needs to avoid radiating lattice noise as it crosses cells.
    """
    if StepKind(kind) is StepKind.INFINITE:
        raise ValueError("infinite steps are propagated with hard_wall_comoving")
    return _step_profile(grid.x, ctx.v * t, ctx.V0, StepProfile(profile), width * grid.dx)


# ---------------------------------------------------------------------------
# propagators

Callback = Callable[[GridState], None]


def _check_step_args(dt: float, n_steps: int) -> None:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")


def _check_edges(psi: np.ndarray, t: float) -> None:
    edge = max(abs(psi[0]), abs(psi[-1]))
    if edge > EDGE_AMPLITUDE_LIMIT:
        raise BoundaryContamination(f"edge amplitude {edge:.3g} > {EDGE_AMPLITUDE_LIMIT:g} at t={t:.6g}")


def _crank_nicolson(
    state: GridState,
    hbar: float,
    mass: float,
    potential: Callable[[float], np.ndarray],
    dt: float,
    n_steps: int,
    n_active: Optional[int] = None,
    callback: Optional[Callback] = None,
    callback_every: int = 1,
) -> GridState:
    """Implicit-midpoint steps with Dirichlet ends; cells from ``n_active`` on stay zero."""
    _check_step_args(dt, n_steps)
    out = state.copy()
    n = out.grid.n_points if n_active is None else n_active
    if n < 3:
        raise ValueError("fewer than three active cells")
    psi = out.psi
    psi[n:] = 0.0

    dx = out.grid.dx
    kin = hbar * hbar / (2.0 * mass * dx * dx)
    tau = 0.5j * dt / hbar
    ab = np.empty((3, n), dtype=complex)
    ab[0, 0] = 0.0
    ab[0, 1:] = -tau * kin
    ab[2, :-1] = -tau * kin
    ab[2, -1] = 0.0

    t0 = out.t
    for step in range(n_steps):
        V = potential(t0 + (step + 0.5) * dt)[:n]
        diag = 2.0 * kin + V
        p = psi[:n]
        hp = diag * p
        hp[1:] -= kin * p[:-1]
        hp[:-1] -= kin * p[1:]
        ab[1] = 1.0 + tau * diag
        psi[:n] = solve_banded((1, 1), ab, p - tau * hp, check_finite=False)
        out.t = t0 + (step + 1) * dt
        _check_edges(psi, out.t)
        if callback is not None and (step + 1) % callback_every == 0:
            callback(out)
    return out


def _split_step(
    state: GridState,
    hbar: float,
    mass: float,
    potential: Callable[[float], np.ndarray],
    dt: float,
    n_steps: int,
    callback: Optional[Callback] = None,
    callback_every: int = 1,
) -> GridState:
    """Strang-split Fourier steps on the periodic extension of the grid."""
    _check_step_args(dt, n_steps)
    out = state.copy()
    grid = out.grid
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.dx)
    half_kinetic = np.exp(-0.25j * hbar * k * k * dt / mass)
    psi = out.psi
    t0 = out.t
    for step in range(n_steps):
        V = potential(t0 + (step + 0.5) * dt)
        psi = np.fft.ifft(half_kinetic * np.fft.fft(psi))
        psi *= np.exp(-1j * V * dt / hbar)
        psi = np.fft.ifft(half_kinetic * np.fft.fft(psi))
        out.psi = psi
        out.t = t0 + (step + 1) * dt
        _check_edges(psi, out.t)
        if callback is not None and (step + 1) % callback_every == 0:
            callback(out)
    return out


def _evolve(scheme, state, hbar, mass, potential, dt, n_steps, callback, callback_every):
    if Scheme(scheme) is Scheme.SPLIT_STEP:
        return _split_step(state, hbar, mass, potential, dt, n_steps, callback, callback_every)
    return _crank_nicolson(state, hbar, mass, potential, dt, n_steps,
                           callback=callback, callback_every=callback_every)


def propagate(
    state: GridState,
    ctx: PhysicalContext,
    kind: StepKind,
    dt: float,
    n_steps: int,
    callback: Optional[Callback] = None,
    callback_every: int = 1,
    profile: Union[StepProfile, str, None] = None,
    width: float = DEFAULT_STEP_WIDTH,
    scheme: Union[Scheme, str] = Scheme.CRANK_NICOLSON,
) -> GridState:
    """Propagate in the lab frame against the finite step at ``x = v t``.

    The step is re-sampled at ``t + dt/2`` on every step.  By default it is
    sharp when ``v = 0`` and smooth otherwise (see :func:`step_potential`).
    ``callback`` sees the live state every ``callback_every`` steps and must
    copy it to keep it.
    """
    if StepKind(kind) is StepKind.INFINITE:
        raise ValueError("infinite steps are propagated with hard_wall_comoving")
    grid = state.grid
    if ctx.v * dt > grid.dx / 4.0:
        warnings.warn("v dt exceeds dx/4; the step skips cells between updates", RuntimeWarning)
    x = grid.x
    if profile is None:
        profile = StepProfile.SHARP if ctx.v == 0 else StepProfile.SMOOTH
    profile = StepProfile(profile)
    w = width * grid.dx

    def potential(t: float) -> np.ndarray:
        return _step_profile(x, ctx.v * t, ctx.V0, profile, w)

    return _evolve(scheme, state, ctx.hbar, ctx.mass, potential, dt, n_steps, callback, callback_every)


def galilean_boost(state: GridState, ctx: PhysicalContext, direction: Union[Frame, str]) -> GridState:
    """Map between the lab frame and the frame riding on the step.

    The wave function is multiplied by ``exp(-+ i (m v x - m v^2 t / 2) / hbar)``
    with ``x`` the lab coordinate, and the grid is relabelled so the step sits
    at the comoving origin (``x' = x - v t``).  Wavenumbers shift by ``-+ m v / hbar``.
    """
    direction = Frame(direction)
    if state.frame is direction:
        raise ValueError(f"state is already in the {direction.value} frame")
    if direction is Frame.COMOVING:
        lab_grid = state.grid
        new_grid = lab_grid.shifted(-ctx.v * state.t)
        sign = -1.0
    else:
        new_grid = state.grid.shifted(ctx.v * state.t)
        lab_grid = new_grid
        sign = 1.0
    phase = (ctx.mass * ctx.v * lab_grid.x - 0.5 * ctx.mass * ctx.v ** 2 * state.t) / ctx.hbar
    return GridState(new_grid, state.t, state.psi * np.exp(sign * 1j * phase), direction)


def propagate_comoving(
    state: GridState,
    ctx: PhysicalContext,
    kind: StepKind,
    dt: float,
    n_steps: int,
    callback: Optional[Callback] = None,
    callback_every: int = 1,
    profile: Union[StepProfile, str] = StepProfile.SHARP,
    width: float = DEFAULT_STEP_WIDTH,
    scheme: Union[Scheme, str] = Scheme.CRANK_NICOLSON,
) -> GridState:
    """Boost to the step frame, propagate against a static step, boost back.

    The returned lab state lives on the input grid translated by ``v`` times
    the elapsed time.  ``callback`` receives lab-frame copies.  The infinite
    wall is always a Crank-Nicolson Dirichlet node.
    """
    kind = StepKind(kind)
    com = galilean_boost(state, ctx, Frame.COMOVING)
    xc = com.grid.x

    lab_callback: Optional[Callback] = None
    if callback is not None:
        lab_callback = lambda s: callback(galilean_boost(s, ctx, Frame.LAB))  # noqa: E731

    if kind is StepKind.INFINITE:
        # tolerance absorbs round-off from repeated grid relabelling
        n_active = int(np.searchsorted(xc, -1e-9 * com.grid.dx, side="left"))
        inside = com.psi[n_active:]
        if inside.size and np.max(np.abs(inside)) > EDGE_AMPLITUDE_LIMIT:
            raise ValueError("initial packet overlaps the wall")
        zeros = np.zeros(n_active)
        com = _crank_nicolson(com, ctx.hbar, ctx.mass, lambda t: zeros, dt, n_steps, n_active=n_active,
                              callback=lab_callback, callback_every=callback_every)
    else:
        V = _step_profile(xc, 0.0, ctx.V0, StepProfile(profile), width * com.grid.dx)
        com = _evolve(scheme, com, ctx.hbar, ctx.mass, lambda t: V, dt, n_steps,
                      lab_callback, callback_every)
    return galilean_boost(com, ctx, Frame.LAB)


def hard_wall_comoving(
    state: GridState,
    ctx: PhysicalContext,
    dt: float,
    n_steps: int,
    callback: Optional[Callback] = None,
    callback_every: int = 1,
) -> GridState:
    """Reflect off an impenetrable wall at ``x = v t``, solved in the wall frame.

    The wall sits on the first comoving node at or right of the origin, so
    build the grid with :meth:`Grid.containing_origin` to put it exactly at
    ``x = v t``.
    """
    return propagate_comoving(state, ctx, StepKind.INFINITE, dt, n_steps, callback, callback_every)


# ---------------------------------------------------------------------------
# measurements


@dataclass(frozen=True)
class SplitNorms:
    left_norm: float
    right_norm: float


def measure_split_norms(state: GridState, boundary_x: float) -> SplitNorms:
    dens = state.density() * state.grid.dx
    left = state.grid.x <= boundary_x
    return SplitNorms(float(np.sum(dens[left])), float(np.sum(dens[~left])))


def mean_momentum(state: GridState, region_mask=None) -> float:
    """Mean wavenumber of the masked part of the wave function.

    ``region_mask`` is a boolean array over the grid, a predicate on ``x``, or
    ``None`` for the whole grid.  The momentum operator is applied spectrally,
    so the result carries no finite-difference bias.
    """
    x = state.grid.x
    if region_mask is None:
        mask = np.ones(x.shape, dtype=bool)
    elif callable(region_mask):
        mask = np.asarray(region_mask(x), dtype=bool)
    else:
        mask = np.asarray(region_mask, dtype=bool)
    masked = np.where(mask, state.psi, 0.0)
    weight = float(np.sum(np.abs(masked) ** 2) * state.grid.dx)
    if weight < MIN_MASKED_NORM:
        raise InsufficientNorm(f"masked norm {weight:.3g} < {MIN_MASKED_NORM:g}")
    spectrum = np.abs(np.fft.fft(masked)) ** 2
    k = 2.0 * np.pi * np.fft.fftfreq(x.size, d=state.grid.dx)
    return float(np.sum(k * spectrum) / np.sum(spectrum))


def fit_evanescent_tail(state: GridState, ctx: PhysicalContext, window: tuple[float, float]) -> float:
    """Least-squares slope of ``log |psi|^2`` against ``x`` over ``window``.

    For an evanescent wave the slope is ``-2 beta``.
    """
    x = state.grid.x
    lo, hi = window
    sel = (x >= lo) & (x <= hi)
    if np.count_nonzero(sel) < 3:
        raise InsufficientNorm("fit window holds fewer than three grid points")
    dens = state.density()
    floor = 1e-12 * float(np.max(dens))
    if np.min(dens[sel]) <= floor or floor == 0.0:
        raise InsufficientNorm("density in the fit window is below 1e-12 of the peak")
    slope, _ = np.polyfit(x[sel], np.log(dens[sel]), 1)
    return float(slope)


def node_positions(state: GridState, window: tuple[float, float]) -> np.ndarray:
    """Sub-cell positions of local density minima inside ``window``.

    Each minimum is refined with a parabola through its three cells.
    """
    x = state.grid.x
    d = state.density()
    lo, hi = window
    i = np.arange(1, x.size - 1)
    is_min = (d[i] < d[i - 1]) & (d[i] <= d[i + 1]) & (x[i] >= lo) & (x[i] <= hi)
    i = i[is_min]
    denom = d[i - 1] - 2.0 * d[i] + d[i + 1]
    offset = np.where(denom > 0, 0.5 * (d[i - 1] - d[i + 1]) / np.where(denom > 0, denom, 1.0), 0.0)
    return x[i] + offset * state.grid.dx


def node_spacing(state: GridState, window: tuple[float, float]) -> float:
    """Mean spacing of density minima, from a linear fit of position against index."""
    nodes = node_positions(state, window)
    if nodes.size < 3:
        raise InsufficientNorm("fewer than three density nodes in the window")
    slope, _ = np.polyfit(np.arange(nodes.size), nodes, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Tolerances:
    momentum_rel: float = 0.02
    split_abs: float = 0.01
    norm_drift: float = 1e-6
    evanescent_norm: float = 1e-3
    tail_slope_rel: float = 0.10
    node_spacing_abs: Optional[float] = None  # defaults to dx


@dataclass(frozen=True)
class RunParams:
    """Numerical settings; ``None`` fields are planned from the scenario."""

    n_points: int = 8192
    dt: Optional[float] = None
    t_final: Optional[float] = None
    x_min: Optional[float] = None
    x_max: Optional[float] = None
    edge_sigmas: float = 10.0
    separation_sigmas: float = 6.0
    tolerances: Tolerances = field(default_factory=Tolerances)


@dataclass(frozen=True)
class ValidationEntry:
    name: str
    predicted: float
    measured: float
    tolerance: float
    mode: str  # "abs", "rel" or "max"
    passed: bool


def _entry(name: str, predicted: float, measured: float, tolerance: float, mode: str) -> ValidationEntry:
    if mode == "rel":
        ok = abs(measured - predicted) <= tolerance * abs(predicted)
    elif mode == "abs":
        ok = abs(measured - predicted) <= tolerance
    elif mode == "max":
        ok = measured <= tolerance
    else:
        raise ValueError(mode)
    return ValidationEntry(name, float(predicted), float(measured), float(tolerance), mode, bool(ok))


@dataclass
class ValidationReport:
    scenario: StepScenario
    predicted: dict
    measured: dict
    tolerances: dict
    entries: list
    grid: Grid
    dt: float
    n_steps: int
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def pass_flags(self) -> dict:
        return {e.name: e.passed for e in self.entries}


@dataclass(frozen=True)
class RunPlan:
    grid: Grid
    dt: float
    n_steps: int
    t_contact: float


def plan_run(scenario: StepScenario, packet: PacketSpec, params: RunParams) -> RunPlan:
    """Choose grid, time step and duration so that the outgoing packets end
    ``separation_sigmas`` widths away from the step and ``edge_sigmas`` widths
    away from the grid edges."""
    ctx = scenario.context
    hbar_m = ctx.hbar / ctx.mass
    u = ctx.drift_wavenumber
    k1 = scenario.k1
    if packet.x0 + 5 * packet.sigma_x > 0.0:
        raise ValueError("packet must start at least 5 sigma_x left of the step at x = 0")
    k2 = an.reflected_wavenumber(k1, ctx)
    regime = an.classify_regime(scenario)
    k3 = None
    if scenario.kind is StepKind.FINITE and regime.tag is RegimeTag.CASE_I:
        k3 = an.transmitted_wavenumber(scenario).real

    approach = hbar_m * (k1 - u)
    t_contact = -packet.x0 / approach
    speeds = [approach]
    if k3 is not None:
        speeds.append(hbar_m * (k3 - u))
    if params.t_final is None:
        t_final = t_contact + params.separation_sigmas * packet.sigma_x / min(speeds)
    else:
        t_final = params.t_final
    width = packet.sigma_x * math.sqrt(1.0 + (hbar_m * t_final / (2 * packet.sigma_x ** 2)) ** 2)
    margin = params.edge_sigmas * width

    t_out = max(t_final - t_contact, 0.0)
    x_hit = ctx.v * t_contact
    centres = [packet.x0, x_hit + hbar_m * k2 * t_out, ctx.v * t_final]
    if k3 is not None:
        centres.append(x_hit + hbar_m * k3 * t_out)
    lo = params.x_min if params.x_min is not None else min(centres) - margin
    hi = params.x_max if params.x_max is not None else max(centres) + margin
    grid = Grid.containing_origin(lo, hi, params.n_points)

    if params.dt is None:
        kmax = max(abs(k1), abs(k2), abs(k3 or 0.0)) + 5.0 * packet.sigma_k
        dt = grid.dx / (4.0 * hbar_m * kmax)
        if ctx.v > 0:
            dt = min(dt, grid.dx / (4.0 * ctx.v))
    else:
        dt = params.dt
    n_steps = max(1, math.ceil(t_final / dt))
    return RunPlan(grid, dt, n_steps, t_contact)


def validate_scenario(
    scenario: StepScenario,
    packet: Optional[PacketSpec] = None,
    params: Optional[RunParams] = None,
) -> ValidationReport:
    """Run a packet against the step and compare observables with the closed forms.

    The packet prediction for the reflected norm is ``(b/a)**2``, the static
    step result in the step frame.  It is reported next to the boundary
    flux ratios ``R(vt)`` and ``T(vt)``, which are a different quantity.
    """
    params = params or RunParams()
    tol = params.tolerances
    if packet is None:
        packet = PacketSpec(x0=-8.0 * 10.0, k0=scenario.k1, sigma_x=10.0)
    regime = an.classify_regime(scenario)
    if regime.tag is RegimeTag.NO_COLLISION:
        raise NoCollisionError("the packet never reaches the step")
    sol = an.solve(scenario)
    ctx = scenario.context
    plan = plan_run(scenario, packet, params)
    grid, dt, n_steps = plan.grid, plan.dt, plan.n_steps
    state0 = gaussian_packet(grid, packet)
    norm0 = state0.norm()

    k2 = sol.reflected.wavenumber.real
    predicted = {"k2": k2}
    if sol.is_infinite:
        predicted.update(b_over_a=-1.0, c_over_a=0.0, R_boundary=1.0, T_boundary=0.0,
                         packet_R=1.0, packet_T=0.0)
    else:
        R_b, T_b = an.boundary_values(sol)
        r = sol.ratios.b_over_a
        k3 = sol.transmitted.wavenumber
        predicted.update(k3_gamma=k3.real, k3_beta=k3.imag, b_over_a=r, c_over_a=sol.ratios.c_over_a,
                         R_boundary=R_b, T_boundary=T_b, packet_R=r * r, packet_T=1.0 - r * r)

    # snapshot at maximal contact: peak density on the step for finite steps,
    # incident centre on the wall for the infinite one
    contact = {"value": -1.0, "state": None}
    contact_step = max(1, round(plan.t_contact / dt))

    def watch_step(s: GridState) -> None:
        i = int(np.searchsorted(s.grid.x, ctx.v * s.t, side="right"))
        i = min(i, s.grid.n_points - 1)
        value = abs(s.psi[i]) ** 2
        if value > contact["value"]:
            contact["value"] = value
            contact["state"] = s.copy()

    def watch_wall(s: GridState) -> None:
        contact["state"] = s.copy()

    if sol.is_infinite:
        mid = hard_wall_comoving(state0, ctx, dt, contact_step)
        watch_wall(mid)
        final = hard_wall_comoving(mid, ctx, dt, n_steps - contact_step)
    elif regime.tag is RegimeTag.CASE_II:
        final = propagate(state0, ctx, scenario.kind, dt, n_steps, callback=watch_step)
    else:
        final = propagate(state0, ctx, scenario.kind, dt, n_steps)

    wall = ctx.v * final.t
    split = measure_split_norms(final, wall)
    drift = abs(final.norm() - norm0) / norm0
    measured = {
        "reflected_norm": split.left_norm,
        "transmitted_norm": split.right_norm,
        "norm_drift": drift,
        "reflected_mean_k": mean_momentum(final, lambda x: x <= wall),
    }
    entries = [
        _entry("reflected_mean_k", k2, measured["reflected_mean_k"], tol.momentum_rel, "rel"),
        _entry("norm_drift", 0.0, drift, tol.norm_drift, "max"),
    ]
    notes = ["packet_R/packet_T use the step-frame static split (b/a)^2"]

    if sol.is_infinite:
        snap = contact["state"]
        wall_c = ctx.v * snap.t
        lam = math.pi / (scenario.k1 - ctx.drift_wavenumber)
        spacing = node_spacing(snap, (wall_c - 2.0 * packet.sigma_x, wall_c - 0.5 * lam))
        measured["node_spacing"] = spacing
        predicted["node_spacing"] = lam
        node_tol = tol.node_spacing_abs if tol.node_spacing_abs is not None else grid.dx
        entries += [
            _entry("node_spacing", lam, spacing, node_tol, "abs"),
            _entry("reflected_norm", 1.0, split.left_norm, tol.split_abs, "abs"),
        ]
    elif regime.tag is RegimeTag.CASE_I:
        measured["transmitted_mean_k"] = mean_momentum(final, lambda x: x > wall)
        entries += [
            _entry("transmitted_mean_k", predicted["k3_gamma"], measured["transmitted_mean_k"],
                   tol.momentum_rel, "rel"),
            _entry("reflected_norm", predicted["packet_R"], split.left_norm, tol.split_abs, "abs"),
            _entry("transmitted_norm", predicted["packet_T"], split.right_norm, tol.split_abs, "abs"),
        ]
    elif regime.tag is RegimeTag.CASE_II:
        snap = contact["state"]
        beta = predicted["k3_beta"]
        edge = ctx.v * snap.t
        slope = fit_evanescent_tail(snap, ctx, (edge + 0.25 / beta, edge + 2.5 / beta))
        measured["tail_slope"] = slope
        predicted["tail_slope"] = -2.0 * beta
        entries += [
            _entry("tail_slope", -2.0 * beta, slope, tol.tail_slope_rel, "rel"),
            _entry("transmitted_norm", 0.0, split.right_norm, tol.evanescent_norm, "max"),
        ]
    else:
        notes.append("critical regime: only norm and reflected momentum are checked")

    tolerances = {e.name: (e.tolerance, e.mode) for e in entries}
    return ValidationReport(scenario, predicted, measured, tolerances, entries, grid, dt, n_steps,
                            tuple(notes))
