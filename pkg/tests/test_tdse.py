import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from movingstep import tdse
from movingstep.analytics import PhysicalContext, StepKind, StepScenario
from movingstep.errors import BoundaryContamination, InsufficientNorm, NoCollisionError

FREE = PhysicalContext()
MOVING = PhysicalContext(v=0.5, V0=2.0)


def packet_on(n=2048, lo=-80.0, hi=80.0, x0=-20.0, k0=4.0, sigma=5.0):
    grid = tdse.Grid.containing_origin(lo, hi, n)
    return tdse.gaussian_packet(grid, tdse.PacketSpec(x0, k0, sigma))


# ---------------------------------------------------------------------------
# grid and packet


def test_grid_containing_origin_puts_zero_on_a_node():
    grid = tdse.Grid.containing_origin(-13.3, 27.1, 1000)
    assert np.min(np.abs(grid.x)) < 1e-12
    assert grid.x_min <= -13.3 and grid.x_max >= 27.1
    with pytest.raises(ValueError):
        tdse.Grid(0.0, 1.0, 8)
    with pytest.raises(ValueError):
        tdse.Grid(1.0, 0.0, 100)


def test_packet_norm_and_momentum():
    s = packet_on(k0=4.0)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)
    assert tdse.mean_momentum(s) == pytest.approx(4.0, abs=1e-6)
    assert tdse.mean_momentum(packet_on(k0=0.0)) == pytest.approx(0.0, abs=1e-12)


def test_mean_momentum_brute_force_expectation():
    # <k> = -i int psi* psi' dx / int |psi|^2; central differences carry a
    # relative bias of (k dx)^2 / 6
    s = packet_on(n=8192, k0=-2.5, sigma=4.0)
    dpsi = np.gradient(s.psi, s.grid.dx)
    brute = float(np.real(np.sum(np.conj(s.psi) * -1j * dpsi)) * s.grid.dx)
    bias = (2.5 * s.grid.dx) ** 2 / 6
    assert tdse.mean_momentum(s) == pytest.approx(brute, rel=2 * bias)
    assert tdse.mean_momentum(s) == pytest.approx(-2.5, abs=1e-9)


def test_packet_clipping_rejected():
    grid = tdse.Grid(-30.0, 30.0, 1024)
    with pytest.raises(ValueError):
        tdse.gaussian_packet(grid, tdse.PacketSpec(-28.0, 1.0, 5.0))
    with pytest.raises(ValueError):
        tdse.PacketSpec(0.0, 1.0, 0.0)


# ---------------------------------------------------------------------------
# potential


def test_step_potential_shapes():
    grid = tdse.Grid.containing_origin(-10, 10, 201)
    assert not np.any(tdse.step_potential(grid, 3.0, PhysicalContext(v=0.5), StepKind.FINITE))
    V = tdse.step_potential(grid, 2.0, MOVING, StepKind.FINITE)
    np.testing.assert_array_equal(V, np.where(grid.x > 1.0, 2.0, 0.0))
    i = int(np.argmin(np.abs(grid.x - 1.0)))
    smooth = tdse.step_potential(grid, grid.x[i] / MOVING.v, MOVING, "finite", profile="smooth")
    assert smooth[i] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(smooth) >= 0)
    assert smooth[0] == pytest.approx(0.0, abs=1e-12) and smooth[-1] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        tdse.step_potential(grid, 0.0, MOVING, StepKind.INFINITE)


# ---------------------------------------------------------------------------
# propagation


def test_free_packet_moves_at_group_speed_and_keeps_norm():
    s = packet_on(n=4096, lo=-60, hi=80, x0=-20.0, k0=2.0, sigma=4.0)
    out = tdse.propagate(s, FREE, StepKind.FINITE, 0.005, 4000)
    centre = np.sum(out.grid.x * out.density()) * out.grid.dx
    # group speed of the discrete scheme: three-point Laplacian in space,
    # Cayley map in time; the continuum value is 2
    dx, dt, k = out.grid.dx, 0.005, 2.0
    omega = (1 - math.cos(k * dx)) / dx ** 2
    speed = math.sin(k * dx) / dx / (1 + (omega * dt / 2) ** 2)
    assert centre == pytest.approx(-20.0 + speed * out.t, abs=2e-3)
    assert speed == pytest.approx(2.0, rel=(k * dx) ** 2 / 6 + 1e-4)
    assert abs(out.norm() - 1.0) < 1e-10
    assert out.t == pytest.approx(20.0)


def test_free_packet_spreading_matches_closed_form():
    s = packet_on(n=4096, lo=-60, hi=60, x0=0.0, k0=0.0, sigma=2.0)
    out = tdse.propagate(s, FREE, StepKind.FINITE, 0.005, 2000)
    x = out.grid.x
    var = np.sum(x * x * out.density()) * out.grid.dx
    expected = 4.0 * (1.0 + (out.t / (2 * 4.0)) ** 2)
    assert var == pytest.approx(expected, rel=1e-3)


def test_callback_cadence():
    seen = []
    tdse.propagate(packet_on(), FREE, "finite", 0.01, 10, callback=lambda s: seen.append(s.t), callback_every=3)
    assert seen == pytest.approx([0.03, 0.06, 0.09])


def test_boundary_contamination_detected():
    s = packet_on(n=1024, lo=-60, hi=20, x0=-15.0, k0=4.0, sigma=3.0)
    with pytest.raises(BoundaryContamination):
        tdse.propagate(s, FREE, StepKind.FINITE, 0.01, 2000)


def test_fast_step_warns():
    with pytest.warns(RuntimeWarning):
        tdse.propagate(packet_on(), PhysicalContext(v=50.0, V0=1.0), "finite", 0.01, 1)


def test_infinite_kind_not_accepted_by_lab_propagator():
    with pytest.raises(ValueError):
        tdse.propagate(packet_on(), MOVING, StepKind.INFINITE, 0.01, 1)


def test_static_step_transmission():
    report = tdse.validate_scenario(
        StepScenario(PhysicalContext(V0=2.0), 4.0),
        tdse.PacketSpec(-40.0, 4.0, 5.0),
        tdse.RunParams(n_points=2048),
    )
    assert report.measured["transmitted_norm"] == pytest.approx(0.994845, abs=0.005)
    assert report.predicted["packet_T"] == pytest.approx(0.9948452238571285, rel=1e-12)
    assert report.passed


# ---------------------------------------------------------------------------
# Galilean boost


def test_boost_round_trip_and_identity():
    s = packet_on()
    s.t = 3.7
    back = tdse.galilean_boost(tdse.galilean_boost(s, MOVING, "comoving"), MOVING, "lab")
    assert np.max(np.abs(back.psi - s.psi)) <= 1e-14
    assert back.grid.x_min == pytest.approx(s.grid.x_min, abs=1e-12)
    still = tdse.galilean_boost(s, FREE, "comoving")
    np.testing.assert_array_equal(still.psi, s.psi)
    with pytest.raises(ValueError):
        tdse.galilean_boost(s, MOVING, "lab")


def test_boost_shifts_momentum():
    s = tdse.galilean_boost(packet_on(k0=4.0), MOVING, tdse.Frame.COMOVING)
    assert tdse.mean_momentum(s) == pytest.approx(3.5, abs=1e-6)
    assert s.frame is tdse.Frame.COMOVING


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(-5.0, 5.0), st.floats(0.2, 3.0))
def test_property_boost_round_trip(v, t, mass):
    ctx = PhysicalContext(mass=mass, v=v)
    s = packet_on(n=512, k0=1.0)
    s.t = t
    back = tdse.galilean_boost(tdse.galilean_boost(s, ctx, "comoving"), ctx, "lab")
    assert np.max(np.abs(back.psi - s.psi)) <= 1e-13


def _equivalence_gap(n, scheme):
    grid = tdse.Grid.containing_origin(-110, 120, n)
    shift = round(10 / grid.dx)
    duration = shift * grid.dx / MOVING.v
    steps, s = 4000, tdse.gaussian_packet(grid, tdse.PacketSpec(-30.0, 4.0, 5.0))
    dt = duration / steps
    lab = tdse.propagate(s, MOVING, "finite", dt, steps, profile="smooth", width=2.5, scheme=scheme)
    com = tdse.propagate_comoving(s, MOVING, "finite", dt, steps, profile="smooth", width=2.5, scheme=scheme)
    # the comoving result lives on the input grid shifted by exactly `shift` cells
    assert com.grid.x_min == pytest.approx(grid.x_min + shift * grid.dx, abs=1e-9)
    return float(np.max(np.abs(lab.psi[shift:] - com.psi[:-shift])))


def test_lab_and_comoving_agree_with_split_step():
    assert _equivalence_gap(2048, "split-step") <= 1e-6


@pytest.mark.slow
def test_crank_nicolson_equivalence_converges_second_order():
    coarse = _equivalence_gap(2048, "crank-nicolson")
    fine = _equivalence_gap(4096, "crank-nicolson")
    assert fine < coarse / 3.0


# ---------------------------------------------------------------------------
# hard wall


def test_hard_wall_reflects_with_shifted_momentum():
    ctx = PhysicalContext(v=0.5)
    grid = tdse.Grid.containing_origin(-80, 40, 4096)
    s = tdse.gaussian_packet(grid, tdse.PacketSpec(-35.0, 4.0, 4.0))
    out = tdse.hard_wall_comoving(s, ctx, 0.004, 5000)
    wall = ctx.v * out.t
    assert np.max(np.abs(out.psi[out.grid.x > wall + 1e-9])) == 0.0
    split = tdse.measure_split_norms(out, wall)
    assert split.left_norm == pytest.approx(1.0, abs=1e-9)
    assert tdse.mean_momentum(out) == pytest.approx(-3.0, rel=0.02)


def test_hard_wall_rejects_overlapping_packet():
    grid = tdse.Grid.containing_origin(-40, 40, 1024)
    s = tdse.gaussian_packet(grid, tdse.PacketSpec(0.0, 4.0, 3.0))
    with pytest.raises(ValueError):
        tdse.hard_wall_comoving(s, PhysicalContext(v=0.5), 0.01, 10)


# ---------------------------------------------------------------------------
# measurements


def test_split_norms():
    s = packet_on()
    split = tdse.measure_split_norms(s, 40.0)
    assert split.left_norm == pytest.approx(1.0, abs=1e-12)
    assert split.right_norm < 1e-10
    mid = tdse.measure_split_norms(s, -20.3)
    assert mid.left_norm + mid.right_norm == pytest.approx(s.norm(), abs=1e-12)


def test_mean_momentum_insufficient_norm():
    s = packet_on()
    with pytest.raises(InsufficientNorm):
        tdse.mean_momentum(s, lambda x: x > 40.0)


def test_tail_fit_static_evanescent_step():
    # v = 0, k1 = 1, V0 = 2: beta = sqrt(2 V0 - k1^2) = sqrt(3)
    report = tdse.validate_scenario(
        StepScenario(PhysicalContext(V0=2.0), 1.0), tdse.PacketSpec(-40.0, 1.0, 5.0), tdse.RunParams(n_points=2048)
    )
    assert report.measured["tail_slope"] == pytest.approx(-2 * math.sqrt(3.0), rel=0.10)
    assert report.measured["transmitted_norm"] < 1e-3


def test_tail_fit_guard_on_free_packet():
    s = packet_on(x0=-20.0)
    assert abs(tdse.fit_evanescent_tail(s, FREE, (-21.0, -19.0))) < 0.05
    with pytest.raises(InsufficientNorm):
        tdse.fit_evanescent_tail(s, FREE, (40.0, 55.0))
    with pytest.raises(InsufficientNorm):
        tdse.fit_evanescent_tail(s, FREE, (0.0, 0.001))


def test_node_spacing_of_standing_wave():
    grid = tdse.Grid(-30.0, 0.0, 3001)
    psi = np.sin(3.5 * grid.x) * np.exp(-((grid.x + 15) ** 2) / 200)
    s = tdse.GridState(grid, 0.0, psi.astype(complex))
    assert tdse.node_spacing(s, (-25.0, -5.0)) == pytest.approx(math.pi / 3.5, abs=grid.dx / 10)
    with pytest.raises(InsufficientNorm):
        tdse.node_spacing(s, (-1.0, -0.5))


# ---------------------------------------------------------------------------
# planning and validation


def test_plan_run_choices():
    plan = tdse.plan_run(StepScenario(MOVING, 4.0), tdse.PacketSpec(-80.0, 4.0, 10.0), tdse.RunParams())
    assert plan.t_contact == pytest.approx(80.0 / 3.5)
    assert plan.dt <= plan.grid.dx / (4 * 0.5)
    assert plan.grid.n_points == 8192
    with pytest.raises(ValueError):
        tdse.plan_run(StepScenario(MOVING, 4.0), tdse.PacketSpec(-10.0, 4.0, 10.0), tdse.RunParams())


def test_validation_refuses_no_collision():
    with pytest.raises(NoCollisionError):
        tdse.validate_scenario(StepScenario(MOVING, 0.4))


def test_failed_tolerance_is_an_entry_not_an_exception():
    params = tdse.RunParams(n_points=2048, tolerances=tdse.Tolerances(momentum_rel=1e-9))
    report = tdse.validate_scenario(StepScenario(PhysicalContext(V0=2.0), 4.0), tdse.PacketSpec(-40.0, 4.0, 5.0), params)
    assert not report.passed
    assert report.pass_flags["reflected_mean_k"] is False
    assert report.pass_flags["norm_drift"] is True
