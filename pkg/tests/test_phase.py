import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import e as QE, h, hbar

from ablab.energy import ElectronState, interaction_energy
from ablab.errors import GeometryError, InvalidSpecError
from ablab.geomfields import (
    FluxLineSpec, GaugeFunction, SolenoidSpec, a_field_analytic, total_flux,
)
from ablab.phase import (
    BeamPair, PhaseResult, Route, Trajectory, action_phase_difference, compare_routes,
    phase_via_flux, phase_via_interaction_energy, phase_via_line_integral, trajectory_legs,
    verify_eq7,
)
from ablab.quadrature import Path, QuadConfig

from conftest import PHI0, R

ME = 9.1093837015e-31


@pytest.fixture
def beams():
    return BeamPair.semicircles(5 * R)


def test_one_flux_quantum_is_two_pi():
    res = phase_via_flux(FluxLineSpec(h / QE), QE)
    assert res.phase == pytest.approx(2 * math.pi, rel=1e-15)
    assert res.route is Route.FLUX
    assert res.error_estimate == 0.0


def test_half_flux_quantum_is_pi():
    assert phase_via_flux(FluxLineSpec(h / (2 * QE)), QE).phase == pytest.approx(math.pi, rel=1e-15)


def test_default_solenoid_magnitude(solenoid, beams, electron_charge):
    flux = phase_via_flux(solenoid, electron_charge, beams=beams)
    assert abs(flux.phase) == pytest.approx(QE * PHI0 / hbar, rel=1e-4)
    assert abs(flux.phase) == pytest.approx(5.997e8, rel=1e-3)
    line = phase_via_line_integral(solenoid, beams, electron_charge)
    assert abs(line.phase - flux.phase) <= max(line.error_estimate, 1e-9 * abs(flux.phase))
    assert 0 <= line.phase_mod_2pi < 2 * math.pi


def test_sign_convention(solenoid, beams, electron_charge):
    # left beam on +y, loop clockwise about +z flux, negative charge
    assert beams.winding(solenoid) == -1
    assert phase_via_flux(solenoid, electron_charge, beams=beams).phase > 0


def test_zero_current_and_zero_charge(solenoid, beams, electron_charge):
    off = solenoid.scaled(0.0)
    for res in (phase_via_line_integral(off, beams, electron_charge),
                phase_via_flux(off, electron_charge, beams=beams),
                action_phase_difference(beams, 1e6, off, electron_charge, ME),
                phase_via_line_integral(solenoid, beams, 0.0),
                phase_via_flux(solenoid, 0.0, beams=beams)):
        assert res.phase == 0.0
        assert math.copysign(1.0, res.phase) == 1.0


def test_action_route_matches_flux(solenoid, beams, electron_charge):
    act = action_phase_difference(beams, 1e6, solenoid, electron_charge, ME)
    flux = phase_via_flux(solenoid, electron_charge, beams=beams)
    assert act.phase == pytest.approx(flux.phase, rel=1e-6)
    assert act.warning is None
    assert act.kinetic_mismatch == 0.0


def test_action_doubled_current_doubles_phase(solenoid, beams, electron_charge):
    one = action_phase_difference(beams, 1e6, solenoid, electron_charge, ME)
    two = action_phase_difference(beams, 1e6, solenoid.scaled(2.0), electron_charge, ME)
    assert two.phase == pytest.approx(2 * one.phase, rel=1e-12)


def test_action_unequal_lengths_warns(solenoid, electron_charge):
    # both beams cross the x axis at +-6R; the left one detours to y = 8R
    left = Path.polyline([[-6 * R, 0, 0], [-6 * R, 8 * R, 0], [6 * R, 8 * R, 0], [6 * R, 0, 0]])
    right = Path.polyline([[-6 * R, 0, 0], [-6 * R, -4 * R, 0], [6 * R, -4 * R, 0], [6 * R, 0, 0]])
    pair = BeamPair(left, right)
    res = action_phase_difference(pair, 1e6, solenoid, electron_charge, ME)
    assert res.warning is not None
    assert res.kinetic_mismatch == pytest.approx(0.5 * ME * 1e6 * 8 * R / hbar, rel=1e-12)
    flux = phase_via_flux(solenoid, electron_charge, beams=pair)
    assert res.phase == pytest.approx(flux.phase, rel=1e-6)


def _legs(beams, speed, samples=257):
    return (trajectory_legs(beams.path_left, speed, samples),
            trajectory_legs(beams.path_right, speed, samples))


def test_interaction_energy_route(solenoid, beams, electron_charge):
    left, right = _legs(beams, 1e6)
    res = phase_via_interaction_energy(solenoid, left, right, electron_charge)
    flux = phase_via_flux(solenoid, electron_charge, beams=beams)
    assert res.route is Route.INTERACTION_ENERGY
    assert res.phase == pytest.approx(flux.phase, rel=1e-4)
    assert abs(res.phase - flux.phase) <= 10 * res.error_estimate + 1e-10 * abs(flux.phase)


def test_interaction_energy_parametrization_invariance(solenoid, beams, electron_charge):
    a = phase_via_interaction_energy(solenoid, *_legs(beams, 1e6), electron_charge)
    b = phase_via_interaction_energy(solenoid, *_legs(beams, 2e6), electron_charge)
    assert b.phase == pytest.approx(a.phase, rel=1e-12)


def test_interaction_energy_same_side_is_zero(solenoid, electron_charge):
    left = Path.polyline([[-5 * R, 0, 0], [-5 * R, 4 * R, 0], [5 * R, 4 * R, 0], [5 * R, 0, 0]])
    right = Path.polyline([[-5 * R, 0, 0], [-5 * R, 2 * R, 0], [5 * R, 2 * R, 0], [5 * R, 0, 0]])
    pair = BeamPair(left, right)
    assert pair.winding(solenoid) == 0
    res = phase_via_interaction_energy(solenoid, *_legs(pair, 1e6), electron_charge)
    scale = QE * PHI0 / hbar
    assert abs(res.phase) <= 1e-8 * scale


def test_interaction_energy_rejects_interior_and_mismatched_ends(long_solenoid, electron_charge):
    inside = BeamPair.semicircles(0.5 * R)
    with pytest.raises(GeometryError):
        phase_via_interaction_energy(long_solenoid, *_legs(inside, 1e6, 33), electron_charge)
    a = trajectory_legs(BeamPair.semicircles(5 * R).path_left, 1e6, 33)
    b = trajectory_legs(BeamPair.semicircles(6 * R).path_right, 1e6, 33)
    with pytest.raises(GeometryError):
        phase_via_interaction_energy(long_solenoid, a, b, electron_charge)


def test_overlap_method_matches_potential_method(long_solenoid, electron_charge):
    beams = BeamPair.semicircles(5 * R)
    left, right = _legs(beams, 1e6, 33)
    cfg = QuadConfig(rtol=1e-6)
    pot = phase_via_interaction_energy(long_solenoid, left, right, electron_charge, cfg)
    ovl = phase_via_interaction_energy(long_solenoid, left, right, electron_charge, cfg,
                                       method="overlap")
    assert ovl.phase == pytest.approx(pot.phase, rel=1e-6)


def test_winding_twice_doubles_phase(solenoid, electron_charge):
    once = BeamPair.semicircles(5 * R)
    twice = BeamPair.semicircles(5 * R, extra_turns=1)
    assert twice.winding(solenoid) == -2
    a = phase_via_line_integral(solenoid, once, electron_charge)
    b = phase_via_line_integral(solenoid, twice, electron_charge)
    assert b.phase == pytest.approx(2 * a.phase, rel=1e-9)
    assert (phase_via_flux(solenoid, electron_charge, beams=twice).phase
            == 2 * phase_via_flux(solenoid, electron_charge, beams=once).phase)


@settings(max_examples=15, deadline=None)
@given(current=st.floats(-5.0, 5.0).filter(lambda c: abs(c) > 1e-3),
       charge=st.floats(-3.0, 3.0).filter(lambda c: abs(c) > 1e-3))
def test_linearity_in_current_and_charge(current, charge):
    spec = SolenoidSpec(R, 1000.0, 1.0)
    beams = BeamPair.semicircles(5 * R)
    base = phase_via_line_integral(spec, beams, QE).phase
    res = phase_via_line_integral(spec.scaled(current), beams, charge * QE).phase
    assert res == pytest.approx(current * charge * base, rel=1e-9)
    flux = phase_via_flux(spec.scaled(current), charge * QE, beams=beams).phase
    assert flux == pytest.approx(current * charge * phase_via_flux(spec, QE, beams=beams).phase,
                                 rel=1e-12)


def test_gauge_invariance_twenty_random_gauges(solenoid, beams, electron_charge):
    ref = phase_via_line_integral(solenoid, beams, electron_charge).phase
    rng = np.random.default_rng(7)
    for _ in range(20):
        chi = GaugeFunction.random(rng, scale=10 * total_flux(solenoid), length=5 * R)
        res = phase_via_line_integral(solenoid, beams, electron_charge, gauge=chi)
        assert abs(res.phase - ref) <= 1e-8 * abs(ref)


def test_gauge_changes_open_path_integral(solenoid, beams, electron_charge):
    # the open-path action does change; only the closed loop is protected
    chi = GaugeFunction.random(np.random.default_rng(3), scale=total_flux(solenoid), length=5 * R)
    from ablab.geomfields import apply_gauge, vector_potential
    from ablab.quadrature import line_integral
    A = vector_potential(solenoid)
    plain = line_integral(A, beams.path_left).value
    shifted = line_integral(apply_gauge(A, chi), beams.path_left).value
    end, start = beams.path_left.end, beams.path_left.start
    assert shifted - plain == pytest.approx(chi(end[None])[0] - chi(start[None])[0], rel=1e-8)


def test_beam_pair_validation(solenoid):
    a = BeamPair.semicircles(5 * R).path_left
    b = BeamPair.semicircles(6 * R).path_right
    with pytest.raises(GeometryError):
        BeamPair(a, b)
    with pytest.raises(InvalidSpecError):
        BeamPair.semicircles(-1.0)
    with pytest.raises(GeometryError):
        BeamPair.semicircles(0.5 * R).winding(solenoid)


def test_trajectory_validation():
    t = np.linspace(0, 1, 11)
    r = np.stack([t, 0 * t, 0 * t], axis=1)
    v = np.tile([1.0, 0, 0], (11, 1))
    Trajectory(t, r, v)
    with pytest.raises(InvalidSpecError):
        Trajectory(t, r, 1.05 * v)
    with pytest.raises(InvalidSpecError):
        Trajectory(t[::-1], r, v)
    with pytest.raises(InvalidSpecError):
        Trajectory(t[:2], r[:2], v[:2])


def test_phase_result_invariants():
    r = PhaseResult(-0.5, Route.FLUX)
    assert r.phase_mod_2pi == pytest.approx(2 * math.pi - 0.5)
    assert PhaseResult(-0.0, Route.FLUX).phase_mod_2pi == 0.0
    with pytest.raises(ValueError):
        PhaseResult(1.0, Route.FLUX, error_estimate=-1.0)
    with pytest.raises(ValueError):
        PhaseResult(math.nan, Route.FLUX)


def test_compare_routes():
    a = PhaseResult(1.0, Route.FLUX)
    b = PhaseResult(1.0 + 5e-5, Route.LINE_INTEGRAL)
    c = PhaseResult(1.0 + 5e-4, Route.ACTION)
    assert compare_routes([a, b]).agree
    assert not compare_routes([a, b, c]).agree
    zero = [PhaseResult(0.0, Route.FLUX), PhaseResult(0.0, Route.ACTION)]
    assert compare_routes(zero).max_rel_diff == 0.0


# Field-overlap identity


def _electron(rho, v_dir, q=-QE):
    return ElectronState([rho, 0.0, 0.0], 1e6 * np.asarray(v_dir, dtype=float), q)


def test_overlap_identity_azimuthal_velocity(long_solenoid):
    res = verify_eq7(long_solenoid, _electron(5 * R, [0, 1, 0]))
    assert res.rel_error <= 5e-3
    assert res.rhs != 0.0


def test_overlap_identity_radial_velocity_gives_zero(long_solenoid):
    res = verify_eq7(long_solenoid, _electron(5 * R, [1, 0, 0]))
    assert abs(res.rhs) <= res.abs_floor
    assert abs(res.lhs) <= res.abs_floor
    assert res.rel_error == 0.0


def test_overlap_identity_zero_charge(long_solenoid):
    res = verify_eq7(long_solenoid, _electron(5 * R, [0, 1, 0], q=0.0))
    assert res.lhs == 0.0 and res.rhs == 0.0


def test_overlap_identity_standoff(long_solenoid):
    with pytest.raises(GeometryError):
        verify_eq7(long_solenoid, _electron(1.05 * R, [0, 1, 0]))
    with pytest.raises(GeometryError):
        verify_eq7(long_solenoid, _electron(0.5 * R, [0, 1, 0]))


def test_overlap_identity_toroid(toroid):
    e = ElectronState([0.075, 0.0, 0.03], [0.0, 0.0, 1e6], -QE)
    res = verify_eq7(toroid, e)
    assert res.rel_error <= 5e-3


def test_overlap_approaches_infinite_solenoid_as_length_grows():
    e = _electron(5 * R, [0, 1, 0])
    inf = SolenoidSpec(R, 1000.0, 1.0)
    target = e.charge * (e.velocity @ a_field_analytic(inf, e.position))
    errs = []
    for ratio in (10, 20, 50, 100, 200):
        spec = SolenoidSpec(R, 1000.0, 1.0, length=ratio * R)
        errs.append(abs(interaction_energy(spec, e).value - target) / abs(target))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 2e-3


def test_overlap_identity_error_decreases_with_refinement(long_solenoid):
    e = _electron(5 * R, [0, 1, 0])
    errs = [verify_eq7(long_solenoid, e, QuadConfig(rtol=rt)).rel_error
            for rt in (1e-5, 1e-6, 1e-7)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-8
