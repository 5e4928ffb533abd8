import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import mu_0

from ablab.errors import (ConvergenceError, GeometryError, InvalidSpecError, SingularityError,
                          UnsupportedGeometryError)
from ablab.geomfields import (FluxLineSpec, GaugeFunction, SolenoidSpec, ToroidSpec, a_field_analytic,
                              a_field_from_b, apply_gauge, b_field, enclosed_flux, linking_number,
                              total_flux)
from ablab.quadrature import Path, QuadConfig, line_integral

from conftest import PHI0, R, square_loop


def winding_stack_axis_field(n, current, radius, length, z):
    """On-axis field of ``n * length`` discrete circular turns (Biot-Savart per loop)."""
    turns = int(round(n * length))
    zk = (np.arange(turns) + 0.5) / n - length / 2
    return np.sum(mu_0 * current * radius**2 / (2 * (radius**2 + (z - zk) ** 2) ** 1.5))


class TestBField:
    def test_axis_value(self, solenoid):
        B = b_field(solenoid, [0.0, 0.0, 0.3])
        assert B[2] == pytest.approx(1.2566e-3, rel=1e-4)
        assert B[0] == B[1] == 0.0

    def test_axis_value_matches_winding_stack(self, solenoid):
        stack = winding_stack_axis_field(1000, 1.0, R, 50 * R, 0.0)
        assert b_field(solenoid, [0, 0, 0])[2] == pytest.approx(stack, rel=1e-3)

    def test_zero_outside(self, solenoid):
        assert np.all(b_field(solenoid, [2 * R, 0.0, 0.0]) == 0.0)

    def test_zero_current(self):
        spec = SolenoidSpec(radius=R, turns_per_length=1000, current=0.0)
        pts = np.random.default_rng(1).uniform(-0.05, 0.05, (50, 3))
        assert np.all(b_field(spec, pts) == 0.0)

    def test_toroid_inside_and_outside(self, toroid):
        rho = 0.07
        B = b_field(toroid, [rho, 0.0, 0.0])
        assert B[1] == pytest.approx(mu_0 * 500 * 2.0 / (2 * math.pi * rho), rel=1e-14)
        assert np.all(b_field(toroid, [[0.03, 0, 0], [0.12, 0, 0], [0.07, 0, 0.011]]) == 0.0)

    def test_flux_line_core_singular(self):
        spec = FluxLineSpec(flux=1e-7)
        with pytest.raises(SingularityError):
            b_field(spec, [0.0, 0.0, 1.0])
        assert np.all(b_field(spec, [1.0, 0.0, 0.0]) == 0.0)


class TestAnalyticPotential:
    def test_exterior_value(self, solenoid):
        A = a_field_analytic(solenoid, [0.02, 0.0, 0.0])
        assert A[1] == pytest.approx(3.1416e-6, rel=1e-4)
        assert total_flux(solenoid) == pytest.approx(PHI0, rel=1e-4)

    def test_axis_is_zero(self, solenoid):
        assert np.all(a_field_analytic(solenoid, [0.0, 0.0, 5.0]) == 0.0)

    def test_zero_flux_line(self):
        pts = np.random.default_rng(2).normal(size=(20, 3))
        assert np.all(a_field_analytic(FluxLineSpec(flux=0.0), pts) == 0.0)

    def test_continuity_at_radius(self, solenoid):
        a_in = a_field_analytic(solenoid, [R * (1 - 1e-15), 0, 0])[1]
        a_out = a_field_analytic(solenoid, [R * (1 + 1e-15), 0, 0])[1]
        assert abs(a_in - a_out) <= 1e-12 * abs(a_out)

    def test_flux_line_core_singular(self):
        with pytest.raises(SingularityError):
            a_field_analytic(FluxLineSpec(flux=1.0), [0.0, 0.0, 0.0])

    def test_unsupported_kinds(self, long_solenoid, toroid):
        with pytest.raises(UnsupportedGeometryError):
            a_field_analytic(long_solenoid, [0.05, 0, 0])
        with pytest.raises(UnsupportedGeometryError):
            a_field_analytic(toroid, [0.2, 0, 0])


class TestReconstructedPotential:
    def test_long_solenoid_limit(self):
        spec = SolenoidSpec(radius=R, turns_per_length=1000, current=1.0, length=50 * R)
        inf = SolenoidSpec(radius=R, turns_per_length=1000, current=1.0)
        A = a_field_from_b(spec, [2 * R, 0.0, 0.0])
        exact = a_field_analytic(inf, [2 * R, 0.0, 0.0])[1]
        assert A.value[1] == pytest.approx(exact, rel=1e-2)
        assert A.error >= 0

    def test_improves_with_length(self):
        inf = SolenoidSpec(radius=R, turns_per_length=1000, current=1.0)
        exact = a_field_analytic(inf, [5 * R, 0, 0])[1]
        errs = [abs(a_field_from_b(SolenoidSpec(R, 1000, 1.0, L * R), [5 * R, 0, 0]).value[1] - exact)
                for L in (50, 100, 200)]
        assert errs[0] > errs[1] > errs[2]

    def test_infinite_solenoid_matches_closed_form(self, solenoid):
        A = a_field_from_b(solenoid, [3 * R, 0, 0], QuadConfig(rtol=1e-8))
        assert A.value[1] == pytest.approx(a_field_analytic(solenoid, [3 * R, 0, 0])[1], rel=1e-7)

    def test_far_axis_vanishes(self, long_solenoid):
        A = a_field_from_b(long_solenoid, [0.0, 0.0, 2.0])
        assert np.linalg.norm(A.value) < 1e-12 * long_solenoid.b_inside * R

    def test_zero_current(self):
        spec = SolenoidSpec(radius=R, turns_per_length=1000, current=0.0, length=1.0)
        assert np.all(a_field_from_b(spec, [0.05, 0, 0]).value == 0.0)

    def test_inside_rejected(self, long_solenoid):
        with pytest.raises(GeometryError):
            a_field_from_b(long_solenoid, [0.5 * R, 0, 0])

    def test_nonconvergence(self, long_solenoid):
        with pytest.raises(ConvergenceError) as info:
            a_field_from_b(long_solenoid, [1.001 * R, 0, 0], QuadConfig(rtol=1e-12, max_depth=2))
        assert info.value.estimate is not None


class TestEnclosedFlux:
    def test_square_loop(self, solenoid):
        assert enclosed_flux(solenoid, square_loop(4 * R)) == pytest.approx(3.9478e-7, rel=1e-4)

    def test_not_encircling(self, solenoid):
        loop = Path.polyline([[3 * R, 0, 0], [6 * R, 0, 0], [6 * R, 3 * R, 0], [3 * R, 3 * R, 0]], closed=True)
        assert enclosed_flux(solenoid, loop) == 0.0

    def test_reverse(self, solenoid):
        assert enclosed_flux(solenoid, square_loop(4 * R).reversed()) == -total_flux(solenoid)

    def test_winding_additive(self, solenoid):
        once = enclosed_flux(solenoid, Path.circle((0, 0, 0), 3 * R, turns=1))
        assert enclosed_flux(solenoid, Path.circle((0, 0, 0), 3 * R, turns=3)) == 3 * once
        assert enclosed_flux(solenoid, Path.circle((0, 0, 0), 3 * R, turns=-2)) == -2 * once

    def test_intersecting_loop_rejected(self, solenoid):
        with pytest.raises(GeometryError):
            enclosed_flux(solenoid, square_loop(0.5 * R))

    def test_open_loop_rejected(self, solenoid):
        with pytest.raises(GeometryError):
            enclosed_flux(solenoid, Path.polyline([[2 * R, 0, 0], [0, 2 * R, 0]]))

    def test_toroid_linking(self, toroid):
        # loop threading the toroid cross-section in the xz plane
        c = 0.075
        loop = Path.polyline([[c - 0.04, 0, -0.03], [c + 0.04, 0, -0.03], [c + 0.04, 0, 0.03],
                              [c - 0.04, 0, 0.03]], closed=True)
        w = linking_number(toroid, loop)
        assert abs(w) == 1
        assert enclosed_flux(toroid, loop) == w * total_flux(toroid)
        assert enclosed_flux(toroid, square_loop(0.2, z=0.05)) == 0.0


class TestGauge:
    def test_linear_gauge_loop_exact(self, solenoid):
        c = np.zeros((4, 4, 4))
        c[1, 0, 0], c[0, 1, 0], c[0, 0, 1] = 2e-6, -3e-6, 5e-7
        A = lambda r: a_field_analytic(solenoid, r)
        A2 = apply_gauge(A, GaugeFunction(c))
        cfg = QuadConfig(rtol=1e-12)
        loop = square_loop(4 * R)
        assert line_integral(A2, loop, cfg).value == pytest.approx(line_integral(A, loop, cfg).value, rel=1e-12)

    def test_zero_gauge_identity(self, solenoid):
        A = lambda r: a_field_analytic(solenoid, r)
        pts = np.random.default_rng(3).uniform(0.02, 0.05, (10, 3))
        assert np.array_equal(apply_gauge(A, GaugeFunction())(pts), A(pts))

    def test_quadratic_gauge_curl_unchanged(self, solenoid):
        c = np.zeros((4, 4, 4))
        c[2, 0, 0], c[1, 1, 0], c[0, 1, 1], c[0, 0, 2] = 3e-4, -2e-4, 1e-4, 5e-5
        A = lambda r: a_field_analytic(solenoid, r)
        A2 = apply_gauge(A, GaugeFunction(c))
        h = 1e-4

        def curl(F, p):
            J = np.empty((3, 3))
            for k in range(3):
                d = np.zeros(3)
                d[k] = h
                J[:, k] = (F(p + d) - F(p - d)) / (2 * h)
            return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])

        for p in np.random.default_rng(4).uniform(0.02, 0.05, (10, 3)):
            assert np.max(np.abs(curl(A2, p) - curl(A, p))) < 1e-8

    def test_degree_limit(self):
        c = np.zeros((4, 4, 4))
        c[2, 2, 0] = 1.0
        with pytest.raises(InvalidSpecError):
            GaugeFunction(c)


def test_spec_validation():
    with pytest.raises(InvalidSpecError):
        SolenoidSpec(radius=0.0, turns_per_length=1, current=1)
    with pytest.raises(InvalidSpecError):
        SolenoidSpec(radius=1.0, turns_per_length=1, current=1, axis=(0, 0, 1.1))
    with pytest.raises(InvalidSpecError):
        ToroidSpec(inner_radius=0.2, outer_radius=0.1, height=1, turns=1, current=1)
    with pytest.raises(InvalidSpecError):
        ToroidSpec(inner_radius=0.1, outer_radius=0.2, height=1, turns=0, current=1)


exterior = st.tuples(st.floats(1.0001, 50), st.floats(0, 2 * math.pi), st.floats(-10, 10))


@settings(max_examples=60, deadline=None)
@given(p=exterior)
def test_confinement(p):
    rho, phi, z = p
    spec = SolenoidSpec(radius=1.0, turns_per_length=10, current=3.0)
    r = [rho * math.cos(phi), rho * math.sin(phi), z]
    assert np.all(b_field(spec, r) == 0.0)
    tor = ToroidSpec(inner_radius=1.0, outer_radius=2.0, height=0.5, turns=10, current=1.0)
    r2 = [(rho + 1.0) * math.cos(phi), (rho + 1.0) * math.sin(phi), z] if abs(z) < 0.25 else r
    assert np.all(b_field(tor, r2) == 0.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), half=st.floats(1.5, 6.0), dx=st.floats(-0.4, 0.4))
def test_gauge_invariance_closed_loops(seed, half, dx):
    spec = SolenoidSpec(radius=1.0, turns_per_length=1.0, current=1.0)
    chi = GaugeFunction.random(np.random.default_rng(seed), scale=total_flux(spec), length=half)
    A = lambda r: a_field_analytic(spec, r)
    loop = Path.polyline([[-half + dx, -half, 0.1], [half, -half + dx, -0.2], [half, half, 0.3],
                          [-half, half, 0.0]], closed=True)
    cfg = QuadConfig(rtol=1e-12)
    a = line_integral(A, loop, cfg).value
    b = line_integral(apply_gauge(A, chi), loop, cfg).value
    assert b == pytest.approx(a, rel=1e-8)
