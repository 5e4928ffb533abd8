import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import mu_0

from ablab.errors import ConvergenceError, GeometryError, InvalidSpecError
from ablab.geomfields import SolenoidSpec, a_field_analytic, b_field, support_region
from ablab.quadrature import (Arc, Box, Cylinder, Path, QuadConfig, Segment, Torus, integrate_box,
                              line_integral, volume_integral)

from conftest import PHI0, square_loop


def grad_xyz(r):
    x, y, z = r[:, 0], r[:, 1], r[:, 2]
    return np.stack([y * z, x * z, x * y], axis=-1)


class TestLineIntegral:
    def test_gradient_field_closed_loop_vanishes(self):
        loop = Path.polyline([[0, 0, 0], [1, 0.3, 0.2], [0.4, 1.1, -0.5], [-0.2, 0.5, 0.9]], closed=True)
        res = line_integral(grad_xyz, loop)
        assert abs(res.value) < 1e-10

    def test_gradient_field_around_circle(self):
        res = line_integral(grad_xyz, Path.circle((0.1, -0.2, 0.3), 0.7, turns=2))
        assert abs(res.value) < 1e-10

    def test_constant_field_on_segment_exact(self):
        c = np.array([0.3, -1.2, 2.5])
        p, q = np.array([0.1, 0.2, 0.3]), np.array([1.7, -0.4, 2.2])
        res = line_integral(lambda r: np.broadcast_to(c, r.shape), Path.polyline([p, q]))
        assert res.value == pytest.approx(c @ (q - p), rel=1e-15, abs=1e-15)

    def test_solenoid_potential_square_loop_gives_flux(self, solenoid):
        res = line_integral(lambda r: a_field_analytic(solenoid, r), square_loop(4 * 0.01),
                            QuadConfig(rtol=1e-10))
        assert res.value == pytest.approx(PHI0, rel=1e-4)
        assert res.value == pytest.approx(mu_0 * 1000 * math.pi * 1e-4, rel=1e-6)

    def test_reversal_flips_sign(self, solenoid):
        loop = square_loop(0.04)
        A = lambda r: a_field_analytic(solenoid, r)
        fwd = line_integral(A, loop, QuadConfig(rtol=1e-10)).value
        bwd = line_integral(A, loop.reversed(), QuadConfig(rtol=1e-10)).value
        assert bwd == pytest.approx(-fwd, rel=1e-12)

    def test_nonconvergence_carries_estimate(self):
        f = lambda u: 1.0 / np.sqrt(u[:, 0])
        with pytest.raises(ConvergenceError) as info:
            integrate_box(f, np.zeros(1), np.ones(1), QuadConfig(rtol=1e-12, max_depth=3))
        assert info.value.estimate == pytest.approx(2.0, rel=0.1)
        assert info.value.error > 0

    def test_non_finite_integrand_rejected(self):
        with pytest.raises(ValueError):
            integrate_box(lambda u: np.full(len(u), np.nan), np.zeros(1), np.ones(1))


class TestVolumeIntegral:
    def test_cylinder_volume(self):
        res = volume_integral(lambda p: np.ones(len(p)), Cylinder(1.0, 1.0), QuadConfig(rtol=1e-10))
        assert res.value == pytest.approx(math.pi, abs=1e-8)

    def test_torus_volume(self):
        res = volume_integral(lambda p: np.ones(len(p)), Torus(1.0, 2.0, 1.0), QuadConfig(rtol=1e-10))
        assert res.value == pytest.approx(3 * math.pi, abs=1e-8)

    def test_box_polynomial(self):
        f = lambda p: p[:, 0] ** 2 * p[:, 1] + p[:, 2]
        res = volume_integral(f, Box((0, 0, 0), (1, 2, 3)))
        # int x^2 y + z over [0,1]x[0,2]x[0,3] = (1/3)(2)(3) + (1)(2)(9/2)
        assert res.value == pytest.approx(2.0 + 9.0, rel=1e-12)

    def test_solenoid_field_energy(self):
        spec = SolenoidSpec(radius=0.01, turns_per_length=1000, current=1.0, length=1.0)
        dens = lambda p: np.einsum("ij,ij->i", b_field(spec, p), b_field(spec, p)) / (2 * mu_0)
        res = volume_integral(dens, support_region(spec), QuadConfig(atol=1e-20))
        assert res.value == pytest.approx(1.9739e-4, rel=1e-4)

    def test_gaussian_converges(self):
        f = lambda p: np.exp(-np.sum(p * p, axis=1))
        res = volume_integral(f, Box((-4, -4, -4), (4, 4, 4)), QuadConfig(rtol=1e-8))
        assert res.value == pytest.approx((math.sqrt(math.pi) * math.erf(4.0)) ** 3, rel=1e-8)
        assert res.error <= 1e-8 * res.value

    def test_bit_reproducible(self):
        f = lambda p: np.exp(-p[:, 0]) * np.cos(3 * p[:, 1]) / (1 + p[:, 2] ** 2)
        a = volume_integral(f, Torus(0.5, 1.5, 0.4))
        b = volume_integral(f, Torus(0.5, 1.5, 0.4))
        assert a.value == b.value and a.error == b.error

    def test_refinement_monotone_error(self):
        f = lambda u: np.exp(np.sin(5 * u[:, 0]) * u[:, 1])
        errs = []
        for depth in (2, 4, 8, 16):
            try:
                res = integrate_box(f, np.zeros(2), np.ones(2), QuadConfig(rtol=1e-14, max_depth=depth))
                errs.append(res.error)
            except ConvergenceError as exc:
                errs.append(exc.error)
        assert all(b <= a for a, b in zip(errs, errs[1:]))


class TestPaths:
    def test_join_tolerance(self):
        with pytest.raises(GeometryError):
            Path([Segment((0, 0, 0), (1, 0, 0)), Segment((1, 1e-9, 0), (2, 0, 0))])

    def test_closed_flag(self):
        assert square_loop(1.0).closed
        assert not Path.polyline([[0, 0, 0], [1, 0, 0]]).closed

    def test_arc_length(self):
        assert Arc((0, 0, 0), 2.0, 0.0, math.pi).length == pytest.approx(2 * math.pi)

    def test_config_validation(self):
        with pytest.raises(InvalidSpecError):
            QuadConfig(rtol=0)
        with pytest.raises(InvalidSpecError):
            QuadConfig(max_depth=0)


smooth_coeffs = st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3)


@settings(max_examples=25, deadline=None)
@given(a=smooth_coeffs, b=smooth_coeffs, alpha=st.floats(-5, 5), beta=st.floats(-5, 5))
def test_linearity(a, b, alpha, beta):
    f = lambda u: np.cos(a[0] * u[:, 0]) + a[1] * u[:, 0] ** 2 + a[2]
    g = lambda u: np.sin(b[0] * u[:, 0]) + b[1] * u[:, 0] + b[2]
    cfg = QuadConfig(rtol=1e-12, atol=1e-14)
    lo, hi = np.zeros(1), np.ones(1)
    lhs = integrate_box(lambda u: alpha * f(u) + beta * g(u), lo, hi, cfg).value
    rhs = alpha * integrate_box(f, lo, hi, cfg).value + beta * integrate_box(g, lo, hi, cfg).value
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-11)


@settings(max_examples=25, deadline=None)
@given(pts=st.lists(st.tuples(*[st.floats(-2, 2)] * 3), min_size=2, max_size=6, unique=True),
       k=st.tuples(*[st.floats(-2, 2)] * 3))
def test_orientation_antisymmetry(pts, k):
    v = np.array(pts)
    if np.any(np.linalg.norm(np.diff(v, axis=0), axis=1) < 1e-3):
        return
    path = Path.polyline(v)
    F = lambda r: np.stack([np.sin(k[0] * r[:, 1]), np.cos(k[1] * r[:, 2]), r[:, 0] * k[2]], axis=-1)
    fwd = line_integral(F, path, QuadConfig(rtol=1e-12)).value
    bwd = line_integral(F, path.reversed(), QuadConfig(rtol=1e-12)).value
    assert bwd == pytest.approx(-fwd, rel=1e-10, abs=1e-12)
