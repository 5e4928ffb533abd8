"""Confined-flux sources: magnetic fields, vector potentials and gauge changes.

Three source kinds are supported:

* ``SolenoidSpec`` -- ideal solenoid (infinite or finite length).  A finite
  solenoid uses the sharp-boundary model: a uniform ``mu0 n I`` inside the
  cylinder and nothing outside.
* ``ToroidSpec`` -- rectangular-section toroid about the z axis, with
  ``B_phi = mu0 N I / (2 pi rho)`` inside.
* ``FluxLineSpec`` -- an infinitely thin flux tube along z.

All functions take positions as ``(3,)`` or ``(n, 3)`` arrays and return
fields with the same leading shape.  SI units throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy.constants import mu_0

from .errors import (GeometryError, InvalidSpecError, SingularityError,
                     UnsupportedGeometryError)
from .quadrature import Cylinder, QuadConfig, Segment, Torus, volume_integral

__all__ = [
    "SolenoidSpec",
    "ToroidSpec",
    "FluxLineSpec",
    "GaugeFunction",
    "FieldEstimate",
    "b_field",
    "a_field_analytic",
    "a_field_from_b",
    "enclosed_flux",
    "total_flux",
    "support_region",
    "apply_gauge",
    "vector_potential",
    "winding_number",
    "linking_number",
]


def _finite_vec(value, name):
    v = np.asarray(value, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise InvalidSpecError(name, "components must be finite")
    return tuple(float(c) for c in v)


@dataclass(frozen=True)
class SolenoidSpec:
    radius: float
    turns_per_length: float
    current: float
    length: float = math.inf
    axis: tuple = (0.0, 0.0, 1.0)
    center: tuple = (0.0, 0.0, 0.0)

    kind: ClassVar[str] = "solenoid"

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InvalidSpecError("radius", "must be a finite number > 0")
        if not (self.turns_per_length > 0 and math.isfinite(self.turns_per_length)):
            raise InvalidSpecError("turns_per_length", "must be a finite number > 0")
        if not math.isfinite(self.current):
            raise InvalidSpecError("current", "must be finite")
        if not self.length > 0:
            raise InvalidSpecError("length", "must be > 0 (or inf)")
        axis = _finite_vec(self.axis, "axis")
        if abs(math.hypot(*axis) - 1.0) > 1e-12:
            raise InvalidSpecError("axis", "must be a unit vector (|axis| = 1 within 1e-12)")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "center", _finite_vec(self.center, "center"))

    @property
    def infinite(self):
        return math.isinf(self.length)

    @property
    def b_inside(self):
        """Interior field magnitude ``mu0 n I`` (T)."""
        return mu_0 * self.turns_per_length * self.current

    def scaled(self, current):
        return SolenoidSpec(self.radius, self.turns_per_length, current, self.length,
                            self.axis, self.center)


@dataclass(frozen=True)
class ToroidSpec:
    inner_radius: float
    outer_radius: float
    height: float
    turns: int
    current: float

    kind: ClassVar[str] = "toroid"

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise InvalidSpecError("inner_radius", "need 0 < inner_radius < outer_radius")
        if not math.isfinite(self.outer_radius):
            raise InvalidSpecError("outer_radius", "must be finite")
        if not (self.height > 0 and math.isfinite(self.height)):
            raise InvalidSpecError("height", "must be a finite number > 0")
        if int(self.turns) != self.turns or self.turns < 1:
            raise InvalidSpecError("turns", "must be an integer >= 1")
        if not math.isfinite(self.current):
            raise InvalidSpecError("current", "must be finite")

    @property
    def inductance(self):
        """Self-inductance ``mu0 N^2 h ln(b/a) / 2 pi`` of the ideal winding (H)."""
        return (mu_0 * self.turns**2 * self.height
                * math.log(self.outer_radius / self.inner_radius) / (2 * math.pi))

    def scaled(self, current):
        return ToroidSpec(self.inner_radius, self.outer_radius, self.height, self.turns, current)


@dataclass(frozen=True)
class FluxLineSpec:
    flux: float
    position: tuple = (0.0, 0.0)

    kind: ClassVar[str] = "flux_line"

    def __post_init__(self):
        if not math.isfinite(self.flux):
            raise InvalidSpecError("flux", "must be finite")
        pos = np.asarray(self.position, dtype=float).reshape(2)
        if not np.all(np.isfinite(pos)):
            raise InvalidSpecError("position", "components must be finite")
        object.__setattr__(self, "position", (float(pos[0]), float(pos[1])))

    def scaled(self, flux):
        return FluxLineSpec(flux, self.position)


@dataclass(frozen=True)
class FieldEstimate:
    """Numerically obtained vector with an absolute error estimate (same units)."""

    value: np.ndarray
    error: float


def _points(r):
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 3:
        raise InvalidSpecError("r", "positions must have 3 components")
    if not np.all(np.isfinite(r)):
        raise InvalidSpecError("r", "positions must be finite")
    return r


def _axial(spec, r):
    """Cylindrical decomposition about the source axis: (perp vector, axial coord, axis)."""
    if spec.kind == "solenoid":
        axis = np.asarray(spec.axis)
        d = r - np.asarray(spec.center)
    elif spec.kind == "flux_line":
        axis = np.array([0.0, 0.0, 1.0])
        d = r - np.array([spec.position[0], spec.position[1], 0.0])
    else:
        axis = np.array([0.0, 0.0, 1.0])
        d = r
    z = d @ axis
    perp = d - np.multiply.outer(z, axis)
    return perp, z, axis


def total_flux(spec):
    """Magnetic flux carried by the source (Wb).

    Solenoid: ``mu0 n I pi R^2``; toroid: flux through one cross-section,
    ``mu0 N I h ln(b/a) / 2 pi``; flux line: its nominal flux.
    """
    if spec.kind == "solenoid":
        return spec.b_inside * math.pi * spec.radius**2
    if spec.kind == "toroid":
        return (mu_0 * spec.turns * spec.current * spec.height
                * math.log(spec.outer_radius / spec.inner_radius) / (2 * math.pi))
    return spec.flux


def support_region(spec, length=None):
    """Region carrying the source's field (cylinder or toroidal volume).

    ``length`` overrides the solenoid length, which is how a finite window of
    an infinite solenoid is selected.
    """
    if spec.kind == "solenoid":
        return Cylinder(spec.radius, spec.length if length is None else length,
                        center=spec.center, axis=spec.axis)
    if spec.kind == "toroid":
        return Torus(spec.inner_radius, spec.outer_radius, spec.height)
    raise UnsupportedGeometryError("a flux line has no finite-volume support")


def b_field(spec, r):
    """Magnetic field of ``spec`` at ``r`` (T).

    The field vanishes identically outside the confinement region of every
    source kind; on the flux-line core it is singular.

    Raises
    ------
    SingularityError
        If any point lies exactly on a flux line.
    """
    r = _points(r)
    perp, z, axis = _axial(spec, r)
    rho2 = np.einsum("...i,...i->...", perp, perp)
    if spec.kind == "solenoid":
        inside = rho2 < spec.radius**2
        if not spec.infinite:
            inside &= np.abs(z) < spec.length / 2
        return np.where(inside[..., None], spec.b_inside * axis, 0.0)
    if spec.kind == "toroid":
        rho = np.sqrt(rho2)
        inside = (rho > spec.inner_radius) & (rho < spec.outer_radius) & (np.abs(z) < spec.height / 2)
        phi_hat = np.stack([-r[..., 1], r[..., 0], np.zeros_like(rho)], axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            mag = mu_0 * spec.turns * spec.current / (2 * math.pi * rho2)
        return np.where(inside[..., None], mag[..., None] * phi_hat, 0.0)
    if np.any(rho2 == 0):
        raise SingularityError("b_field evaluated on the flux-line core")
    return np.zeros_like(r)


def a_field_analytic(spec, r):
    """Closed-form azimuthal vector potential (T m).

    Outside the flux ``A_phi = Phi / (2 pi rho)``; inside an infinite
    solenoid ``A_phi = mu0 n I rho / 2``.  The two agree at ``rho = R``.

    Raises
    ------
    UnsupportedGeometryError
        For finite solenoids and toroids (use ``a_field_from_b``).
    SingularityError
        On the flux-line core.
    """
    if spec.kind == "solenoid" and not spec.infinite or spec.kind == "toroid":
        raise UnsupportedGeometryError(f"no closed-form A for a {'finite ' if spec.kind == 'solenoid' else ''}{spec.kind}")
    r = _points(r)
    perp, _, axis = _axial(spec, r)
    rho2 = np.einsum("...i,...i->...", perp, perp)
    flux = total_flux(spec)
    # A = a(rho) * (axis x perp), |axis x perp| = rho
    if spec.kind == "flux_line":
        if np.any(rho2 == 0):
            raise SingularityError("vector potential of a flux line is singular on its core")
        coef = flux / (2 * math.pi * rho2)
    else:
        R2 = spec.radius**2
        with np.errstate(divide="ignore", invalid="ignore"):
            outside = flux / (2 * math.pi * np.where(rho2 > 0, rho2, 1.0))
        coef = np.where(rho2 < R2, spec.b_inside / 2, outside)
    return coef[..., None] * np.cross(axis, perp)


def _field_scale(spec):
    """Characteristic (B, length) used to nondimensionalize quadratures."""
    if spec.kind == "solenoid":
        return abs(spec.b_inside), spec.radius
    if spec.kind == "toroid":
        return (abs(mu_0 * spec.turns * spec.current / (2 * math.pi * spec.inner_radius)),
                spec.outer_radius - spec.inner_radius)
    raise UnsupportedGeometryError("flux lines have no volume field to integrate")


def a_field_from_b(spec, r, cfg=None):
    """Vector potential reconstructed from the field by volume quadrature.

    Evaluates ``A(r) = (1/4 pi) Int B(r') x (r - r') / |r - r'|^3 d^3r'`` over
    the support of ``B``.  The point must lie outside the support.  An
    infinite solenoid is accepted as well: the integrand decays like
    ``1/z^2`` and the axial direction is compactified.

    Returns
    -------
    FieldEstimate
        ``value`` has shape ``(3,)`` for one point, ``(n, 3)`` otherwise;
        ``error`` is the largest per-point estimate.

    Raises
    ------
    GeometryError
        If the point lies inside the source.
    ConvergenceError
        If the quadrature does not reach tolerance within ``cfg.max_depth``.
    """
    cfg = cfg or QuadConfig()
    r = _points(r)
    pts = np.atleast_2d(r)
    b0, ell = _field_scale(spec)
    region = support_region(spec)
    if np.any(region.contains(pts)):
        raise GeometryError("a_field_from_b requires the evaluation point outside the source")
    if b0 == 0:
        return FieldEstimate(np.zeros_like(r), 0.0)
    scale = b0 * ell
    out = np.empty_like(pts)
    err = 0.0
    for i, p in enumerate(pts):
        def integrand(rp, p=p):
            d = p - rp
            inv3 = np.einsum("ij,ij->i", d, d) ** -1.5
            return np.cross(b_field(spec, rp), d) * (inv3 / (4 * math.pi * scale))[:, None]

        res = volume_integral(integrand, region, cfg)
        out[i] = res.value * scale
        err = max(err, res.error * scale)
    return FieldEstimate(out.reshape(r.shape), err)


def vector_potential(spec, cfg=None):
    """Callable ``r -> A(r)``: closed form where available, else quadrature."""
    if spec.kind == "flux_line" or (spec.kind == "solenoid" and spec.infinite):
        return lambda r: a_field_analytic(spec, r)
    return lambda r: a_field_from_b(spec, r, cfg).value


# ---------------------------------------------------------------------------
# Loops and flux


def _chords(path, per_arc=256):
    """Fine polygonal approximation as consecutive point pairs (segments exact)."""
    pts = [path.start]
    for piece in path.pieces:
        if isinstance(piece, Segment):
            pts.append(piece.end)
        else:
            t = np.linspace(0, 1, per_arc + 1)[1:]
            pts.extend(piece.position(t))
    return np.asarray(pts)


def winding_number(loop, point, axis=(0.0, 0.0, 1.0)):
    """Signed number of turns of a closed path around the line through ``point`` along ``axis``."""
    if not loop.closed:
        raise GeometryError("winding number needs a closed path")
    axis = np.asarray(axis, dtype=float)
    pts = _chords(loop) - np.asarray(point, dtype=float)
    perp = pts - np.multiply.outer(pts @ axis, axis)
    a, b = perp[:-1], perp[1:]
    cross = np.cross(a, b) @ axis
    dot = np.einsum("ij,ij->i", a, b)
    if np.any((cross == 0) & (dot <= 0)):
        raise GeometryError("loop passes through the axis")
    total = np.arctan2(cross, dot).sum() / (2 * math.pi)
    w = round(total)
    if abs(total - w) > 1e-6:
        raise GeometryError("winding number is not an integer; path too coarse or not closed")
    return int(w)


def _check_outside(spec, loop, n=512):
    if spec.kind == "flux_line":
        return
    region = support_region(spec)
    u = np.concatenate([i + np.linspace(0, 1, n, endpoint=False) for i in range(len(loop))])
    if np.any(region.contains(loop.evaluate(u)[0])):
        raise GeometryError("loop intersects the source volume")


def linking_number(spec, loop):
    """Signed number of times ``loop`` links the confined flux of ``spec``.

    Counter-clockwise about the source axis (right-handed) counts positive;
    for the toroid this is the linking number with its core circle.

    Raises
    ------
    GeometryError
        If the loop is open or intersects the source volume.
    UnsupportedGeometryError
        If a loop around a finite solenoid leaves the slab spanned by its
        length (the sharp-boundary model has no topological flux there).
    """
    if not loop.closed:
        raise GeometryError("a closed loop is required")
    _check_outside(spec, loop)
    if spec.kind == "toroid":
        return _toroid_linking(spec, loop)
    if spec.kind == "solenoid":
        if not spec.infinite:
            _, z, _ = _axial(spec, _chords(loop))
            if np.any(np.abs(z) >= spec.length / 2):
                raise UnsupportedGeometryError("loop leaves the axial extent of the finite solenoid")
        return winding_number(loop, spec.center, spec.axis)
    return winding_number(loop, (*spec.position, 0.0))


def enclosed_flux(spec, loop):
    """Flux of ``spec`` linked by the closed path ``loop`` (Wb): ``w * Phi0``.

    See ``linking_number`` for the sign convention and errors.
    """
    return linking_number(spec, loop) * total_flux(spec)


def _toroid_linking(spec, loop):
    # signed crossings of the disk z = 0, rho < mid-radius, bounded by the core circle
    c = 0.5 * (spec.inner_radius + spec.outer_radius)
    pts = _chords(loop)
    z0, z1 = pts[:-1, 2], pts[1:, 2]
    up = (z0 <= 0) & (z1 > 0)
    down = (z1 <= 0) & (z0 > 0)
    cross = up | down
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(cross, -z0 / (z1 - z0), 0.0)
    hit = pts[:-1] + t[:, None] * (pts[1:] - pts[:-1])
    inner = np.hypot(hit[:, 0], hit[:, 1]) < c
    return int(np.sum(up & inner) - np.sum(down & inner))


# ---------------------------------------------------------------------------
# Gauge functions


@dataclass(frozen=True)
class GaugeFunction:
    """Polynomial scalar field ``chi(x, y, z) = sum c[i,j,k] x^i y^j z^k``, total degree <= 3."""

    coefficients: np.ndarray = field(default_factory=lambda: np.zeros((4, 4, 4)))

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (4, 4, 4):
            raise InvalidSpecError("coefficients", "expected a (4, 4, 4) array")
        if not np.all(np.isfinite(c)):
            raise InvalidSpecError("coefficients", "must be finite")
        i, j, k = np.indices(c.shape)
        if np.any(c[i + j + k > 3] != 0):
            raise InvalidSpecError("coefficients", "total degree must not exceed 3")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def random(cls, rng, scale=1.0, length=1.0, max_degree=3):
        """Random polynomial; a degree-d term is sized ``scale / length**d``."""
        i, j, k = np.indices((4, 4, 4))
        deg = i + j + k
        c = rng.standard_normal((4, 4, 4)) * scale / float(length) ** deg
        c[deg > max_degree] = 0.0
        return cls(c)

    def __call__(self, r):
        r = _points(r)
        return np.polynomial.polynomial.polyval3d(r[..., 0], r[..., 1], r[..., 2], self.coefficients)

    def gradient(self, r):
        r = _points(r)
        P = np.polynomial.polynomial
        x, y, z = r[..., 0], r[..., 1], r[..., 2]
        return np.stack([P.polyval3d(x, y, z, P.polyder(self.coefficients, axis=ax))
                         for ax in range(3)], axis=-1)


def apply_gauge(A, chi):
    """Gauge-transformed potential ``A + grad chi`` as a new field function."""
    def transformed(r):
        return np.asarray(A(r)) + chi.gradient(r)

    transformed.base = A
    transformed.gauge = chi
    return transformed

