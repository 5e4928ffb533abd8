"""Magnetic energy bookkeeping and the electromagnetic energy balance.

Covers the three-term split of the total magnetic energy of a source plus a
moving electron, the two equivalent ways of computing stored energy (from
current and potential, or from the field alone) on an ideal toroid, and a
finite-difference check of local energy conservation on sampled fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import epsilon_0, mu_0

from .errors import GeometryError, InvalidSpecError, ShapeError, SingularityError, UnsupportedGeometryError
from .geomfields import _field_scale, b_field, support_region
from .quadrature import Path, QuadConfig, integrate_box, line_integral, volume_integral

__all__ = [
    "ElectronState",
    "Estimate",
    "EnergyBreakdown",
    "FieldSnapshotGrid",
    "PoyntingResidual",
    "b_field_of_moving_charge",
    "interaction_energy",
    "energy_decomposition",
    "energy_from_current",
    "energy_from_field",
    "radial_gauge_potential",
    "poynting_residual",
    "plane_wave_snapshots",
    "static_field_snapshots",
    "read_grid_file",
    "write_grid_file",
]


@dataclass(frozen=True)
class ElectronState:
    """Point charge with position (m), velocity (m/s) and charge (C)."""

    position: np.ndarray
    velocity: np.ndarray
    charge: float

    def __post_init__(self):
        for name in ("position", "velocity"):
            v = np.array(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(v)):
                raise InvalidSpecError(name, "components must be finite")
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if not math.isfinite(self.charge):
            raise InvalidSpecError("charge", "must be finite")
        if np.linalg.norm(self.velocity) >= 0.1 * SPEED_OF_LIGHT:
            raise InvalidSpecError("velocity", "|v| must stay below 0.1 c for the quasi-static field model")


@dataclass(frozen=True)
class Estimate:
    """A computed quantity with its absolute error estimate."""

    value: float
    error: float


def b_field_of_moving_charge(e, r):
    """Quasi-static field ``(mu0 q / 4 pi) v x (r - r_e) / |r - r_e|^3`` (T)."""
    r = np.asarray(r, dtype=float)
    d = r - e.position
    dist2 = np.einsum("...i,...i->...", d, d)
    if np.any(dist2 == 0):
        raise SingularityError("field of a point charge evaluated at the charge")
    k = mu_0 * e.charge / (4 * math.pi)
    return k * np.cross(e.velocity, d) * (dist2 ** -1.5)[..., None]


def _interaction_scale(spec, e):
    b0, ell = _field_scale(spec)
    return abs(e.charge) * np.linalg.norm(e.velocity) * b0 * ell


def interaction_energy(spec, e, cfg=None):
    """Cross term ``(1/mu0) Int B1 . B2 d^3r`` between source and electron fields (J).

    The integral runs over the support of ``B1`` only; ``B1`` vanishes
    elsewhere, so the truncation is exact.  For an infinite solenoid the
    axial direction is compactified.

    Raises
    ------
    GeometryError
        If the electron sits inside the source.
    UnsupportedGeometryError
        For a flux line (no volume support).
    """
    cfg = cfg or QuadConfig()
    region = support_region(spec)
    if region.contains(e.position):
        raise GeometryError("electron inside the source volume")
    scale = _interaction_scale(spec, e)
    if scale == 0:
        return Estimate(0.0, 0.0)

    def integrand(p):
        b1 = b_field(spec, p)
        b2 = b_field_of_moving_charge(e, p)
        return np.einsum("ij,ij->i", b1, b2) / (mu_0 * scale)

    res = volume_integral(integrand, region, cfg)
    return Estimate(res.value * scale, res.error * scale)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Three-term magnetic energy split (J) over ``region``.

    ``u2`` excludes a ball of radius ``core_excision_radius`` around the
    electron, where the point-charge self-energy diverges.  ``u_int`` is
    taken over the source support and does not depend on ``region``.
    """

    u1: float
    u2: float
    u_int: float
    u1_error: float
    u2_error: float
    u_int_error: float
    region: object
    core_excision_radius: float

    @property
    def total(self):
        return self.u1 + self.u2 + self.u_int


def _fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = math.pi * (1 + 5**0.5) * i
    s = np.sqrt(1 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


def _self_energy(e, region, core, cfg):
    speed = np.linalg.norm(e.velocity)
    if speed == 0 or e.charge == 0:
        return Estimate(0.0, 0.0)
    k2 = (mu_0 * e.charge / (4 * math.pi)) ** 2 / (2 * mu_0)
    scale = k2 * speed**2 / core

    near = region.contains(e.position)
    if not near:
        dirs = _fibonacci_sphere(4096)
        near = any(np.any((s1 > s0) & (s0 < core)) for s0, s1 in region.ray_intervals(e.position, dirs))
    if not near:
        def integrand(p):
            b2 = b_field_of_moving_charge(e, p)
            return np.einsum("ij,ij->i", b2, b2) / (2 * mu_0 * scale)

        res = volume_integral(integrand, region, cfg)
        return Estimate(res.value * scale, res.error * scale)

    # |B2|^2 = k v^2 sin^2 / s^4, so the radial integral along each ray is analytic
    def angular(u):
        theta = math.pi * u[:, 0]
        phi = 2 * math.pi * u[:, 1]
        st = np.sin(theta)
        dirs = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
        vxn = np.cross(e.velocity, dirs)
        radial = np.zeros(len(u))
        for s0, s1 in region.ray_intervals(e.position, dirs):
            a = np.maximum(s0, core)
            radial += np.where(s1 > a, 1.0 / a - 1.0 / np.where(s1 > a, s1, 1.0), 0.0)
        val = k2 * np.einsum("ij,ij->i", vxn, vxn) * radial * st * (2 * math.pi * math.pi)
        return val / scale

    res = integrate_box(angular, np.zeros(2), np.ones(2), cfg)
    return Estimate(res.value * scale, res.error * scale)


def energy_decomposition(spec, e, region=None, core_excision=1e-6, cfg=None):
    """Split the magnetic energy of source + electron into self and cross terms.

    Parameters
    ----------
    spec : SolenoidSpec or ToroidSpec
    e : ElectronState
        Must lie outside the source.
    region : Cylinder, Torus or Box, optional
        Domain for the self-energy terms.  Defaults to the source support;
        an infinite solenoid defaults to a window of length ``100 R``.
    core_excision : float
        Radius (m) of the ball around the electron removed from ``u2``.

    Returns
    -------
    EnergyBreakdown
    """
    cfg = cfg or QuadConfig()
    if not core_excision > 0:
        raise InvalidSpecError("core_excision", "must be > 0")
    default_region = region is None
    if default_region:
        if spec.kind == "solenoid" and spec.infinite:
            region = support_region(spec, length=100 * spec.radius)
        else:
            region = support_region(spec)

    u_int = interaction_energy(spec, e, cfg)

    b0, _ = _field_scale(spec)
    if b0 == 0:
        u1 = Estimate(0.0, 0.0)
    else:
        # integrate over the source support (natural coordinates, smooth integrand)
        # and mask by the region; exact and fast when the region covers the support
        if spec.kind == "solenoid" and spec.infinite:
            support = support_region(spec, length=100 * spec.radius) if default_region else support_region(spec)
        else:
            support = support_region(spec)
        s1 = b0 * b0 / (2 * mu_0) * min(region.volume, support.volume)

        def dens1(p):
            b = b_field(spec, p)
            inside = 1.0 if default_region else region.contains(p)
            return inside * np.einsum("ij,ij->i", b, b) / (2 * mu_0 * s1)

        res = volume_integral(dens1, support, cfg)
        u1 = Estimate(res.value * s1, res.error * s1)

    u2 = _self_energy(e, region, core_excision, cfg)
    return EnergyBreakdown(u1.value, u2.value, u_int.value, u1.error, u2.error, u_int.error,
                           region, float(core_excision))


# ---------------------------------------------------------------------------
# Toroid: energy from current and potential vs. from the field


def _require_toroid(spec):
    if spec.kind != "toroid":
        raise UnsupportedGeometryError("dual energy formulas are implemented for the toroid")


def radial_gauge_potential(spec, r, cfg=None):
    """Axial vector potential ``A_z = -Int_0^rho B_phi(rho', z) drho'`` of a toroid (T m).

    This potential satisfies ``curl A = B`` everywhere (the jump across the
    end planes is purely normal and carries no curl).  It is obtained by
    integrating ``z x B`` along the radial segment from the axis, with
    breakpoints at the winding radii.
    """
    _require_toroid(spec)
    cfg = cfg or QuadConfig(rtol=1e-10)
    pts = np.atleast_2d(np.asarray(r, dtype=float))
    zhat = np.array([0.0, 0.0, 1.0])
    out = np.zeros_like(pts)

    def integrand(p):
        return np.cross(zhat, b_field(spec, p))

    for i, p in enumerate(pts):
        rho = math.hypot(p[0], p[1])
        if rho == 0:
            continue
        u = p[:2] / rho
        radii = [0.0] + [x for x in (spec.inner_radius, spec.outer_radius) if x < rho] + [rho]
        verts = np.array([[x * u[0], x * u[1], p[2]] for x in radii])
        keep = np.concatenate([[True], np.diff(radii) > 0])
        res = line_integral(integrand, Path.polyline(verts[keep]), cfg)
        out[i, 2] = res.value
    return out.reshape(np.shape(r))


def energy_from_current(spec, cfg=None, gauge=None):
    """Stored energy ``(1/2) Int j . A dV`` of the ideal toroidal winding (J).

    The winding is an azimuthally uniform current sheet: ``+NI/(2 pi a)`` up
    the inner wall, outward across the top, down the outer wall and inward
    across the bottom.  ``A`` is the radial-gauge potential; an optional
    ``GaugeFunction`` is added to it to exhibit gauge independence.
    """
    _require_toroid(spec)
    cfg = cfg or QuadConfig(rtol=1e-8)
    if spec.current == 0:
        return Estimate(0.0, 0.0)
    a, b, h = spec.inner_radius, spec.outer_radius, spec.height
    NI = spec.turns * spec.current
    scale = 0.5 * spec.inductance * spec.current**2
    line_cfg = QuadConfig(rtol=cfg.rtol * 1e-2, atol=cfg.atol, max_depth=cfg.max_depth, order=cfg.order)

    def potential(p):
        A = radial_gauge_potential(spec, p, line_cfg)
        return A if gauge is None else A + gauge.gradient(p)

    def wall(radius, sign):
        def f(u):
            phi = 2 * math.pi * u[:, 0]
            z = h * (u[:, 1] - 0.5)
            p = np.stack([radius * np.cos(phi), radius * np.sin(phi), z], axis=-1)
            K = sign * NI / (2 * math.pi * radius)
            # K along z times area element 2 pi radius h
            return 0.5 * K * potential(p)[:, 2] * (2 * math.pi * radius * h) / scale
        return f

    def cap(zc, sign):
        def f(u):
            phi = 2 * math.pi * u[:, 0]
            rho = a + (b - a) * u[:, 1]
            rhat = np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=-1)
            p = np.stack([rho * rhat[:, 0], rho * rhat[:, 1], np.full_like(rho, zc)], axis=-1)
            K = sign * NI / (2 * math.pi * rho)
            KA = K * np.einsum("ij,ij->i", rhat, potential(p))
            return 0.5 * KA * (2 * math.pi * (b - a) * rho) / scale
        return f

    faces = [wall(a, +1.0), wall(b, -1.0), cap(h / 2, +1.0), cap(-h / 2, -1.0)]
    value = error = 0.0
    for face in faces:
        res = integrate_box(face, np.zeros(2), np.ones(2), cfg)
        value += res.value
        error += res.error
    return Estimate(value * scale, error * scale)


def energy_from_field(spec, cfg=None):
    """Stored energy ``(1/2 mu0) Int B . B dV`` over the toroid interior (J)."""
    _require_toroid(spec)
    cfg = cfg or QuadConfig(rtol=1e-8)
    if spec.current == 0:
        return Estimate(0.0, 0.0)
    scale = 0.5 * spec.inductance * spec.current**2

    def density(p):
        B = b_field(spec, p)
        return np.einsum("ij,ij->i", B, B) / (2 * mu_0 * scale)

    res = volume_integral(density, support_region(spec), cfg)
    return Estimate(res.value * scale, res.error * scale)


# ---------------------------------------------------------------------------
# Local energy conservation on sampled fields


@dataclass(frozen=True)
class FieldSnapshotGrid:
    """E (V/m), B (T) and j (A/m^2) on a uniform grid at times t and t + dt.

    Each field array has shape ``(2, nx, ny, nz, 3)``: snapshot, grid index,
    component.
    """

    E: np.ndarray
    B: np.ndarray
    j: np.ndarray
    h: float
    dt: float

    def __post_init__(self):
        shapes = {name: np.shape(getattr(self, name)) for name in ("E", "B", "j")}
        ref = shapes["E"]
        if len(ref) != 5 or ref[0] != 2 or ref[-1] != 3:
            raise ShapeError(f"E must have shape (2, nx, ny, nz, 3), got {ref}")
        for name, shp in shapes.items():
            if shp != ref:
                raise ShapeError(f"{name} has shape {shp}, expected {ref}")
        if min(ref[1:4]) < 3:
            raise ShapeError("need at least 3 points per axis for one interior cell")
        if not (self.h > 0 and self.dt > 0):
            raise InvalidSpecError("h", "spacing and dt must be > 0")

    @property
    def shape(self):
        return np.shape(self.E)[1:4]


@dataclass(frozen=True)
class PoyntingResidual:
    """Per-interior-cell residual of ``du/dt + div S + E . j`` (W/m^3)."""

    residual: np.ndarray
    max_abs: float
    l2_norm: float
    scale: float

    @property
    def relative_max(self):
        return self.max_abs / self.scale if self.scale > 0 else 0.0


def _energy_density(E, B):
    return 0.5 * epsilon_0 * np.einsum("...i,...i->...", E, E) + np.einsum("...i,...i->...", B, B) / (2 * mu_0)


def poynting_residual(snap):
    """Discrete energy-balance residual, centred at ``t + dt/2``.

    ``du/dt`` is the difference of the two snapshots; the flux divergence and
    the Joule term are centred differences averaged over both snapshots, so
    the residual is second order in both ``h`` and ``dt``.  Only interior
    cells (one-cell margin) are reported.
    """
    E = np.asarray(snap.E, dtype=float)
    B = np.asarray(snap.B, dtype=float)
    j = np.asarray(snap.j, dtype=float)
    h, dt = snap.h, snap.dt
    u = _energy_density(E, B)
    S = np.cross(E, B) / mu_0
    ej = np.einsum("...i,...i->...", E, j)

    inner = (slice(1, -1),) * 3
    dudt = (u[1] - u[0])[inner] / dt
    div = np.zeros_like(dudt)
    for axis in range(3):
        fwd = [slice(1, -1)] * 3
        bwd = [slice(1, -1)] * 3
        fwd[axis] = slice(2, None)
        bwd[axis] = slice(None, -2)
        for t in range(2):
            Sa = S[t, ..., axis]
            div += 0.5 * (Sa[tuple(fwd)] - Sa[tuple(bwd)]) / (2 * h)
    joule = 0.5 * (ej[0] + ej[1])[inner]
    res = dudt + div + joule
    scale = float(np.abs(u).max() / dt + np.abs(S).max() / h + np.abs(ej).max())
    return PoyntingResidual(res, float(np.abs(res).max()), float(math.sqrt(np.sum(res**2) * h**3)), scale)


def _grid_coords(shape, h, origin):
    axes = [origin[k] + h * np.arange(shape[k]) for k in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    return np.stack([X, Y, Z], axis=-1)


def plane_wave_snapshots(n_per_wavelength=128, wavelength=1.0, amplitude=1.0, courant=0.25,
                         transverse=3, t0=0.0):
    """Vacuum plane wave ``E = E0 x cos(kz - wt)``, ``B = (E0/c) y cos(kz - wt)``, ``j = 0``.

    The z extent covers one wavelength plus the boundary margin;
    ``dt = courant * h / c``.
    """
    h = wavelength / n_per_wavelength
    dt = courant * h / SPEED_OF_LIGHT
    k = 2 * math.pi / wavelength
    w = SPEED_OF_LIGHT * k
    shape = (transverse, transverse, n_per_wavelength + 3)
    r = _grid_coords(shape, h, (0.0, 0.0, -h))
    E = np.zeros((2,) + shape + (3,))
    B = np.zeros_like(E)
    for i, t in enumerate((t0, t0 + dt)):
        phase = np.cos(k * r[..., 2] - w * t)
        E[i, ..., 0] = amplitude * phase
        B[i, ..., 1] = amplitude / SPEED_OF_LIGHT * phase
    return FieldSnapshotGrid(E, B, np.zeros_like(E), h, dt)


def static_field_snapshots(spec, n=9, extent=None, dt=1e-9):
    """Time-independent magnetic field of ``spec`` sampled on an ``n^3`` cube, E = j = 0."""
    if extent is None:
        extent = 4 * getattr(spec, "radius", getattr(spec, "outer_radius", 1.0))
    h = extent / (n - 1)
    r = _grid_coords((n, n, n), h, (-extent / 2,) * 3)
    B = b_field(spec, r.reshape(-1, 3)).reshape(r.shape)
    Bt = np.stack([B, B])
    zero = np.zeros_like(Bt)
    return FieldSnapshotGrid(zero, Bt, zero.copy(), h, dt)


GRID_MAGIC = "# ablab-poynting-grid v1"


def write_grid_file(path, snap):
    """Write a snapshot grid in the plain-text format read by ``read_grid_file``.

    Layout::

        # ablab-poynting-grid v1
        nx ny nz
        h dt
        <2*nx*ny*nz records: Ex Ey Ez Bx By Bz jx jy jz>

    Records are ordered snapshot-major, then ``i``, ``j``, ``k`` with ``k``
    fastest; numbers carry 17 significant digits.
    """
    nx, ny, nz = snap.shape
    data = np.concatenate([np.asarray(snap.E), np.asarray(snap.B), np.asarray(snap.j)], axis=-1)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{GRID_MAGIC}\n{nx} {ny} {nz}\n{snap.h:.17g} {snap.dt:.17g}\n")
        np.savetxt(fh, data.reshape(-1, 9), fmt="%.17g")


def read_grid_file(path):
    """Parse a grid file written by ``write_grid_file``.

    Raises
    ------
    ShapeError
        If the record count does not match the header.
    """
    with open(path, encoding="ascii") as fh:
        magic = fh.readline().strip()
        if magic != GRID_MAGIC:
            raise ShapeError(f"{path}: not a poynting grid file")
        nx, ny, nz = (int(x) for x in fh.readline().split())
        h, dt = (float(x) for x in fh.readline().split())
        data = np.loadtxt(fh, ndmin=2)
    expected = 2 * nx * ny * nz
    if data.shape != (expected, 9):
        raise ShapeError(f"{path}: expected {expected} records of 9 values, got {data.shape}")
    data = data.reshape(2, nx, ny, nz, 9)
    return FieldSnapshotGrid(data[..., 0:3], data[..., 3:6], data[..., 6:9], h, dt)
