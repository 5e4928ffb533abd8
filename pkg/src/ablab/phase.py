"""Aharonov-Bohm phase difference by several independent routes.

Sign convention
---------------
The phase difference is ``(S_left - S_right) / hbar``.  The closed loop used
by every route is the left beam followed by the right beam reversed.  The
stock beam factories send both beams from ``-x`` to ``+x`` with the left
beam on the ``+y`` side, so the loop runs clockwise about ``+z`` (winding
``-1``) and an electron around a positive flux picks up a positive phase.

Units are SI: ``phase = (q / hbar) * loop integral of A``.  In Gaussian units
the same quantity reads ``(e / hbar c) * loop integral``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar
from scipy.integrate import simpson, trapezoid

from .energy import ElectronState, interaction_energy
from .errors import GeometryError, InvalidSpecError, UnsupportedGeometryError
from .geomfields import (
    _field_scale,
    a_field_from_b,
    apply_gauge,
    linking_number,
    support_region,
    total_flux,
    vector_potential,
)
from .quadrature import Arc, Path, QuadConfig, line_integral

__all__ = [
    "Route",
    "PhaseResult",
    "BeamPair",
    "Trajectory",
    "OverlapIdentityResult",
    "RouteComparison",
    "trajectory_legs",
    "phase_via_line_integral",
    "phase_via_flux",
    "action_phase_difference",
    "phase_via_interaction_energy",
    "verify_eq7",
    "phase_via_wavepacket",
    "compare_routes",
]

TWO_PI = 2 * math.pi


class Route(str, enum.Enum):
    LINE_INTEGRAL = "line_integral"
    FLUX = "flux"
    INTERACTION_ENERGY = "interaction_energy"
    WAVEPACKET = "wavepacket"
    ACTION = "action"


def _mod_2pi(x):
    m = math.fmod(x, TWO_PI)
    if m < 0:
        m += TWO_PI
    return 0.0 if m >= TWO_PI else m


@dataclass(frozen=True)
class PhaseResult:
    """Phase difference (rad) with route label and absolute error estimate.

    ``kinetic_mismatch`` and ``warning`` are only set by the action route,
    when the two beams do not take equal times.
    """

    phase: float
    route: Route
    error_estimate: float = 0.0
    kinetic_mismatch: float = 0.0
    warning: str | None = None
    phase_mod_2pi: float = field(init=False)

    def __post_init__(self):
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be >= 0")
        # + 0.0 folds a negative zero into zero
        object.__setattr__(self, "phase", float(self.phase) + 0.0)
        object.__setattr__(self, "error_estimate", float(self.error_estimate))
        object.__setattr__(self, "phase_mod_2pi", _mod_2pi(self.phase) + 0.0)


# ---------------------------------------------------------------------------
# Beam geometry


@dataclass(frozen=True)
class BeamPair:
    """Two beam paths from a common source point to a common screen point."""

    path_left: Path
    path_right: Path

    def __post_init__(self):
        tol = Path.JOIN_TOL
        if (np.linalg.norm(self.path_left.start - self.path_right.start) > tol
                or np.linalg.norm(self.path_left.end - self.path_right.end) > tol):
            raise GeometryError("beams must share source and screen points")

    @property
    def loop(self):
        return self.path_left + self.path_right.reversed()

    def winding(self, spec):
        """Linking number of the beam loop with the source flux."""
        return linking_number(spec, self.loop)

    def check_outside(self, spec):
        self.winding(spec)

    @classmethod
    def semicircles(cls, radius, center=(0.0, 0.0, 0.0), extra_turns=0,
                    e1=(1.0, 0.0, 0.0), e2=(0.0, 1.0, 0.0)):
        """Half circles of ``radius`` from ``center - radius e1`` to ``center + radius e1``.

        The left beam passes through ``+e2``.  ``extra_turns`` full circles
        are appended to the left beam at the screen point, clockwise, so the
        loop winds ``-(1 + extra_turns)`` times.
        """
        if not radius > 0:
            raise InvalidSpecError("radius", "must be > 0")
        if extra_turns < 0:
            raise InvalidSpecError("extra_turns", "must be >= 0")
        left = [Arc(center, radius, math.pi, 0.0, e1, e2)]
        for k in range(int(extra_turns)):
            left += [Arc(center, radius, -2 * math.pi * k, -2 * math.pi * k - math.pi, e1, e2),
                     Arc(center, radius, -2 * math.pi * k - math.pi, -2 * math.pi * (k + 1), e1, e2)]
        right = [Arc(center, radius, -math.pi, 0.0, e1, e2)]
        return cls(Path(left), Path(right))

    @classmethod
    def rectangular(cls, half_length, half_width, center=(0.0, 0.0, 0.0)):
        """Three-sided rectangles in the z = const plane through ``center``."""
        c = np.asarray(center, dtype=float)
        w, h = float(half_length), float(half_width)
        if not (w > 0 and h > 0):
            raise InvalidSpecError("half_length", "rectangle sides must be > 0")
        left = c + np.array([[-w, 0, 0], [-w, h, 0], [w, h, 0], [w, 0, 0]])
        right = c + np.array([[-w, 0, 0], [-w, -h, 0], [w, -h, 0], [w, 0, 0]])
        return cls(Path.polyline(left), Path.polyline(right))


@dataclass(frozen=True)
class Trajectory:
    """Smooth time-parametrized leg: ``t`` (s), ``position`` (m), ``velocity`` (m/s).

    Velocities must match centred differences of the positions within 1%
    of the local speed.  A beam with corners is a sequence of legs; see
    ``trajectory_legs``.
    """

    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        r = np.asarray(self.position, dtype=float)
        v = np.asarray(self.velocity, dtype=float)
        if t.ndim != 1 or len(t) < 3 or r.shape != (len(t), 3) or v.shape != r.shape:
            raise InvalidSpecError("t", "need >= 3 samples with (n, 3) position and velocity")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise InvalidSpecError("t", "samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise InvalidSpecError("t", "times must be strictly increasing")
        cd = (r[2:] - r[:-2]) / (t[2:] - t[:-2])[:, None]
        speed = np.linalg.norm(v[1:-1], axis=1)
        dev = np.linalg.norm(cd - v[1:-1], axis=1)
        if np.any(dev > 0.01 * np.maximum(speed, 1e-300)):
            raise InvalidSpecError("velocity", "inconsistent with position differences beyond 1%")
        for name, arr in (("t", t), ("position", r), ("velocity", v)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])


def trajectory_legs(path, speed, samples_per_piece=257, t0=0.0):
    """Constant-speed traversal of ``path``, one ``Trajectory`` per path piece."""
    if not speed > 0:
        raise InvalidSpecError("speed", "must be > 0")
    if samples_per_piece < 3:
        raise InvalidSpecError("samples_per_piece", "must be >= 3")
    legs = []
    t_start = float(t0)
    s = np.linspace(0.0, 1.0, samples_per_piece)
    for piece in path.pieces:
        pos = piece.position(s)
        der = piece.derivative(s)
        length = piece.length
        duration = length / speed
        vel = der / duration
        legs.append(Trajectory(t_start + s * duration, pos, vel))
        t_start += duration
    return legs


def _as_legs(traj):
    return [traj] if isinstance(traj, Trajectory) else list(traj)


# ---------------------------------------------------------------------------
# Routes


def _potential(spec, cfg, gauge):
    A = vector_potential(spec, cfg)
    return A if gauge is None else apply_gauge(A, gauge)


def _flux_scale(spec):
    return abs(total_flux(spec)) or 1.0


def phase_via_line_integral(spec, beams, q, cfg=None, gauge=None):
    """``(q / hbar) * loop integral of A`` around ``beams.loop``.

    Parameters
    ----------
    spec : SolenoidSpec, ToroidSpec or FluxLineSpec
    beams : BeamPair
    q : float
        Charge (C).
    cfg : QuadConfig, optional
        Defaults to ``rtol=1e-10``.
    gauge : GaugeFunction, optional
        Added to the potential before integrating.
    """
    cfg = cfg or QuadConfig(rtol=1e-10)
    beams.check_outside(spec)
    if q == 0:
        return PhaseResult(0.0, Route.LINE_INTEGRAL, 0.0)
    A = _potential(spec, cfg, gauge)
    scale = _flux_scale(spec)
    res = line_integral(lambda r: A(r) / scale, beams.loop, cfg)
    k = q / hbar * scale
    return PhaseResult(k * res.value, Route.LINE_INTEGRAL, abs(k) * res.error)


def phase_via_flux(spec, q, winding=1, beams=None):
    """``winding * q * Phi0 / hbar``; ``winding`` is taken from ``beams`` when given."""
    if beams is not None:
        winding = beams.winding(spec)
    return PhaseResult(winding * q * total_flux(spec) / hbar, Route.FLUX, 0.0)


def action_phase_difference(beams, speed, spec, q, m, cfg=None):
    """Classical action difference ``(S_left - S_right) / hbar`` at constant ``speed``.

    With ``S = Int (m v^2 / 2 + q A . v) dt`` the kinetic part depends only on
    the traversal time.  ``phase`` holds the coupling term; a kinetic
    difference from unequal path lengths is reported in ``kinetic_mismatch``
    (rad) with a warning and is not added to ``phase``.
    """
    cfg = cfg or QuadConfig(rtol=1e-10)
    if not speed > 0:
        raise InvalidSpecError("speed", "must be > 0")
    beams.check_outside(spec)
    dl = beams.path_left.length - beams.path_right.length
    kinetic = 0.5 * m * speed * dl / hbar
    warning = None
    if abs(dl) > 1e-12 * max(beams.path_left.length, beams.path_right.length):
        warning = "beams have unequal traversal times; kinetic phase reported separately"
    if q == 0:
        return PhaseResult(0.0, Route.ACTION, 0.0, kinetic, warning)
    A = _potential(spec, cfg, None)
    scale = _flux_scale(spec)
    left = line_integral(lambda r: A(r) / scale, beams.path_left, cfg)
    right = line_integral(lambda r: A(r) / scale, beams.path_right, cfg)
    k = q / hbar * scale
    return PhaseResult(k * (left.value - right.value), Route.ACTION,
                       abs(k) * (left.error + right.error), kinetic, warning)


def _time_integral(t, u):
    n = len(t)
    val = simpson(u, x=t)
    if n >= 5 and (n - 1) % 4 == 0:
        coarse = simpson(u[::2], x=t[::2])
        return val, abs(val - coarse) / 15.0
    return val, abs(val - trapezoid(u, x=t))


def _check_trajectory(spec, legs):
    if spec.kind == "flux_line":
        return
    region = support_region(spec)
    for leg in legs:
        if np.any(region.contains(leg.position)):
            raise GeometryError("trajectory enters the source volume")


def _leg_energy_integral(spec, legs, q, cfg, method):
    A = vector_potential(spec, cfg)
    total = err = 0.0
    for leg in legs:
        if method == "potential":
            u = q * np.einsum("ij,ij->i", A(leg.position), leg.velocity)
        else:
            u = np.array([interaction_energy(spec, ElectronState(r, v, q), cfg).value
                          for r, v in zip(leg.position, leg.velocity)])
        val, e = _time_integral(leg.t, u)
        total += val
        err += e
    return total, err


def phase_via_interaction_energy(spec, traj_left, traj_right, q, cfg=None, method="potential"):
    """``(1/hbar) Int (U_left - U_right) dt`` with ``U = q v . A(r(t))``.

    Parameters
    ----------
    traj_left, traj_right : Trajectory or sequence of Trajectory
        Legs in time order; both beams must share start and end points.
    method : {"potential", "overlap"}
        ``"overlap"`` evaluates ``U`` as the field-overlap volume integral at
        every sample instead (much slower, finite sources only).

    Returns
    -------
    PhaseResult
        Error estimate from the Simpson/Richardson comparison per leg.
    """
    cfg = cfg or QuadConfig(rtol=1e-10)
    if method not in ("potential", "overlap"):
        raise InvalidSpecError("method", "expected 'potential' or 'overlap'")
    left, right = _as_legs(traj_left), _as_legs(traj_right)
    ends = [left[0].position[0], right[0].position[0], left[-1].position[-1], right[-1].position[-1]]
    size = max(np.linalg.norm(p) for p in ends) or 1.0
    if (np.linalg.norm(ends[0] - ends[1]) > 1e-9 * size
            or np.linalg.norm(ends[2] - ends[3]) > 1e-9 * size):
        raise GeometryError("trajectories must share their endpoints")
    _check_trajectory(spec, left + right)
    if q == 0:
        return PhaseResult(0.0, Route.INTERACTION_ENERGY, 0.0)
    ul, el = _leg_energy_integral(spec, left, q, cfg, method)
    ur, er = _leg_energy_integral(spec, right, q, cfg, method)
    return PhaseResult((ul - ur) / hbar, Route.INTERACTION_ENERGY, (el + er) / hbar)


@dataclass(frozen=True)
class OverlapIdentityResult:
    """Field-overlap energy (``lhs``) against ``q v . A`` (``rhs``), both in J."""

    lhs: float
    rhs: float
    rel_error: float
    lhs_error: float
    rhs_error: float
    abs_floor: float


def _standoff(spec, r):
    """Distance from ``r`` to the source volume (negative inside)."""
    if spec.kind == "solenoid":
        d = r - np.asarray(spec.center)
        z = d @ np.asarray(spec.axis)
        rho = np.linalg.norm(d - z * np.asarray(spec.axis))
        dr = rho - spec.radius
        if spec.infinite:
            return dr
        dz = abs(z) - spec.length / 2
        if dr <= 0 and dz <= 0:
            return max(dr, dz)
        return math.hypot(max(dr, 0.0), max(dz, 0.0))
    if spec.kind == "toroid":
        rho = math.hypot(r[0], r[1])
        da = spec.inner_radius - rho
        db = rho - spec.outer_radius
        dr = max(da, db)
        dz = abs(r[2]) - spec.height / 2
        if dr <= 0 and dz <= 0:
            return max(dr, dz)
        return math.hypot(max(dr, 0.0), max(dz, 0.0))
    raise UnsupportedGeometryError("the field-overlap identity needs a source with volume")


def _min_standoff(spec):
    if spec.kind == "solenoid":
        return 0.1 * spec.radius
    return 0.1 * (spec.outer_radius - spec.inner_radius)


def verify_eq7(spec, e, cfg=None):
    """Check ``(1/mu0) Int B1 . B2 d^3r = q v . A1(r_e)`` for one electron state.

    ``lhs`` is the overlap quadrature over the support of ``B1``; ``rhs`` uses
    the potential reconstructed from ``B1`` by quadrature.  ``rel_error`` is
    ``|lhs - rhs| / max(|lhs|, |rhs|)``, or 0 when both sides are below
    ``abs_floor`` (the absolute tolerance in energy units).

    Raises
    ------
    GeometryError
        If the electron is closer than 0.1 R (solenoid) or 0.1 (b - a)
        (toroid) to the source.
    """
    cfg = cfg or QuadConfig()
    if _standoff(spec, e.position) < _min_standoff(spec):
        raise GeometryError("electron must stay at least 0.1 R outside the source")
    b0, ell = _field_scale(spec)
    scale = abs(e.charge) * np.linalg.norm(e.velocity) * b0 * ell
    lhs = interaction_energy(spec, e, cfg)
    if scale == 0:
        return OverlapIdentityResult(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    A = a_field_from_b(spec, e.position, cfg)
    rhs = float(e.charge * (e.velocity @ A.value))
    rhs_err = abs(e.charge) * np.linalg.norm(e.velocity) * A.error
    floor = max(cfg.atol * scale, lhs.error + rhs_err)
    big = max(abs(lhs.value), abs(rhs))
    rel = 0.0 if big <= floor else abs(lhs.value - rhs) / big
    return OverlapIdentityResult(float(lhs.value), rhs, rel, float(lhs.error), float(rhs_err), float(floor))


def phase_via_wavepacket(alpha, **kwargs):
    """Phase extracted from a simulated interference pattern (natural units).

    Runs ``wavepacket.measure_fringe_shift`` for flux ``alpha`` and converts
    the fringe shift to the beam convention above; the expected value is
    ``-alpha`` modulo 2 pi (clockwise loop, unit charge).
    """
    from .wavepacket import measure_fringe_shift

    m = measure_fringe_shift(alpha, **kwargs)
    return PhaseResult(-m.shift, Route.WAVEPACKET, m.error_estimate)


@dataclass(frozen=True)
class RouteComparison:
    """Pairwise agreement of signed phases relative to the largest magnitude."""

    max_rel_diff: float
    tolerance: float
    results: tuple

    @property
    def agree(self):
        return self.max_rel_diff <= self.tolerance


def compare_routes(results, rtol=1e-4):
    """Largest ``|phi_i - phi_j| / max |phi|`` over all route pairs.

    All-zero phases compare equal.
    """
    results = tuple(results)
    big = max((abs(r.phase) for r in results), default=0.0)
    worst = 0.0
    for i, a in enumerate(results):
        for b in results[i + 1:]:
            diff = abs(a.phase - b.phase)
            if big > 0:
                worst = max(worst, diff / big)
    return RouteComparison(worst, rtol, results)
