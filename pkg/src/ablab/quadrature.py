"""Adaptive line and volume integration.

Everything here is built on one global-adaptive driver: a set of
axis-aligned cells in parameter space, each carrying an embedded-rule
error estimate, is refined by bisecting the worst cells until the summed
error meets ``max(atol, rtol * |I|)``.  One-dimensional cells use a
Gauss-Kronrod pair, higher-dimensional cells the Genz-Malik degree 7/5
rule.  Cells are processed in a fixed order (ties broken by creation
index), so results are bit-reproducible.

Paths are piecewise parametrized curves (straight segments and circular
arcs); regions are mapped from the unit cube in their natural
coordinates (cylindrical for cylinders and toroids).
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, GeometryError, InvalidSpecError

__all__ = [
    "QuadConfig",
    "QuadResult",
    "integrate_box",
    "Segment",
    "Arc",
    "Path",
    "Cylinder",
    "Torus",
    "Box",
    "line_integral",
    "volume_integral",
]

# Positive half of the Kronrod nodes/weights, ascending from 0; the Gauss
# nodes are every other Kronrod node counted from the outermost one.
_KRONROD = {
    7: (
        [0.0, 0.2077849550078984676, 0.40584515137739716691, 0.58608723546769113029,
         0.74153118559939443986, 0.86486442335976907279, 0.94910791234275852453,
         0.99145537112081263921],
        [0.20948214108472782801, 0.20443294007529889241, 0.19035057806478540991,
         0.16900472663926790283, 0.14065325971552591875, 0.10479001032225018384,
         0.063092092629978553291, 0.022935322010529224964],
    ),
    10: (
        [0.0, 0.14887433898163121088, 0.29439286270146019813, 0.4333953941292471908,
         0.56275713466860468334, 0.67940956829902440623, 0.78081772658641689706,
         0.86506336668898451073, 0.930157491355708226, 0.97390652851717172008,
         0.99565716302580808074],
        [0.14944555400291690566, 0.14773910490133849137, 0.1427759385770600808,
         0.13470921731147332593, 0.12349197626206585108, 0.1093871588022976419,
         0.093125454583697605535, 0.075039674810919952767, 0.054755896574351996031,
         0.032558162307964727479, 0.011694638867371874278],
    ),
}


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and limits for the adaptive driver.

    Attributes
    ----------
    rtol, atol : float
        Relative and absolute tolerance; ``atol`` is in the units of the
        integral seen by the driver.
    max_depth : int
        Maximum number of bisections applied to a single cell.
    order : int
        Gauss order of the 1D Gauss-Kronrod pair (7 -> G7/K15, 10 -> G10/K21).
        Cubature in two or more dimensions always uses Genz-Malik 7/5.
    max_evals : int
        Hard cap on integrand evaluations.
    """

    rtol: float = 1e-6
    atol: float = 1e-14
    max_depth: int = 20
    order: int = 7
    max_evals: int = 20_000_000

    def __post_init__(self):
        if not self.rtol > 0:
            raise InvalidSpecError("rtol", "must be > 0")
        if not self.atol > 0:
            raise InvalidSpecError("atol", "must be > 0")
        if self.max_depth < 1:
            raise InvalidSpecError("max_depth", "must be >= 1")
        if self.order not in _KRONROD:
            raise InvalidSpecError("order", f"must be one of {sorted(_KRONROD)}")

    def scaled(self, factor):
        """Return a copy with both tolerances multiplied by ``factor``."""
        return QuadConfig(self.rtol * factor, self.atol * factor, self.max_depth,
                          self.order, self.max_evals)

    def with_depth(self, max_depth):
        return QuadConfig(self.rtol, self.atol, max_depth, self.order, self.max_evals)


@dataclass(frozen=True)
class QuadResult:
    """Integral value (scalar or array) with its error estimate."""

    value: float | np.ndarray
    error: float
    n_evals: int
    n_cells: int


# ---------------------------------------------------------------------------
# Rules


class _GaussKronrod:
    def __init__(self, order):
        xk, wk = _KRONROD[order]
        xk = np.asarray(xk)
        wk = np.asarray(wk)
        self.nodes = np.concatenate([-xk[:0:-1], xk])
        self.wk = np.concatenate([wk[:0:-1], wk])
        gx, gw = np.polynomial.legendre.leggauss(order)
        wg = np.zeros_like(self.nodes)
        for x, w in zip(gx, gw):
            wg[np.argmin(np.abs(self.nodes - x))] = w
        self.wg = wg
        self.dim = 1

    def points(self, center, half):
        return center[:, None, :] + self.nodes[None, :, None] * half[:, None, :]

    def reduce(self, fvals, half):
        # fvals: (k, npts, m)
        scale = half[:, 0][:, None]
        kron = np.einsum("p,kpm->km", self.wk, fvals) * scale
        gauss = np.einsum("p,kpm->km", self.wg, fvals) * scale
        err = np.linalg.norm(kron - gauss, axis=1)
        axis = np.zeros(len(fvals), dtype=int)
        return kron, err, axis


class _GenzMalik:
    def __init__(self, dim):
        d = dim
        l2, l3, l4, l5 = math.sqrt(9 / 70), math.sqrt(9 / 10), math.sqrt(9 / 10), math.sqrt(9 / 19)
        pts = [np.zeros(d)]
        w7 = [(12824 - 9120 * d + 400 * d * d) / 19683]
        w5 = [(729 - 950 * d + 50 * d * d) / 729]
        self.idx2 = []
        self.idx3 = []
        for lam, wa, wb, store in ((l2, 980 / 6561, 245 / 486, self.idx2),
                                   (l3, (1820 - 400 * d) / 19683, (265 - 100 * d) / 1458, self.idx3)):
            for i in range(d):
                pair = []
                for s in (1.0, -1.0):
                    p = np.zeros(d)
                    p[i] = s * lam
                    pair.append(len(pts))
                    pts.append(p)
                    w7.append(wa)
                    w5.append(wb)
                store.append(pair)
        for i, j in itertools.combinations(range(d), 2):
            for si, sj in itertools.product((1.0, -1.0), repeat=2):
                p = np.zeros(d)
                p[i] = si * l4
                p[j] = sj * l4
                pts.append(p)
                w7.append(200 / 19683)
                w5.append(25 / 729)
        for signs in itertools.product((1.0, -1.0), repeat=d):
            pts.append(l5 * np.asarray(signs))
            w7.append(6859 / 19683 / 2**d)
            w5.append(0.0)
        self.nodes = np.asarray(pts)
        self.w7 = np.asarray(w7)
        self.w5 = np.asarray(w5)
        self.dim = d
        self.ratio = (9 / 70) / (9 / 10)

    def points(self, center, half):
        return center[:, None, :] + self.nodes[None, :, :] * half[:, None, :]

    def reduce(self, fvals, half):
        vol = np.prod(2.0 * half, axis=1)[:, None]
        hi = np.einsum("p,kpm->km", self.w7, fvals) * vol
        lo = np.einsum("p,kpm->km", self.w5, fvals) * vol
        err = np.linalg.norm(hi - lo, axis=1)
        f0 = fvals[:, 0, :]
        diffs = np.empty((len(fvals), self.dim))
        for i in range(self.dim):
            a, b = self.idx2[i]
            c, e = self.idx3[i]
            d4 = (fvals[:, a] + fvals[:, b] - 2 * f0) - self.ratio * (fvals[:, c] + fvals[:, e] - 2 * f0)
            diffs[:, i] = np.linalg.norm(d4, axis=1)
        # Near-ties (e.g. polynomial integrands) go to the widest axis.
        dmax = diffs.max(axis=1, keepdims=True)
        tied = diffs >= dmax * (1 - 1e-8)
        axis = np.argmax(np.where(tied, half, -np.inf), axis=1)
        return hi, err, axis


_RULES = {}


def _rule(dim, order):
    key = (dim, order if dim == 1 else None)
    if key not in _RULES:
        _RULES[key] = _GaussKronrod(order) if dim == 1 else _GenzMalik(dim)
    return _RULES[key]


# ---------------------------------------------------------------------------
# Driver


def integrate_box(f, lows, highs, cfg=None, batch=16):
    """Integrate ``f`` over a union of axis-aligned boxes.

    Parameters
    ----------
    f : callable
        Maps an ``(n, d)`` array of points to ``(n,)`` or ``(n, m)`` values.
    lows, highs : array_like, shape (k, d) or (d,)
        Corners of the root cells; each root is refined independently but
        the tolerance is global.
    cfg : QuadConfig, optional
    batch : int
        Maximum number of cells bisected per round.

    Returns
    -------
    QuadResult

    Raises
    ------
    ConvergenceError
        When every remaining cell hit ``max_depth`` or the evaluation budget
        ran out before reaching tolerance.
    """
    cfg = cfg or QuadConfig()
    lows = np.atleast_2d(np.asarray(lows, dtype=float))
    highs = np.atleast_2d(np.asarray(highs, dtype=float))
    dim = lows.shape[1]
    rule = _rule(dim, cfg.order)
    scalar = None
    n_evals = 0

    def evaluate(lo, hi):
        nonlocal scalar, n_evals
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        pts = rule.points(center, half)
        k, p, _ = pts.shape
        vals = np.asarray(f(pts.reshape(k * p, dim)), dtype=float)
        n_evals += k * p
        if scalar is None:
            scalar = vals.ndim == 1
        vals = vals.reshape(k, p, -1)
        if not np.all(np.isfinite(vals)):
            raise ValueError("integrand returned non-finite values")
        return rule.reduce(vals, half)

    values, errs, axes = evaluate(lows, highs)
    cells = [(lows[i], highs[i], 0, values[i], errs[i], axes[i]) for i in range(len(lows))]
    heap = [(-errs[i], i) for i in range(len(lows))]
    heapq.heapify(heap)
    alive = set(range(len(cells)))
    frozen_err = 0.0
    counter = len(cells)

    def totals():
        ids = sorted(alive)
        val = np.sum([cells[i][3] for i in ids], axis=0)
        err = math.fsum(cells[i][4] for i in ids)
        return val, err

    total, total_err = totals()
    rounds = 0
    while True:
        tol = max(cfg.atol, cfg.rtol * float(np.linalg.norm(total)))
        if total_err <= tol:
            total, total_err = totals()
            if total_err <= max(cfg.atol, cfg.rtol * float(np.linalg.norm(total))):
                break
        picked = []
        while heap and len(picked) < batch:
            neg, cid = heapq.heappop(heap)
            if picked and -neg < 1e-3 * cells[picked[0]][4]:
                heapq.heappush(heap, (neg, cid))
                break
            if cells[cid][2] >= cfg.max_depth:
                frozen_err += cells[cid][4]
                continue
            picked.append(cid)
        if not picked or n_evals >= cfg.max_evals or frozen_err > tol:
            for cid in picked:
                heapq.heappush(heap, (-cells[cid][4], cid))
            total, total_err = totals()
            value = total[0] if scalar else total
            raise ConvergenceError(
                f"adaptive quadrature did not converge: error {total_err:.3e} > tolerance {tol:.3e}",
                estimate=value, error=total_err)
        new_lo, new_hi, depths = [], [], []
        for cid in picked:
            lo, hi, depth, _, _, ax = cells[cid]
            mid = 0.5 * (lo[ax] + hi[ax])
            hi_a = hi.copy()
            hi_a[ax] = mid
            lo_b = lo.copy()
            lo_b[ax] = mid
            new_lo += [lo, lo_b]
            new_hi += [hi_a, hi]
            depths += [depth + 1, depth + 1]
            alive.discard(cid)
        values, errs, axes = evaluate(np.asarray(new_lo), np.asarray(new_hi))
        for i in range(len(new_lo)):
            cells.append((new_lo[i], new_hi[i], depths[i], values[i], errs[i], axes[i]))
            alive.add(counter)
            heapq.heappush(heap, (-errs[i], counter))
            counter += 1
        rounds += 1
        if rounds % 64 == 0:
            total, total_err = totals()
        else:
            total = total - np.sum([cells[c][3] for c in picked], axis=0) + values.sum(axis=0)
            total_err = total_err - math.fsum(cells[c][4] for c in picked) + math.fsum(errs)

    value = total[0] if scalar else total
    return QuadResult(value, float(total_err), n_evals, len(alive))


# ---------------------------------------------------------------------------
# Paths


def _vec3(p, name="point"):
    p = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(p)):
        raise InvalidSpecError(name, "components must be finite")
    return p


class Segment:
    """Straight piece ``p + t (q - p)`` for ``t`` in [0, 1]."""

    def __init__(self, p, q):
        self.p = _vec3(p, "p")
        self.q = _vec3(q, "q")
        if np.linalg.norm(self.q - self.p) == 0:
            raise InvalidSpecError("vertices", "consecutive vertices must be distinct")

    def position(self, t):
        return self.p + np.multiply.outer(t, self.q - self.p)

    def derivative(self, t):
        return np.broadcast_to(self.q - self.p, np.shape(t) + (3,))

    @property
    def start(self):
        return self.p

    @property
    def end(self):
        return self.q

    @property
    def length(self):
        return float(np.linalg.norm(self.q - self.p))

    def reversed(self):
        return Segment(self.q, self.p)


class Arc:
    """Circular arc ``c + r (cos a e1 + sin a e2)`` with ``a`` from ``a0`` to ``a1``."""

    def __init__(self, center, radius, a0, a1, e1=(1.0, 0.0, 0.0), e2=(0.0, 1.0, 0.0)):
        self.center = _vec3(center, "center")
        self.radius = float(radius)
        if not self.radius > 0:
            raise InvalidSpecError("radius", "must be > 0")
        self.a0, self.a1 = float(a0), float(a1)
        if self.a0 == self.a1:
            raise InvalidSpecError("a1", "arc must sweep a non-zero angle")
        self.e1 = _vec3(e1, "e1")
        self.e2 = _vec3(e2, "e2")

    def position(self, t):
        a = self.a0 + np.asarray(t) * (self.a1 - self.a0)
        return (self.center + self.radius * (np.multiply.outer(np.cos(a), self.e1)
                                             + np.multiply.outer(np.sin(a), self.e2)))

    def derivative(self, t):
        a = self.a0 + np.asarray(t) * (self.a1 - self.a0)
        k = self.radius * (self.a1 - self.a0)
        return k * (np.multiply.outer(-np.sin(a), self.e1) + np.multiply.outer(np.cos(a), self.e2))

    @property
    def start(self):
        return self.position(0.0)

    @property
    def end(self):
        return self.position(1.0)

    @property
    def length(self):
        return abs(self.radius * (self.a1 - self.a0))

    def reversed(self):
        return Arc(self.center, self.radius, self.a1, self.a0, self.e1, self.e2)


class Path:
    """Chain of pieces; piece ``k`` is traversed for parameter ``u`` in [k, k+1].

    Consecutive pieces must join within 1e-12 m.  The path is closed when
    its end point coincides with its start point within the same tolerance.
    """

    JOIN_TOL = 1e-12

    def __init__(self, pieces):
        self.pieces = list(pieces)
        if not self.pieces:
            raise InvalidSpecError("pieces", "a path needs at least one piece")
        for a, b in zip(self.pieces[:-1], self.pieces[1:]):
            if np.linalg.norm(a.end - b.start) > self.JOIN_TOL:
                raise GeometryError("path pieces do not join")

    @classmethod
    def polyline(cls, vertices, closed=False):
        """Polyline through ``vertices``; ``closed=True`` appends the closing edge if needed."""
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or len(v) < 2:
            raise InvalidSpecError("vertices", "need at least two 3D vertices")
        if closed and np.linalg.norm(v[0] - v[-1]) > cls.JOIN_TOL:
            v = np.vstack([v, v[:1]])
        return cls(Segment(a, b) for a, b in zip(v[:-1], v[1:]))

    @classmethod
    def circle(cls, center, radius, turns=1, e1=(1.0, 0.0, 0.0), e2=(0.0, 1.0, 0.0)):
        """Closed circle traversed ``turns`` times (negative = clockwise)."""
        if turns == 0:
            raise InvalidSpecError("turns", "must be non-zero")
        sgn = 1.0 if turns > 0 else -1.0
        pieces = []
        for k in range(abs(int(turns))):
            for half in range(2):
                a0 = sgn * (2 * k + half) * math.pi
                pieces.append(Arc(center, radius, a0, a0 + sgn * math.pi, e1, e2))
        return cls(pieces)

    @property
    def start(self):
        return self.pieces[0].start

    @property
    def end(self):
        return self.pieces[-1].end

    @property
    def closed(self):
        return bool(np.linalg.norm(self.end - self.start) <= self.JOIN_TOL)

    @property
    def length(self):
        return math.fsum(p.length for p in self.pieces)

    def __len__(self):
        return len(self.pieces)

    def reversed(self):
        return Path(p.reversed() for p in reversed(self.pieces))

    def __add__(self, other):
        return Path(self.pieces + other.pieces)

    def evaluate(self, u):
        """Positions and ``d position / du`` at global parameters ``u``."""
        u = np.asarray(u, dtype=float)
        k = np.clip(np.floor(u).astype(int), 0, len(self.pieces) - 1)
        t = u - k
        pos = np.empty(u.shape + (3,))
        der = np.empty(u.shape + (3,))
        for i in np.unique(k):
            sel = k == i
            pos[sel] = self.pieces[i].position(t[sel])
            der[sel] = self.pieces[i].derivative(t[sel])
        return pos, der

    def sample(self, n_per_piece=64):
        """Points along the path, ``n_per_piece`` per piece (end point included)."""
        u = np.concatenate([i + np.linspace(0, 1, n_per_piece, endpoint=False)
                            for i in range(len(self.pieces))] + [[len(self.pieces)]])
        return self.evaluate(u)[0]


def line_integral(field, path, cfg=None):
    """Integrate ``field . dl`` along ``path``.

    Parameters
    ----------
    field : callable
        ``(n, 3)`` positions to ``(n, 3)`` vectors.
    path : Path
    cfg : QuadConfig, optional

    Returns
    -------
    QuadResult
    """
    def integrand(u):
        pos, der = path.evaluate(u[:, 0])
        return np.einsum("ij,ij->i", np.asarray(field(pos), dtype=float), der)

    n = len(path)
    lows = np.arange(n, dtype=float)[:, None]
    return integrate_box(integrand, lows, lows + 1.0, cfg)


# ---------------------------------------------------------------------------
# Regions


def _frame(axis):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - axis * (helper @ axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2, axis


class Cylinder:
    """Solid cylinder of radius ``radius`` and length ``length`` (may be ``inf``).

    Integrated in (rho, phi, z).  An infinite length is handled with the
    substitution ``z = z_scale * tan(pi (w - 1/2))``.
    """

    kind = "cylinder"

    def __init__(self, radius, length, center=(0.0, 0.0, 0.0), axis=(0.0, 0.0, 1.0), z_scale=None):
        if not radius > 0:
            raise InvalidSpecError("radius", "must be > 0")
        if not length > 0:
            raise InvalidSpecError("length", "must be > 0")
        self.radius = float(radius)
        self.length = float(length)
        self.center = _vec3(center, "center")
        self.e1, self.e2, self.axis = _frame(axis)
        self.z_scale = float(z_scale) if z_scale else self.radius

    @property
    def volume(self):
        return math.pi * self.radius**2 * self.length

    def local(self, r):
        d = np.asarray(r, dtype=float) - self.center
        return d @ self.e1, d @ self.e2, d @ self.axis

    def contains(self, r):
        x, y, z = self.local(r)
        return (x * x + y * y < self.radius**2) & (np.abs(z) < self.length / 2)

    def cube_map(self, u):
        rho = self.radius * u[:, 0]
        phi = 2 * math.pi * u[:, 1]
        jac = self.radius * 2 * math.pi * rho
        if math.isinf(self.length):
            s = math.pi * (u[:, 2] - 0.5)
            z = self.z_scale * np.tan(s)
            jac = jac * self.z_scale * math.pi / np.cos(s) ** 2
        else:
            z = self.length * (u[:, 2] - 0.5)
            jac = jac * self.length
        pts = (self.center + np.multiply.outer(rho * np.cos(phi), self.e1)
               + np.multiply.outer(rho * np.sin(phi), self.e2) + np.multiply.outer(z, self.axis))
        return pts, jac

    def ray_intervals(self, origin, dirs):
        """Parameter intervals ``[s0, s1]`` (s >= 0) where rays lie inside; see ``Box``."""
        o = np.asarray(origin, dtype=float) - self.center
        ox, oy, oz = o @ self.e1, o @ self.e2, o @ self.axis
        dx, dy, dz = dirs @ self.e1, dirs @ self.e2, dirs @ self.axis
        lat = _quad_interval(dx * dx + dy * dy, 2 * (ox * dx + oy * dy), ox * ox + oy * oy - self.radius**2)
        slab = _slab_interval(oz, dz, -self.length / 2, self.length / 2)
        return [_intersect(lat, slab)]


class Torus:
    """Rectangular-section toroidal volume ``a < rho < b``, ``|z| < h/2`` about the z axis."""

    kind = "torus"

    def __init__(self, inner_radius, outer_radius, height):
        if not 0 < inner_radius < outer_radius:
            raise InvalidSpecError("inner_radius", "need 0 < inner_radius < outer_radius")
        if not height > 0:
            raise InvalidSpecError("height", "must be > 0")
        self.a = float(inner_radius)
        self.b = float(outer_radius)
        self.h = float(height)

    @property
    def volume(self):
        return math.pi * (self.b**2 - self.a**2) * self.h

    def contains(self, r):
        r = np.asarray(r, dtype=float)
        rho = np.hypot(r[..., 0], r[..., 1])
        return (rho > self.a) & (rho < self.b) & (np.abs(r[..., 2]) < self.h / 2)

    def cube_map(self, u):
        rho = self.a + (self.b - self.a) * u[:, 0]
        phi = 2 * math.pi * u[:, 1]
        z = self.h * (u[:, 2] - 0.5)
        pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
        jac = (self.b - self.a) * 2 * math.pi * self.h * rho
        return pts, jac

    def ray_intervals(self, origin, dirs):
        o = np.asarray(origin, dtype=float)
        A = dirs[:, 0] ** 2 + dirs[:, 1] ** 2
        B = 2 * (o[0] * dirs[:, 0] + o[1] * dirs[:, 1])
        rho2 = o[0] ** 2 + o[1] ** 2
        outer = _quad_interval(A, B, rho2 - self.b**2)
        inner = _quad_interval(A, B, rho2 - self.a**2)
        slab = _slab_interval(o[2], dirs[:, 2], -self.h / 2, self.h / 2)
        base = _intersect(outer, slab)
        # outer minus inner leaves up to two pieces
        first = (base[0], np.minimum(base[1], inner[0]))
        second = (np.maximum(base[0], inner[1]), base[1])
        return [_clean(first), _clean(second)]


class Box:
    """Axis-aligned box between two corners."""

    kind = "box"

    def __init__(self, lower, upper):
        self.lower = _vec3(lower, "lower")
        self.upper = _vec3(upper, "upper")
        if not np.all(self.upper > self.lower):
            raise InvalidSpecError("upper", "every component must exceed the lower corner")

    @property
    def volume(self):
        return float(np.prod(self.upper - self.lower))

    def contains(self, r):
        r = np.asarray(r, dtype=float)
        return np.all((r > self.lower) & (r < self.upper), axis=-1)

    def cube_map(self, u):
        span = self.upper - self.lower
        return self.lower + u * span, np.full(len(u), np.prod(span))

    def ray_intervals(self, origin, dirs):
        """For unit ``dirs`` (n, 3), return a list of ``(s0, s1)`` arrays; empty where ``s0 >= s1``."""
        o = np.asarray(origin, dtype=float)
        lo = np.zeros(len(dirs))
        hi = np.full(len(dirs), np.inf)
        for k in range(3):
            a, b = _slab_interval(o[k], dirs[:, k], self.lower[k], self.upper[k])
            lo = np.maximum(lo, a)
            hi = np.minimum(hi, b)
        return [_clean((lo, hi))]


def _slab_interval(o, d, lo, hi):
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = (lo - o) / d
        t1 = (hi - o) / d
    a = np.minimum(t0, t1)
    b = np.maximum(t0, t1)
    inside = (o > lo) & (o < hi)
    par = d == 0
    a = np.where(par, np.where(inside, -np.inf, np.inf), a)
    b = np.where(par, np.where(inside, np.inf, -np.inf), b)
    return _clean((a, b))


def _quad_interval(A, B, C):
    # where A s^2 + B s + C < 0
    disc = B * B - 4 * A * C
    ok = (disc > 0) & (A > 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s0 = np.where(ok, (-B - sq) / (2 * A), np.inf)
        s1 = np.where(ok, (-B + sq) / (2 * A), -np.inf)
    # rays parallel to the axis stay in or out forever
    par = A == 0
    s0 = np.where(par, np.where(C < 0, -np.inf, np.inf), s0)
    s1 = np.where(par, np.where(C < 0, np.inf, -np.inf), s1)
    return _clean((s0, s1))


def _intersect(a, b):
    return _clean((np.maximum(a[0], b[0]), np.minimum(a[1], b[1])))


def _clean(iv):
    s0 = np.maximum(iv[0], 0.0)
    s1 = iv[1]
    empty = ~(s1 > s0)
    return np.where(empty, 0.0, s0), np.where(empty, 0.0, s1)


def volume_integral(f, region, cfg=None):
    """Integrate a scalar (or vector) field over ``region``.

    ``f`` maps ``(n, 3)`` positions to ``(n,)`` or ``(n, m)`` values.
    """
    def integrand(u):
        pts, jac = region.cube_map(u)
        vals = np.asarray(f(pts), dtype=float)
        return vals * (jac if vals.ndim == 1 else jac[:, None])

    return integrate_box(integrand, np.zeros(3), np.ones(3), cfg)
