"""Command-line front end: ``ablab <subcommand> --config FILE --out DIR``.

Configs are YAML (JSON also loads, so a run manifest can be fed back in).
Every subcommand writes ``manifest.json`` plus fixed-column CSV files into
the output directory.  Floats in CSV files carry 17 significant digits.

Exit codes: 0 success, 1 runtime or numerical error, 2 invalid config,
3 a physics cross-check failed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import platform
import re
import sys
import time
from importlib import metadata
from pathlib import Path as FsPath

import numpy as np
import yaml
from scipy.constants import e as ELEMENTARY_CHARGE
from scipy.constants import m_e

from . import energy as en
from . import phase as ph
from . import wavepacket as wp
from .errors import ABLabError, InvalidSpecError
from .geomfields import FluxLineSpec, SolenoidSpec, ToroidSpec
from .quadrature import QuadConfig

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3

_SOLENOID = {"kind": "solenoid", "radius": 0.01, "turns_per_length": 1000.0, "current": 1.0,
             "length": None, "axis": [0.0, 0.0, 1.0], "center": [0.0, 0.0, 0.0]}
_TOROID = {"inner_radius": 0.05, "outer_radius": 0.1, "height": 0.02, "turns": 500, "current": 2.0}

DEFAULTS = {
    "phase": {
        "source": _SOLENOID,
        "electron": {"charge": -ELEMENTARY_CHARGE, "mass": m_e, "speed": 1.0e6},
        "beams": {"shape": "semicircles", "radius": 0.05, "half_length": 0.05, "half_width": 0.03,
                  "samples_per_piece": 257},
        "routes": ["line_integral", "flux", "action", "interaction_energy"],
        "quadrature": {"rtol": 1e-10, "atol": 1e-14, "max_depth": 20, "order": 7},
        "checks": {"route_rtol": 1e-4},
        "sweep": None,
    },
    "identity-check": {
        "source": dict(_SOLENOID, length=1.0),
        "electron": {"charge": -ELEMENTARY_CHARGE, "speed": 1.0e6},
        "sweep": {"rho_over_R": [3.0, 5.0, 10.0], "velocity": ["azimuthal", "radial"]},
        "quadrature": {"rtol": 1e-6, "atol": 1e-14, "max_depth": 20, "order": 7},
        "checks": {"threshold": 5e-3},
    },
    "energy": {
        "toroid": _TOROID,
        "decomposition": {
            "source": dict(_SOLENOID, length=1.0),
            "electron": {"position": [0.05, 0.0, 0.0], "velocity": [0.0, 1.0e6, 0.0],
                         "charge": -ELEMENTARY_CHARGE},
            "core_excision": 1e-6,
        },
        "sweep": {"parameter": "toroid.turns", "values": [125, 250, 500, 1000]},
        "quadrature": {"rtol": 1e-8, "atol": 1e-14, "max_depth": 20, "order": 7},
        "checks": {"duality_rtol": 1e-2, "analytic_rtol": 1e-2, "exponent_tol": 1e-2},
    },
    "poynting-check": {
        "plane_wave": {"n_per_wavelength": 128, "wavelength": 1.0, "amplitude": 1.0,
                       "courant": 0.25, "transverse": 3},
        "static": {"source": _SOLENOID, "n": 9},
        "grids": [],
        "checks": {"min_order": 1.9, "static_rel": 1e-12, "grid_rel": 1e-3},
    },
    "interfere": {
        "alphas": [0.0, math.pi / 2, math.pi, 2 * math.pi],
        "setup": {},
        "frames": True,
        "checks": {"shift_fraction": 0.05, "periodicity": 1e-8},
    },
}


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads ``1e-10`` (no decimal point) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


class ConfigError(InvalidSpecError):
    """Config file problem; ``field`` is a dotted path into the config tree."""


# ---------------------------------------------------------------------------
# Config handling


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, val in (override or {}).items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(where, "unknown key")
        if isinstance(base[key], dict) and isinstance(val, dict) and key not in ("setup", "source"):
            out[key] = _merge(base[key], val, where + ".")
        elif key == "source" and isinstance(val, dict):
            # same kind: fill gaps from the defaults; other kind: take as given
            same = val.get("kind", base[key].get("kind")) == base[key].get("kind")
            out[key] = dict(copy.deepcopy(base[key]), **val) if same else copy.deepcopy(val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path, command):
    """Read ``path`` and merge it over the subcommand defaults.

    A run manifest is accepted too; its ``config`` snapshot is used.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.load(fh, Loader=_Loader)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("--config", f"cannot parse: {exc}") from None
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("--config", "top level must be a mapping")
    if "config" in raw and "version" in raw:
        raw = raw["config"]
    return _merge(DEFAULTS[command], raw)


def _num(cfg, key, where, positive=False, allow_none=False):
    val = cfg.get(key)
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}.{key}", "must be a number")
    val = float(val)
    if not math.isfinite(val):
        raise ConfigError(f"{where}.{key}", "must be finite")
    if positive and val <= 0:
        raise ConfigError(f"{where}.{key}", "must be > 0")
    return val


def _wrap_spec(where, ctor, **kw):
    try:
        return ctor(**kw)
    except InvalidSpecError as exc:
        raise ConfigError(f"{where}.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None


def build_source(cfg, where="source"):
    kind = cfg.get("kind", "solenoid")
    if kind == "solenoid":
        length = cfg.get("length")
        return _wrap_spec(where, SolenoidSpec, radius=_num(cfg, "radius", where),
                          turns_per_length=_num(cfg, "turns_per_length", where),
                          current=_num(cfg, "current", where),
                          length=math.inf if length is None else _num(cfg, "length", where),
                          axis=tuple(cfg.get("axis", (0, 0, 1))), center=tuple(cfg.get("center", (0, 0, 0))))
    if kind == "toroid":
        return build_toroid(cfg, where)
    if kind == "flux_line":
        return _wrap_spec(where, FluxLineSpec, flux=_num(cfg, "flux", where),
                          position=tuple(cfg.get("position", (0.0, 0.0))))
    raise ConfigError(f"{where}.kind", f"unknown source kind {kind!r}")


def build_toroid(cfg, where="toroid"):
    turns = cfg.get("turns")
    if isinstance(turns, float) and turns.is_integer():
        turns = int(turns)
    if not isinstance(turns, int) or isinstance(turns, bool):
        raise ConfigError(f"{where}.turns", "must be an integer")
    return _wrap_spec(where, ToroidSpec, inner_radius=_num(cfg, "inner_radius", where),
                      outer_radius=_num(cfg, "outer_radius", where), height=_num(cfg, "height", where),
                      turns=turns, current=_num(cfg, "current", where))


def build_quad(cfg, scale, where="quadrature"):
    q = _wrap_spec(where, QuadConfig, rtol=_num(cfg, "rtol", where), atol=_num(cfg, "atol", where),
                   max_depth=int(cfg["max_depth"]), order=int(cfg["order"]))
    return q.scaled(scale)


def _set_dotted(cfg, dotted, value):
    node = cfg
    keys = dotted.split(".")
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"sweep.parameter", f"{dotted!r} does not name a config entry")
        node = node[k]
    if keys[-1] not in node:
        raise ConfigError("sweep.parameter", f"{dotted!r} does not name a config entry")
    node[keys[-1]] = value


def _sweep_points(cfg):
    sweep = cfg.get("sweep")
    if not sweep:
        return [(None, cfg)]
    param, values = sweep.get("parameter"), sweep.get("values")
    if not isinstance(param, str):
        raise ConfigError("sweep.parameter", "must be a dotted config path")
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep.values", "must be a non-empty list")
    points = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError("sweep.values", "values must be finite numbers")
        c = copy.deepcopy(cfg)
        _set_dotted(c, param, v)
        points.append((v, c))
    return points


# ---------------------------------------------------------------------------
# Output helpers


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return "" if v is None else str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def artifact_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__
        return __version__


class Run:
    """Collects results, checks and timings for one subcommand invocation."""

    def __init__(self, command, config, out):
        self.command = command
        self.config = config
        self.out = FsPath(out)
        self.results = {}
        self.checks = []
        self.timings = {}
        self.files = []

    def check(self, name, passed, value=None, threshold=None):
        self.checks.append({"name": name, "passed": bool(passed), "value": value, "threshold": threshold})

    def timed(self, name, fn, *args, **kw):
        t = time.perf_counter()
        try:
            return fn(*args, **kw)
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t

    def csv(self, name, columns, rows):
        write_csv(self.out / name, columns, rows)
        self.files.append(name)

    def manifest(self, status, error=None):
        return _jsonable({
            "version": artifact_version(),
            "command": self.command,
            "config": self.config,
            "status": status,
            "results": self.results,
            "checks": self.checks,
            "timings_s": self.timings,
            "files": self.files,
            "error": error,
            "platform": {"python": platform.python_version(), "numpy": np.__version__},
        })


# ---------------------------------------------------------------------------
# Subcommands


def _beams(cfg):
    b = cfg["beams"]
    shape = b.get("shape")
    if shape == "semicircles":
        return ph.BeamPair.semicircles(_num(b, "radius", "beams", positive=True))
    if shape == "rectangular":
        return ph.BeamPair.rectangular(_num(b, "half_length", "beams", positive=True),
                                       _num(b, "half_width", "beams", positive=True))
    raise ConfigError("beams.shape", "expected 'semicircles' or 'rectangular'")


def _phase_point(run, cfg, scale, label):
    spec = build_source(cfg["source"])
    el = cfg["electron"]
    q = _num(el, "charge", "electron")
    speed = _num(el, "speed", "electron", positive=True)
    mass = _num(el, "mass", "electron", positive=True)
    quad = build_quad(cfg["quadrature"], scale)
    beams = _beams(cfg)
    routes = cfg["routes"]
    known = {"line_integral", "flux", "action", "interaction_energy"}
    if not isinstance(routes, list) or not routes or not set(routes) <= known:
        raise ConfigError("routes", f"must be a non-empty subset of {sorted(known)}")
    n = int(cfg["beams"]["samples_per_piece"])
    results = []
    for r in routes:
        if r == "line_integral":
            res = run.timed(r, ph.phase_via_line_integral, spec, beams, q, quad)
        elif r == "flux":
            res = run.timed(r, ph.phase_via_flux, spec, q, beams=beams)
        elif r == "action":
            res = run.timed(r, ph.action_phase_difference, beams, speed, spec, q, mass, quad)
        else:
            legs_l = ph.trajectory_legs(beams.path_left, speed, n)
            legs_r = ph.trajectory_legs(beams.path_right, speed, n)
            res = run.timed(r, ph.phase_via_interaction_energy, spec, legs_l, legs_r, q, quad)
        results.append(res)
    cmp_ = ph.compare_routes(results, _num(cfg["checks"], "route_rtol", "checks", positive=True))
    rows = [{"point": label, "route": r.route.value, "phase_rad": r.phase, "phase_mod_2pi": r.phase_mod_2pi,
             "error_estimate": r.error_estimate} for r in results]
    return rows, cmp_, results


def run_phase(cfg, run, scale):
    rows = []
    summary = []
    for value, point in _sweep_points(cfg):
        r, cmp_, results = _phase_point(run, point, scale, value)
        rows += r
        run.check(f"route_agreement[{_fmt(value) or 'base'}]", cmp_.agree, cmp_.max_rel_diff, cmp_.tolerance)
        summary.append({"point": value, "max_rel_diff": cmp_.max_rel_diff,
                        "routes": {x.route.value: {"phase_rad": x.phase, "phase_mod_2pi": x.phase_mod_2pi,
                                                   "error_estimate_rad": x.error_estimate,
                                                   "warning": x.warning} for x in results}})
    run.results["phase"] = summary
    run.csv("phase.csv", ["point", "route", "phase_rad", "phase_mod_2pi", "error_estimate"], rows)


def run_identity_check(cfg, run, scale):
    spec = build_source(cfg["source"])
    if spec.kind != "solenoid":
        raise ConfigError("source.kind", "identity-check sweeps electron positions around a solenoid")
    quad = build_quad(cfg["quadrature"], scale)
    el = cfg["electron"]
    q = _num(el, "charge", "electron")
    speed = _num(el, "speed", "electron", positive=True)
    threshold = _num(cfg["checks"], "threshold", "checks", positive=True)
    sweep = cfg["sweep"]
    rhos, dirs = sweep.get("rho_over_R"), sweep.get("velocity")
    if not isinstance(rhos, list) or not rhos:
        raise ConfigError("sweep.rho_over_R", "must be a non-empty list")
    if not isinstance(dirs, list) or not dirs or not set(dirs) <= {"azimuthal", "radial", "axial"}:
        raise ConfigError("sweep.velocity", "must list directions among azimuthal, radial, axial")
    axis = np.asarray(spec.axis)
    e1 = np.cross(axis, [1.0, 0, 0] if abs(axis[0]) < 0.9 else [0, 1.0, 0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    rows = []
    for k in rhos:
        if isinstance(k, bool) or not isinstance(k, (int, float)) or not k > 1:
            raise ConfigError("sweep.rho_over_R", "values must be numbers > 1")
        pos = np.asarray(spec.center) + k * spec.radius * e1
        for d in dirs:
            v = speed * {"azimuthal": e2, "radial": e1, "axial": axis}[d]
            e = _wrap_spec("electron", en.ElectronState, position=pos, velocity=v, charge=q)
            res = run.timed("verify_eq7", ph.verify_eq7, spec, e, quad)
            ok = res.rel_error <= threshold
            rows.append({"rho_over_R": float(k), "velocity": d, "lhs_J": res.lhs, "rhs_J": res.rhs,
                         "rel_error": res.rel_error, "abs_floor_J": res.abs_floor, "pass": ok})
            run.check(f"overlap_identity[rho/R={_fmt(float(k))},{d}]", ok, res.rel_error, threshold)
    run.results["identity"] = rows
    run.csv("identity.csv", ["rho_over_R", "velocity", "lhs_J", "rhs_J", "rel_error", "abs_floor_J", "pass"], rows)


def run_energy(cfg, run, scale):
    quad = build_quad(cfg["quadrature"], scale)
    chk = cfg["checks"]
    duality_tol = _num(chk, "duality_rtol", "checks", positive=True)
    analytic_tol = _num(chk, "analytic_rtol", "checks", positive=True)
    rows = []
    for value, point in _sweep_points(cfg):
        tor = build_toroid(point["toroid"])
        u_cur = run.timed("energy_from_current", en.energy_from_current, tor, quad)
        u_fld = run.timed("energy_from_field", en.energy_from_field, tor, quad)
        analytic = 0.5 * tor.inductance * tor.current**2
        big = max(abs(u_cur.value), abs(u_fld.value))
        gap = abs(u_cur.value - u_fld.value) / big if big > 0 else 0.0
        dev = (max(abs(u_cur.value - analytic), abs(u_fld.value - analytic)) / analytic) if analytic else (
            0.0 if big == 0 else math.inf)
        rows.append({"point": value, "turns": tor.turns, "current_A": tor.current,
                     "energy_current_J": u_cur.value, "energy_field_J": u_fld.value,
                     "analytic_J": analytic, "rel_gap": gap, "rel_dev_analytic": dev})
        tag = _fmt(value) or "base"
        run.check(f"duality[{tag}]", gap <= duality_tol, gap, duality_tol)
        run.check(f"analytic[{tag}]", dev <= analytic_tol, dev, analytic_tol)
    run.csv("energy.csv", ["point", "turns", "current_A", "energy_current_J", "energy_field_J", "analytic_J",
                           "rel_gap", "rel_dev_analytic"], rows)
    run.results["toroid"] = rows

    sweep = cfg.get("sweep") or {}
    if sweep.get("parameter") in ("toroid.turns", "toroid.current") and len(rows) >= 2:
        xs = np.log([float(r["point"]) for r in rows])
        ys = [r["energy_field_J"] for r in rows]
        if all(y > 0 for y in ys) and np.ptp(xs) > 0:
            slope = float(np.polyfit(xs, np.log(ys), 1)[0])
            tol = _num(chk, "exponent_tol", "checks", positive=True)
            run.results["scaling_exponent"] = slope
            run.check("quadratic_scaling", abs(slope - 2.0) <= tol, slope, [2.0 - tol, 2.0 + tol])

    dec = cfg.get("decomposition")
    if dec:
        spec = build_source(dec["source"], "decomposition.source")
        el = dec["electron"]
        e = _wrap_spec("decomposition.electron", en.ElectronState, position=el["position"],
                       velocity=el["velocity"], charge=_num(el, "charge", "decomposition.electron"))
        br = run.timed("energy_decomposition", en.energy_decomposition, spec, e, None,
                       _num(dec, "core_excision", "decomposition", positive=True), quad)
        row = {"u1_J": br.u1, "u2_J": br.u2, "u_int_J": br.u_int, "total_J": br.total,
               "u1_error_J": br.u1_error, "u2_error_J": br.u2_error, "u_int_error_J": br.u_int_error,
               "core_excision_m": br.core_excision_radius}
        run.results["decomposition"] = row
        run.csv("decomposition.csv", list(row), [row])
        run.check("self_energies_nonnegative", br.u1 >= 0 and br.u2 >= 0, min(br.u1, br.u2), 0.0)


def _plane_wave(pw, n):
    return en.plane_wave_snapshots(n, _num(pw, "wavelength", "plane_wave", positive=True),
                                   _num(pw, "amplitude", "plane_wave"),
                                   _num(pw, "courant", "plane_wave", positive=True), int(pw["transverse"]))


def run_poynting(cfg, run, scale):
    chk = cfg["checks"]
    rows = []
    pw = cfg.get("plane_wave")
    if pw:
        n = int(pw["n_per_wavelength"])
        if n < 4:
            raise ConfigError("plane_wave.n_per_wavelength", "must be >= 4")
        coarse = run.timed("plane_wave", lambda: en.poynting_residual(_plane_wave(pw, n)))
        fine_snap = _plane_wave(pw, 2 * n)
        fine = run.timed("plane_wave", en.poynting_residual, fine_snap)
        order = math.log2(coarse.max_abs / fine.max_abs) if fine.max_abs > 0 else math.inf
        snap = _plane_wave(pw, n)
        for label, res, s in (("plane_wave", coarse, snap), ("plane_wave_fine", fine, fine_snap)):
            rows.append({"case": label, "nx": s.shape[0], "ny": s.shape[1], "nz": s.shape[2], "h": s.h,
                         "dt": s.dt, "max_abs": res.max_abs, "l2_norm": res.l2_norm, "scale": res.scale,
                         "rel_max": res.relative_max, "order": order if label == "plane_wave_fine" else None})
        min_order = _num(chk, "min_order", "checks", positive=True)
        run.check("plane_wave_order", order >= min_order, order, min_order)
    st = cfg.get("static")
    if st:
        spec = build_source(st["source"], "static.source")
        snap = en.static_field_snapshots(spec, int(st["n"]))
        res = run.timed("static", en.poynting_residual, snap)
        rows.append({"case": "static", "nx": snap.shape[0], "ny": snap.shape[1], "nz": snap.shape[2],
                     "h": snap.h, "dt": snap.dt, "max_abs": res.max_abs, "l2_norm": res.l2_norm,
                     "scale": res.scale, "rel_max": res.relative_max})
        lim = _num(chk, "static_rel", "checks", positive=True)
        run.check("static_residual", res.relative_max <= lim, res.relative_max, lim)
    grids = cfg.get("grids") or []
    if not isinstance(grids, list):
        raise ConfigError("grids", "must be a list of grid file paths")
    lim = _num(chk, "grid_rel", "checks", positive=True)
    base = FsPath(cfg.get("_config_dir", "."))
    for g in grids:
        path = FsPath(g) if FsPath(g).is_absolute() else base / g
        snap = en.read_grid_file(path)
        res = run.timed("grids", en.poynting_residual, snap)
        flagged = res.relative_max > lim
        rows.append({"case": f"grid:{g}", "nx": snap.shape[0], "ny": snap.shape[1], "nz": snap.shape[2],
                     "h": snap.h, "dt": snap.dt, "max_abs": res.max_abs, "l2_norm": res.l2_norm,
                     "scale": res.scale, "rel_max": res.relative_max, "flagged": flagged})
        run.check(f"grid_residual[{g}]", not flagged, res.relative_max, lim)
    for r in rows:
        r.setdefault("flagged", False)
    run.results["poynting"] = rows
    run.csv("poynting.csv", ["case", "nx", "ny", "nz", "h", "dt", "max_abs", "l2_norm", "scale", "rel_max",
                             "order", "flagged"], rows)


def _wrap_angle(x):
    w = math.remainder(x, 2 * math.pi)
    return math.pi if w <= -math.pi else w


def run_interfere(cfg, run, scale):
    alphas = cfg["alphas"]
    if not isinstance(alphas, list) or not alphas:
        raise ConfigError("alphas", "must be a non-empty list")
    for a in alphas:
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not math.isfinite(a):
            raise ConfigError("alphas", "values must be finite numbers")
    setup_cfg = dict(cfg.get("setup") or {})
    fields = wp.InterferenceSetup.__dataclass_fields__
    for k in setup_cfg:
        if k not in fields:
            raise ConfigError(f"setup.{k}", "unknown key")
    setup_cfg["tol"] = setup_cfg.get("tol", fields["tol"].default) * scale
    try:
        setup = wp.InterferenceSetup(**setup_cfg)
        setup.grid()
    except InvalidSpecError as exc:
        raise ConfigError(f"setup.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    chk = cfg["checks"]
    frac = _num(chk, "shift_fraction", "checks", positive=True)
    per_tol = _num(chk, "periodicity", "checks", positive=True)

    ref = run.timed("propagation", wp.run_interference, 0.0, setup)
    runs = {}
    rows = []
    for i, a in enumerate(alphas):
        r = ref if a == 0 else run.timed("propagation", wp.run_interference, float(a), setup)
        runs[i] = r
        shift = wp.fringe_shift(r.profile, ref.profile)
        expected = _wrap_angle(float(a))
        dev = _wrap_angle(shift - expected)
        ok = abs(dev) <= frac * 2 * math.pi
        rows.append({"alpha": float(a), "shift_rad": shift, "expected_rad": expected, "deviation_rad": dev,
                     "norm_final": r.final.norm, "pass": ok})
        run.check(f"fringe_shift[alpha={_fmt(float(a))}]", ok, dev, frac * 2 * math.pi)
        prof = f"profile_{i:02d}.dat"
        with open(run.out / prof, "w", encoding="utf-8") as fh:
            fh.write(f"# alpha = {float(a):.17g}\n# s intensity\n")
            np.savetxt(fh, np.column_stack([r.profile.s, r.profile.intensity]), fmt="%.17g")
        run.files.append(prof)
        if cfg.get("frames"):
            frame = f"frame_{i:02d}.txt"
            with open(run.out / frame, "w", encoding="utf-8") as fh:
                g = r.final.grid
                fh.write(f"# |psi|^2 alpha={float(a):.17g} step={r.final.step}\n{g.nx} {g.ny}\n{g.dx:.17g}\n")
                np.savetxt(fh, r.final.density, fmt="%.17g")
            run.files.append(frame)
    # flux periodicity: alpha and alpha + 2 pi k give the same density
    for i, a in enumerate(alphas):
        for j, b in enumerate(alphas[:i]):
            k = (a - b) / (2 * math.pi)
            if k != 0 and abs(k - round(k)) < 1e-12:
                diff = float(np.max(np.abs(runs[i].final.density - runs[j].final.density)))
                run.check(f"periodicity[{_fmt(float(b))},{_fmt(float(a))}]", diff <= per_tol, diff, per_tol)
    run.results["interfere"] = rows
    run.csv("interfere.csv", ["alpha", "shift_rad", "expected_rad", "deviation_rad", "norm_final", "pass"], rows)


COMMANDS = {
    "phase": run_phase,
    "identity-check": run_identity_check,
    "energy": run_energy,
    "poynting-check": run_poynting,
    "interfere": run_interfere,
}


def build_parser():
    p = argparse.ArgumentParser(prog="ablab", description="Aharonov-Bohm numerical laboratory")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML or JSON config (defaults used when omitted)")
        s.add_argument("--out", default="ablab-out", help="output directory")
        s.add_argument("--tolerance-scale", type=float, default=1.0,
                       help="multiply numerical tolerances (not check thresholds)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run = Run(args.command, None, out)
    t0 = time.perf_counter()
    code, status, error = EXIT_OK, "ok", None
    try:
        if not (math.isfinite(args.tolerance_scale) and args.tolerance_scale > 0):
            raise ConfigError("--tolerance-scale", "must be a finite number > 0")
        if args.config:
            cfg = load_config(args.config, args.command)
        else:
            cfg = copy.deepcopy(DEFAULTS[args.command])
        run.config = cfg
        if args.command == "poynting-check" and args.config:
            cfg = dict(cfg, _config_dir=str(FsPath(args.config).resolve().parent))
        COMMANDS[args.command](cfg, run, args.tolerance_scale)
        if not all(c["passed"] for c in run.checks):
            code, status = EXIT_CHECK, "check_failed"
    except ConfigError as exc:
        code, status = EXIT_CONFIG, "invalid_config"
        error = {"type": "ConfigError", "field": exc.field, "message": str(exc)}
    except (ABLabError, ArithmeticError, ValueError, RuntimeError, OSError) as exc:
        code, status = EXIT_RUNTIME, "runtime_error"
        error = {"type": type(exc).__name__, "message": str(exc), "field": getattr(exc, "field", None)}
    run.timings["total"] = time.perf_counter() - t0
    manifest = run.manifest(status, error)
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if error:
        print(f"ablab {args.command}: {status}: {error['message']}", file=sys.stderr)
    else:
        failed = [c["name"] for c in run.checks if not c["passed"]]
        print(f"ablab {args.command}: {status}; {len(run.checks) - len(failed)}/{len(run.checks)} checks passed"
              + (f"; failed: {', '.join(failed)}" if failed else ""))
    return code


if __name__ == "__main__":
    sys.exit(main())
