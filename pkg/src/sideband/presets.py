"""Run configurations: schema, validation and the named parameter sets.

A configuration is a JSON object; every frequency is a ratio to the
natural linewidth (``gamma = 1``)::

    {
      "task": "cooling-curve",            # or populations, spectrum
      "potential": {"kind": "square-well", "nu": 0.0333, "a": null, "n_levels": null},
      "laser": {"delta": -0.59, "omega": 0.2, "cos_phi": 1.0, "cos_psi": 0.0,
                "eta": 0.1, "alpha": 0.4},
      "delta_grid": {"start": -2.0, "stop": -0.02, "points": 100},
      "spectrum": {"mode": "low_intensity", "psi_average": false, "grid": null},
      "truncation": {"tol": 1e-6, "step": 10, "max": 100}
    }

``potential.n_levels = null`` selects the default truncation: every bound
state for Morse, 30 levels for the harmonic trap and adaptive growth for
the square well.
"""

from __future__ import annotations

import copy
import math

import numpy as np

from .basis import (MotionalBasis, build_harmonic, build_morse, build_square_well,
                    morse_bound_states)
from .internal import LaserParams

__all__ = ["ConfigError", "TASKS", "POTENTIALS", "DEFAULTS", "PRESETS", "preset",
           "presets", "validate_config", "merge", "build_basis_factory",
           "laser_params", "delta_grid", "spectrum_grid", "fixed_basis"]

TASKS = ("cooling-curve", "populations", "spectrum")
POTENTIALS = ("square-well", "morse", "harmonic")
HARMONIC_DEFAULT_LEVELS = 30


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


DEFAULTS = {
    "task": "cooling-curve",
    "potential": {"kind": "square-well", "nu": 1.0 / 30.0, "a": None, "n_levels": None},
    "laser": {"delta": -0.5, "omega": 0.2, "cos_phi": 1.0, "cos_psi": 0.0,
              "eta": 0.1, "alpha": 0.4},
    "delta_grid": {"start": -2.0, "stop": -0.02, "points": 100},
    "spectrum": {"mode": "low_intensity", "psi_average": False, "grid": None},
    "truncation": {"tol": 1e-6, "step": 10, "max": 100},
}


def merge(base: dict, override: dict) -> dict:
    """Recursive dict update that returns a new dict."""
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _morse_nu(a: float, omega01: float) -> float:
    # omega_01 = (a-1)/a nu
    return omega01 * a / (a - 1.0)


PRESETS = {
    "well-doppler": {
        "description": "square well, Doppler regime: nu = gamma/30 (omega_01 = gamma/10)",
        "potential": {"kind": "square-well", "nu": 1.0 / 30.0, "n_levels": None},
        "laser": {"delta": -0.59, "omega": 0.2, "eta": 0.1, "cos_psi": 0.0},
        "delta_grid": {"start": -2.0, "stop": -0.02, "points": 100},
    },
    "well-resolved": {
        "description": "square well, resolved sidebands: nu = 10 gamma/3, nine levels",
        "potential": {"kind": "square-well", "nu": 10.0 / 3.0, "n_levels": 9},
        "laser": {"delta": -3.35 * 10.0 / 3.0, "omega": 0.2, "eta": 0.1, "cos_psi": 0.0},
        "delta_grid": {"start": -30.0 * 10.0 / 3.0, "stop": -0.5 * 10.0 / 3.0, "points": 591},
    },
    "morse-doppler": {
        "description": "Morse a = 30, Doppler regime: omega_01 = gamma/10",
        "potential": {"kind": "morse", "a": 30.0, "nu": _morse_nu(30.0, 0.1), "n_levels": None},
        "laser": {"delta": -0.51, "omega": 0.2, "eta": 0.1, "cos_psi": 0.0},
        "delta_grid": {"start": -2.0, "stop": -0.02, "points": 100},
    },
    "morse-resolved": {
        "description": "Morse a = 30, resolved sidebands: omega_01 = 10 gamma",
        "potential": {"kind": "morse", "a": 30.0, "nu": _morse_nu(30.0, 10.0), "n_levels": None},
        "laser": {"delta": -10.0, "omega": 0.2, "eta": 0.1, "cos_psi": 0.0},
        "delta_grid": {"start": -25.0, "stop": -2.5, "points": 226},
    },
    "harmonic": {
        "description": "harmonic reference: nu = 10 gamma, delta = -nu",
        "potential": {"kind": "harmonic", "nu": 10.0, "n_levels": HARMONIC_DEFAULT_LEVELS},
        "laser": {"delta": -10.0, "omega": 0.2, "eta": 0.1, "cos_psi": 0.0},
        "delta_grid": {"start": -25.0, "stop": -2.5, "points": 226},
    },
}


def preset(name: str) -> dict:
    """Full configuration for a named preset."""
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    body = {k: v for k, v in PRESETS[name].items() if k != "description"}
    return validate_config(merge(DEFAULTS, body))


def presets() -> list[tuple[str, str, dict]]:
    return [(name, PRESETS[name]["description"], preset(name)) for name in PRESETS]


# validation -----------------------------------------------------------------

def _num(cfg, section, key, *, positive=False, allow_none=False, lo=None, hi=None):
    val = cfg[section].get(key)
    path = f"{section}.{key}"
    if val is None:
        if allow_none:
            return None
        raise ConfigError(path, "is required")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"must be a number, got {val!r}")
    val = float(val)
    if not math.isfinite(val):
        raise ConfigError(path, "must be finite")
    if positive and val <= 0:
        raise ConfigError(path, "must be positive")
    if lo is not None and val < lo:
        raise ConfigError(path, f"must be >= {lo}")
    if hi is not None and val > hi:
        raise ConfigError(path, f"must be <= {hi}")
    return val


def _int(cfg, section, key, *, minimum=1, allow_none=False):
    val = cfg[section].get(key)
    path = f"{section}.{key}"
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(path, f"must be an integer, got {val!r}")
    if val < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return val


def _grid(block, path):
    if not isinstance(block, dict):
        raise ConfigError(path, "must be an object with start, stop, points")
    tmp = {path: block}
    start = _num(tmp, path, "start")
    stop = _num(tmp, path, "stop")
    points = _int(tmp, path, "points", minimum=1)
    if points > 1 and not stop > start:
        raise ConfigError(path, "stop must exceed start (grids are increasing)")
    return {"start": start, "stop": stop, "points": points}


def validate_config(cfg: dict) -> dict:
    """Check types and ranges; returns a normalized copy."""
    if not isinstance(cfg, dict):
        raise ConfigError("config", "must be a JSON object")
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    cfg = merge(DEFAULTS, cfg)
    for section in ("potential", "laser", "delta_grid", "spectrum", "truncation"):
        if not isinstance(cfg[section], dict):
            raise ConfigError(section, "must be an object")
        extra = set(cfg[section]) - set(DEFAULTS[section])
        if extra:
            raise ConfigError(f"{section}.{sorted(extra)[0]}", "unknown key")

    if cfg["task"] not in TASKS:
        raise ConfigError("task", f"must be one of {TASKS}")
    pot = cfg["potential"]
    if pot["kind"] not in POTENTIALS:
        raise ConfigError("potential.kind", f"must be one of {POTENTIALS}")
    pot["nu"] = _num(cfg, "potential", "nu", positive=True)
    pot["n_levels"] = _int(cfg, "potential", "n_levels", minimum=2, allow_none=True)
    if pot["kind"] == "morse":
        pot["a"] = _num(cfg, "potential", "a")
        if pot["a"] <= 0.5:
            raise ConfigError("potential.a", "must exceed 1/2")
    else:
        pot["a"] = None

    las = cfg["laser"]
    las["delta"] = _num(cfg, "laser", "delta")
    las["omega"] = _num(cfg, "laser", "omega", positive=True)
    las["cos_phi"] = _num(cfg, "laser", "cos_phi", lo=-1.0, hi=1.0)
    las["cos_psi"] = _num(cfg, "laser", "cos_psi", lo=-1.0, hi=1.0)
    las["eta"] = _num(cfg, "laser", "eta", positive=True, hi=0.999)
    las["alpha"] = _num(cfg, "laser", "alpha", positive=True, hi=1.0)

    cfg["delta_grid"] = _grid(cfg["delta_grid"], "delta_grid")
    spec = cfg["spectrum"]
    if spec["mode"] not in ("full", "low_intensity"):
        raise ConfigError("spectrum.mode", "must be 'full' or 'low_intensity'")
    if not isinstance(spec["psi_average"], bool):
        raise ConfigError("spectrum.psi_average", "must be true or false")
    if spec["grid"] is not None:
        spec["grid"] = _grid(spec["grid"], "spectrum.grid")

    cfg["truncation"]["tol"] = _num(cfg, "truncation", "tol", positive=True)
    cfg["truncation"]["step"] = _int(cfg, "truncation", "step")
    cfg["truncation"]["max"] = _int(cfg, "truncation", "max", minimum=2)
    return cfg


# builders -------------------------------------------------------------------

def laser_params(cfg: dict, delta: float | None = None) -> LaserParams:
    las = cfg["laser"]
    return LaserParams(delta=las["delta"] if delta is None else delta, omega=las["omega"],
                       gamma=1.0, cos_phi=las["cos_phi"], cos_psi=las["cos_psi"],
                       eta=las["eta"], alpha=las["alpha"])


def build_basis_factory(cfg: dict):
    """``(factory(n_levels) -> MotionalBasis, fixed n_levels or None)``.

    ``None`` means the truncation should be chosen adaptively.
    """
    pot = cfg["potential"]
    kind, nu, n = pot["kind"], pot["nu"], pot["n_levels"]
    if kind == "square-well":
        return (lambda k: build_square_well(k, nu)), n
    if kind == "morse":
        a = pot["a"]
        return (lambda k: build_morse(a, nu, k)), n if n is not None else morse_bound_states(a)
    return (lambda k: build_harmonic(k, nu)), n if n is not None else HARMONIC_DEFAULT_LEVELS


def delta_grid(cfg: dict) -> np.ndarray:
    g = cfg["delta_grid"]
    return np.linspace(g["start"], g["stop"], g["points"])


def spectrum_grid(cfg: dict):
    g = cfg["spectrum"]["grid"]
    if g is None:
        return None
    return np.linspace(g["start"], g["stop"], g["points"])


def fixed_basis(cfg: dict) -> MotionalBasis | None:
    factory, n = build_basis_factory(cfg)
    return factory(n) if n is not None else None
