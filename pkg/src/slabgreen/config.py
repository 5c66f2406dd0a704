"""Run configuration: a nested YAML (or JSON) document validated against a fixed schema."""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .field import SourceSpec
from .profile import WaveguideProfile, build_profile

ENV_VAR = "SLABGREEN_CONFIG"

#: every accepted key with its default (``None`` marks a required or optional-without-default key)
DEFAULTS = {
    "profile": {"k": None, "h": None, "n_cl": None, "n_co_const": None, "n_co_table": None},
    "ode": {"abs_tol": 1e-12, "rel_tol": 1e-12},
    "modes": {"scan_points": 512, "root_tol": 1e-14},
    "quadrature": {"rtol": 1e-11, "atol": 1e-14},
    "source": {
        "kind": "point",
        "x": 0.0,
        "z": 0.0,
        "weight": 1.0,
        "points": None,
        "weights": None,
        "box": None,
        "amplitude": 1.0,
        "nx": 8,
        "nz": 8,
    },
    "grid": {"x_min": -2.0, "x_max": 2.0, "nx": 41, "z_min": 1.0, "z_max": 5.0, "nz": 41, "route": "auto"},
    "radcheck": {
        "family": "omega_stadium",
        "R_min": 25.0,
        "R_max": 200.0,
        "n_R": 7,
        "n_points": 64,
        "compact": False,
    },
    "output": {"dir": ".", "prefix": "slabgreen"},
}


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass
class RunConfig:
    data: dict
    path: Path | None = None

    def section(self, name: str) -> dict:
        return self.data[name]

    @property
    def ode_tol(self) -> dict:
        return dict(self.data["ode"])

    def profile(self) -> WaveguideProfile:
        p = self.data["profile"]
        n_co = p["n_co_const"] if p["n_co_const"] is not None else [tuple(row) for row in p["n_co_table"]]
        try:
            return build_profile(p["k"], p["h"], p["n_cl"], n_co)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"profile: {exc}") from exc

    def source(self) -> SourceSpec:
        s = self.data["source"]
        kind = s["kind"]
        try:
            if kind == "point":
                return SourceSpec.point(float(s["x"]), float(s["z"]), complex(s["weight"]))
            if kind == "point_set":
                w = s["weights"] if s["weights"] is not None else [1.0] * len(s["points"] or [])
                return SourceSpec.point_set(s["points"], [complex(v) for v in w])
            if kind == "density":
                if s["box"] is None:
                    raise ConfigError("source.box is required for a density source")
                x0, x1, z0, z1 = (float(v) for v in s["box"])
                amp = complex(s["amplitude"])
                return SourceSpec.density(lambda X, Z: np.full(X.shape, amp), (x0, x1), (z0, z1), s["nx"], s["nz"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"source: {exc}") from exc
        raise ConfigError(f"source.kind must be point, point_set or density, got {kind!r}")

    def grid(self):
        g = self.data["grid"]
        return np.linspace(g["x_min"], g["x_max"], g["nx"]), np.linspace(g["z_min"], g["z_max"], g["nz"])

    def output_path(self, suffix: str) -> Path:
        o = self.data["output"]
        return Path(o["dir"]) / f"{o['prefix']}_{suffix}"


def _merge(defaults: dict, given: dict, where: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        name = f"{where}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key {name!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{name!r} must be a mapping")
            out[key] = _merge(defaults[key], value, f"{name}.")
        else:
            out[key] = value
    return out


def _positive(data, section, keys):
    for key in keys:
        v = data[section][key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v) or v <= 0:
            raise ConfigError(f"{section}.{key} must be a positive number, got {v!r}")


def validate(data: dict) -> dict:
    """Merge ``data`` into the defaults and check every value."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    merged = _merge(DEFAULTS, data)
    p = merged["profile"]
    missing = [k for k in ("k", "h", "n_cl") if p[k] is None]
    if missing:
        raise ConfigError(f"profile is missing {', '.join(missing)}")
    _positive(merged, "profile", ("k", "h", "n_cl"))
    if (p["n_co_const"] is None) == (p["n_co_table"] is None):
        raise ConfigError("give exactly one of profile.n_co_const and profile.n_co_table")
    if p["n_co_const"] is not None:
        _positive(merged, "profile", ("n_co_const",))
    else:
        table = p["n_co_table"]
        if not isinstance(table, list) or any(not isinstance(r, (list, tuple)) or len(r) != 2 for r in table):
            raise ConfigError("profile.n_co_table must be a list of [x, n] pairs")
    _positive(merged, "ode", ("abs_tol", "rel_tol"))
    _positive(merged, "quadrature", ("rtol", "atol"))
    _positive(merged, "modes", ("scan_points", "root_tol"))
    _positive(merged, "grid", ("nx", "nz"))
    _positive(merged, "radcheck", ("R_min", "R_max", "n_R", "n_points"))
    _positive(merged, "source", ("nx", "nz"))
    g = merged["grid"]
    if g["x_max"] < g["x_min"] or g["z_max"] < g["z_min"]:
        raise ConfigError("grid ranges must be increasing")
    if g["route"] not in ("auto", "real", "contour"):
        raise ConfigError("grid.route must be auto, real or contour")
    r = merged["radcheck"]
    if r["R_max"] <= r["R_min"]:
        raise ConfigError("radcheck.R_max must exceed radcheck.R_min")
    if r["family"] not in ("omega_stadium", "q_square"):
        raise ConfigError("radcheck.family must be omega_stadium or q_square")
    return merged


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Read and validate a config file; ``path`` falls back to ``$SLABGREEN_CONFIG``."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        raise ConfigError(f"no config given (use --config or set {ENV_VAR})")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)  # JSON is a subset of YAML
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return RunConfig(validate(data or {}), path)
