"""
JSON run configuration.

Lengths are given in millimeters and volumes in cubic millimeters; they
are converted to SI on load. Frequencies are in Hz and the temperature in
degrees Celsius. The lumped microphone constants ``c_ds`` (m^3/Pa),
``l_ds`` (kg/m^4) and ``r_ds`` (Pa s/m^3) stay in SI.

Blocks
------
air       ``temperature``
mic       ``c_ds, l_ds, r_ds, v_cal, v_lf, d_ch, t_pg``
geometry  ``a0, l0, a1 (optional), l1, d_ch``
target    ``f0, a1_bounds, rel_tol, engine, scan_points, budget``
sweep     ``f_min, f_max, points, spacing (LINEAR | LOG), engine``
mesh      ``elements_per_wavelength``
losses    ``mode (LOSSLESS | BOUNDARY_LAYER), termination (MIC_IMPEDANCE | RIGID)``
stl       ``outer_radius, mount_bore_radius, mount_bore_depth, revolve_segments,
          body_height, groove_depth, groove_width, groove_offset``
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acoustics import AirProperties, MicrophoneModel, air_properties
from .errors import ConfigurationError
from .fem import LossMode, SolveConfig, Termination
from .geometry import FilterGeometry
from .optimize import Engine
from .stl import StlParams

MM = 1e-3
MM3 = 1e-9

BLOCKS = ("air", "mic", "geometry", "target", "sweep", "mesh", "losses", "stl")

_KEYS = {
    "air": {"temperature"},
    "mic": {"c_ds", "l_ds", "r_ds", "v_cal", "v_lf", "d_ch", "t_pg", "note"},
    "geometry": {"a0", "l0", "a1", "l1", "d_ch"},
    "target": {"f0", "a1_bounds", "rel_tol", "engine", "scan_points", "budget"},
    "sweep": {"f_min", "f_max", "points", "spacing", "engine"},
    "mesh": {"elements_per_wavelength"},
    "losses": {"mode", "termination"},
    "stl": {"outer_radius", "mount_bore_radius", "mount_bore_depth", "revolve_segments",
            "body_height", "groove_depth", "groove_width", "groove_offset"},
}


@dataclass(frozen=True)
class TargetSpec:
    f0: float
    a1_bounds: tuple
    rel_tol: float = 1e-5
    engine: Engine = Engine.FEM
    scan_points: int = 16
    budget: int = 200


@dataclass(frozen=True)
class SweepSpec:
    f_min: float
    f_max: float
    points: int
    spacing: str = "LOG"
    engine: Engine = Engine.FEM

    def frequencies(self) -> np.ndarray:
        if self.spacing == "LINEAR":
            return np.linspace(self.f_min, self.f_max, self.points)
        return np.geomspace(self.f_min, self.f_max, self.points)


def parse_override(text: str):
    """Split ``block.key=value``; the value is read as JSON when it parses, else as a string."""
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} must look like block.key=value")
    path, raw = text.split("=", 1)
    parts = path.strip().split(".")
    if len(parts) != 2 or not all(parts):
        raise ConfigurationError(f"override {text!r} must name exactly block.key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return parts[0], parts[1], value


def apply_overrides(raw: dict, overrides) -> dict:
    out = copy.deepcopy(raw)
    for item in overrides or ():
        block, key, value = parse_override(item)
        if block not in BLOCKS:
            raise ConfigurationError(f"override names unknown block {block!r}")
        out.setdefault(block, {})[key] = value
    return out


def config_hash(raw: dict) -> str:
    """SHA-256 of the canonical JSON form of a configuration."""
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()


class RunConfig:
    """
    Validated view of a raw configuration dictionary.

    Blocks are parsed lazily by the accessors; a missing block raises
    ConfigurationError naming it, while ``air``, ``mesh`` and ``losses``
    fall back to 20 degC, 12 elements per wavelength and boundary-layer
    losses with the microphone termination.
    """

    def __init__(self, raw: dict):
        if not isinstance(raw, dict):
            raise ConfigurationError("configuration must be a JSON object")
        for block, body in raw.items():
            if block.startswith("_"):
                continue
            if block not in BLOCKS:
                raise ConfigurationError(f"unknown block {block!r}")
            if not isinstance(body, dict):
                raise ConfigurationError(f"block {block!r} must be an object")
            unknown = set(body) - _KEYS[block]
            if unknown:
                raise ConfigurationError(f"block {block!r} has unknown keys {sorted(unknown)}")
        self.raw = raw

    @classmethod
    def load(cls, path, overrides=()) -> "RunConfig":
        text = Path(path).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
        return cls(apply_overrides(raw, overrides))

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def has(self, block: str) -> bool:
        return block in self.raw

    def block(self, name: str) -> dict:
        if name not in self.raw:
            raise ConfigurationError(f"missing '{name}' block")
        return self.raw[name]

    def _num(self, block: str, key: str, default=None, positive=True, scale=1.0):
        body = self.raw.get(block, {})
        if key not in body or body[key] is None:
            if default is None:
                raise ConfigurationError(f"block '{block}' is missing '{key}'")
            return default
        value = body[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigurationError(f"{block}.{key} must be a finite number, got {value!r}")
        if positive and not value > 0:
            raise ConfigurationError(f"{block}.{key} must be positive, got {value!r}")
        return float(value) * scale

    def _enum(self, block: str, key: str, enum, default):
        value = self.raw.get(block, {}).get(key, default.value if hasattr(default, "value") else default)
        try:
            return enum(str(value).upper())
        except ValueError:
            choices = ", ".join(e.value for e in enum)
            raise ConfigurationError(f"{block}.{key}={value!r} is not one of {choices}") from None

    def air(self) -> AirProperties:
        t = self.raw.get("air", {}).get("temperature", 20.0)
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise ConfigurationError(f"air.temperature must be a number, got {t!r}")
        try:
            return air_properties(float(t))
        except ValueError as exc:
            raise ConfigurationError(f"air.temperature: {exc}") from None

    def mic(self) -> MicrophoneModel:
        self.block("mic")
        return MicrophoneModel(
            c_ds=self._num("mic", "c_ds"), l_ds=self._num("mic", "l_ds"), r_ds=self._num("mic", "r_ds"),
            v_cal=self._num("mic", "v_cal", scale=MM3), v_lf=self._num("mic", "v_lf", scale=MM3),
            d_ch=self._num("mic", "d_ch", scale=MM), t_pg=self._num("mic", "t_pg", scale=MM),
        )

    def geometry(self, require_a1: bool = True) -> FilterGeometry:
        body = self.block("geometry")
        a1 = body.get("a1")
        if a1 is None and require_a1:
            raise ConfigurationError("geometry.a1 is required for this command")
        return FilterGeometry(
            a0=self._num("geometry", "a0", scale=MM), l0=self._num("geometry", "l0", scale=MM),
            a1=None if a1 is None else self._num("geometry", "a1", scale=MM),
            l1=self._num("geometry", "l1", scale=MM), d_ch=self._num("geometry", "d_ch", scale=MM),
        )

    def solve_config(self) -> SolveConfig:
        return SolveConfig(
            loss_mode=self._enum("losses", "mode", LossMode, LossMode.BOUNDARY_LAYER),
            nodal_plane_termination=self._enum("losses", "termination", Termination, Termination.MIC_IMPEDANCE),
            elements_per_wavelength=self._num("mesh", "elements_per_wavelength", default=12.0),
        )

    def needs_mic(self) -> bool:
        return self.solve_config().nodal_plane_termination is Termination.MIC_IMPEDANCE

    def mic_if_needed(self) -> MicrophoneModel | None:
        return self.mic() if self.needs_mic() else None

    def target(self) -> TargetSpec:
        body = self.block("target")
        bounds = body.get("a1_bounds")
        if not (isinstance(bounds, list) and len(bounds) == 2):
            raise ConfigurationError("target.a1_bounds must be a two-element list [lo, hi] in mm")
        lo, hi = (float(b) * MM for b in bounds)
        if not lo < hi:
            raise ConfigurationError("target.a1_bounds must satisfy lo < hi")
        return TargetSpec(
            f0=self._num("target", "f0"), a1_bounds=(lo, hi),
            rel_tol=self._num("target", "rel_tol", default=1e-5),
            engine=self._enum("target", "engine", Engine, Engine.FEM),
            scan_points=int(self._num("target", "scan_points", default=16)),
            budget=int(self._num("target", "budget", default=200)),
        )

    def sweep(self) -> SweepSpec:
        self.block("sweep")
        f_min, f_max = self._num("sweep", "f_min"), self._num("sweep", "f_max")
        if not f_min < f_max:
            raise ConfigurationError("sweep.f_min must be below sweep.f_max")
        points = self._num("sweep", "points")
        if points != int(points) or points < 1:
            raise ConfigurationError("sweep.points must be a positive integer")
        spacing = str(self.raw["sweep"].get("spacing", "LOG")).upper()
        if spacing not in ("LINEAR", "LOG"):
            raise ConfigurationError(f"sweep.spacing={spacing!r} is not one of LINEAR, LOG")
        return SweepSpec(f_min, f_max, int(points), spacing,
                         self._enum("sweep", "engine", Engine, Engine.FEM))

    def stl(self) -> StlParams:
        self.block("stl")
        body = self.raw["stl"]
        height = body.get("body_height")
        return StlParams(
            outer_radius=self._num("stl", "outer_radius", scale=MM),
            mount_bore_radius=self._num("stl", "mount_bore_radius", scale=MM),
            mount_bore_depth=self._num("stl", "mount_bore_depth", scale=MM),
            revolve_segments=int(self._num("stl", "revolve_segments", default=256)),
            body_height=None if height is None else self._num("stl", "body_height", scale=MM),
            groove_depth=self._num("stl", "groove_depth", default=0.0, positive=False, scale=MM),
            groove_width=self._num("stl", "groove_width", default=0.0, positive=False, scale=MM),
            groove_offset=self._num("stl", "groove_offset", default=0.0, positive=False, scale=MM),
        )
