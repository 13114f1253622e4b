"""Key-value configuration file (INI sections) for every tunable default."""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .environment import GridAxis, ParkingType, QuantizationGrid, default_grid
from .geometry import VehicleSpec
from .hybrid_astar import PlannerConfig
from .selector import DEFAULT_SCALES


@dataclass
class Settings:
    vehicle: VehicleSpec = field(default_factory=VehicleSpec)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    grids: dict = field(default_factory=lambda: {t: default_grid(t) for t in ParkingType})
    scales: tuple = DEFAULT_SCALES
    n_per_env: int = 8
    seed: int = 0
    # planner overrides used for offline collection only
    offline_node_cap: int = 20_000


_ANGLES = {"max_steer", "goal_tol_theta"}  # stored in degrees on disk
_SCALE_KEYS = ("x", "y", "theta", "w_lane", "w_spot", "d_deadend")


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _deg(rad: float) -> str:
    # 12 digits undo the radian round trip for values typed in degrees
    return f"{math.degrees(rad):.12g}"


def dump_settings(s: Settings) -> str:
    cp = configparser.ConfigParser()
    cp["vehicle"] = {
        f.name: _deg(getattr(s.vehicle, f.name)) if f.name in _ANGLES else _fmt(getattr(s.vehicle, f.name))
        for f in fields(s.vehicle)
    }
    v = s.vehicle
    if v.rear_overhang == (v.body_length - v.wheelbase) / 2.0:
        cp["vehicle"]["rear_overhang"] = ""  # derived: axles centred in the body
    planner = {}
    for f in fields(s.planner):
        v = getattr(s.planner, f.name)
        if f.name == "steer_values":
            planner[f.name] = "" if v is None else " ".join(_deg(x) for x in v)
        else:
            planner[f.name] = _deg(v) if f.name in _ANGLES else _fmt(v)
    cp["planner"] = planner
    for t in ParkingType:
        g = s.grids[t]
        cp[f"grid.{t.value}"] = {
            name: f"{a.min:g}:{a.max:g}:{a.step:g}" for name, a in zip(("w_lane", "w_spot", "d_deadend"), (g.w_lane, g.w_spot, g.d_deadend))
        }
    cp["scales"] = {k: _fmt(float(v)) for k, v in zip(_SCALE_KEYS, s.scales)}
    cp["offline"] = {"n_per_env": str(s.n_per_env), "seed": str(s.seed), "node_cap": str(s.offline_node_cap)}
    lines = []
    for sec in cp.sections():
        lines.append(f"[{sec}]")
        for k, v in cp[sec].items():
            lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)


def _convert(template, key: str, text: str):
    if key == "steer_values":
        text = text.strip()
        return None if not text else tuple(math.radians(float(x)) for x in text.split())
    if key == "rear_overhang" and text.strip().lower() in ("", "none"):
        return None
    if isinstance(template, bool):
        return text.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(text)
    v = float(text)
    return math.radians(v) if key in _ANGLES else v


def _apply(obj, section: configparser.SectionProxy, where: str):
    known = {f.name: getattr(obj, f.name) for f in fields(obj)}
    changes = {}
    for key, text in section.items():
        if key not in known:
            raise ValueError(f"[{where}] unknown key {key!r}")
        template = known[key]
        if template is None and key == "rear_overhang":
            template = 0.0
        try:
            changes[key] = _convert(template, key, text)
        except ValueError as exc:
            raise ValueError(f"[{where}] {key}: {exc}") from None
    return replace(obj, **changes)


def load_settings(path: Optional[str | Path] = None) -> Settings:
    """Defaults overlaid with the file's values. Unknown keys are errors."""
    s = Settings()
    if path is None:
        return s
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    for sec in cp.sections():
        if sec not in ("vehicle", "planner", "scales", "offline") and not sec.startswith("grid."):
            raise ValueError(f"unknown section [{sec}]")
    if cp.has_section("vehicle"):
        s.vehicle = _apply(s.vehicle, cp["vehicle"], "vehicle")
    if cp.has_section("planner"):
        s.planner = _apply(s.planner, cp["planner"], "planner")
    for t in ParkingType:
        sec = f"grid.{t.value}"
        if cp.has_section(sec):
            g = s.grids[t]
            axes = {"w_lane": g.w_lane, "w_spot": g.w_spot, "d_deadend": g.d_deadend}
            for key, text in cp[sec].items():
                if key not in axes:
                    raise ValueError(f"[{sec}] unknown key {key!r}")
                axes[key] = GridAxis(*(float(v) for v in text.split(":")))
            s.grids[t] = QuantizationGrid(**axes)
    if cp.has_section("scales"):
        sc = dict(zip(_SCALE_KEYS, s.scales))
        for key, text in cp["scales"].items():
            if key not in sc:
                raise ValueError(f"[scales] unknown key {key!r}")
            sc[key] = float(text)
        s.scales = tuple(sc[k] for k in _SCALE_KEYS)
    if cp.has_section("offline"):
        off = cp["offline"]
        for key in off:
            if key not in ("n_per_env", "seed", "node_cap"):
                raise ValueError(f"[offline] unknown key {key!r}")
        s.n_per_env = off.getint("n_per_env", s.n_per_env)
        s.seed = off.getint("seed", s.seed)
        s.offline_node_cap = off.getint("node_cap", s.offline_node_cap)
    return s
