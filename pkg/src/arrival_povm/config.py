"""Simulation config files: JSON mirroring PacketModel / ArrivalSurface / SimConfig."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .bohmian_sim import ArrivalSurface, PacketModel, SimConfig, StepControl
from .spin_algebra import Direction
from .time_distributions import TimeGrid


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class SimulationSetup:
    model: PacketModel
    surface: ArrivalSurface
    directions: list
    sim: SimConfig
    config_hash: str


def bundled_config_path() -> Path:
    return Path(str(resources.files("arrival_povm") / "data" / "dd_phenomenon.json"))


def _get(d: dict, key: str, where: str, default=...):
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    if key not in d:
        if default is ...:
            raise ConfigError(f"{where}.{key}" if where else key, "missing required field")
        return default
    return d[key]


def _number(value, field: str, kind=float):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(field, f"expected a {kind.__name__}, got {value!r}") from None


def _vector(value, field: str):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(field, f"expected a list of three numbers, got {value!r}")
    return tuple(_number(v, field) for v in value)


def parse_config(raw: dict, seed: int | None = None, spin_term: bool | None = None, text: bytes = b"") -> SimulationSetup:
    m = _get(raw, "model", "")
    s = _get(raw, "surface", "")
    c = _get(raw, "sim", "")
    try:
        model = PacketModel(
            initial_width=_number(_get(m, "initial_width", "model"), "model.initial_width"),
            initial_center=_vector(_get(m, "initial_center", "model"), "model.initial_center"),
            initial_wavevector=_vector(_get(m, "initial_wavevector", "model"), "model.initial_wavevector"),
            mass=_number(_get(m, "mass", "model", 1.0), "model.mass"),
            hbar=_number(_get(m, "hbar", "model", 1.0), "model.hbar"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("model", str(exc)) from None
    surface = ArrivalSurface(
        Direction.from_vector(_vector(_get(s, "plane_normal", "surface"), "surface.plane_normal")),
        _number(_get(s, "plane_offset", "surface"), "surface.plane_offset"),
    )
    try:
        surface.check_start(model)
    except ValueError as exc:
        raise ConfigError("surface.plane_offset", str(exc)) from None

    g = _get(c, "grid", "sim")
    try:
        grid = TimeGrid(
            _number(_get(g, "t_start", "sim.grid"), "sim.grid.t_start"),
            _number(_get(g, "bin_width", "sim.grid"), "sim.grid.bin_width"),
            _number(_get(g, "bin_count", "sim.grid"), "sim.grid.bin_count", int),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("sim.grid", str(exc)) from None
    sc = _get(c, "step_control", "sim", {})
    try:
        step = StepControl(
            _number(_get(sc, "initial_step", "sim.step_control", 0.05), "sim.step_control.initial_step"),
            _number(_get(sc, "atol", "sim.step_control", 1e-8), "sim.step_control.atol"),
            _number(_get(sc, "rtol", "sim.step_control", 1e-8), "sim.step_control.rtol"),
        )
        sim = SimConfig(
            trajectories=_number(_get(c, "trajectories", "sim"), "sim.trajectories", int),
            horizon=_number(_get(c, "horizon", "sim"), "sim.horizon"),
            grid=grid,
            seed=seed if seed is not None else _number(_get(c, "seed", "sim", 0), "sim.seed", int),
            step_control=step,
            spin_term=spin_term if spin_term is not None else bool(_get(c, "spin_term", "sim", True)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("sim", str(exc)) from None

    dirs = _get(raw, "directions", "")
    if not isinstance(dirs, list) or not dirs:
        raise ConfigError("directions", "expected a non-empty list of 3-vectors")
    directions = [Direction.from_vector(_vector(v, f"directions[{i}]")) for i, v in enumerate(dirs)]
    return SimulationSetup(model, surface, directions, sim, hashlib.sha256(text).hexdigest())


def load_config(path, seed: int | None = None, spin_term: bool | None = None) -> SimulationSetup:
    text = Path(path).read_bytes()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return parse_config(raw, seed, spin_term, text)
